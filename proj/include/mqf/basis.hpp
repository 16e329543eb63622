#pragma once

#include <cstddef>
#include <vector>

#include "mqf/matrix.hpp"

namespace mqf {

using Exponents = std::vector<unsigned>;

/// Polynomial monomials of total degree <= rank over `action_dim` variables.
///
/// Order: ascending total degree; within one degree, exponent tuples in
/// descending lexicographic order, so for d = 2, r = 2 the sequence is
/// 1, a0, a1, a0^2, a0*a1, a1^2. Checkpoints rely on this order.
class MonomialBasis {
 public:
  MonomialBasis(std::size_t action_dim, std::size_t rank);

  std::size_t action_dim() const noexcept { return action_dim_; }
  std::size_t rank() const noexcept { return rank_; }
  std::size_t size() const noexcept { return exponents_.size(); }
  const std::vector<Exponents>& exponents() const noexcept { return exponents_; }

  friend bool operator==(const MonomialBasis&, const MonomialBasis&) = default;

 private:
  std::size_t action_dim_;
  std::size_t rank_;
  std::vector<Exponents> exponents_;
};

MonomialBasis enumerate_monomials(std::size_t action_dim, std::size_t rank);

/// C(n, k) computed exactly for the small arguments used here.
std::size_t binomial(std::size_t n, std::size_t k);

/// Feature matrix (basis size x k): entry (j, i) is monomial j at action i.
/// Actions are rows of `actions` (k x action_dim) with components in [-1, 1].
Matrix2D phi(const MonomialBasis& basis, const Matrix2D& actions);

/// Q-values (b x k) of k actions in b states: coeffs (b x m) times features (m x k).
Matrix2D q_from_coefficients(const Matrix2D& coeffs, const Matrix2D& features);

namespace reference {
/// Serial per-entry evaluation of `phi`, kept for tests and benchmarks.
Matrix2D phi(const MonomialBasis& basis, const Matrix2D& actions);
}  // namespace reference

}  // namespace mqf
