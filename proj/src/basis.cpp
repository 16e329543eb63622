#include "mqf/basis.hpp"

#include <algorithm>
#include <string>

#include "mqf/errors.hpp"
#include "mqf/kernels.hpp"

namespace mqf {

namespace {

// Appends every tuple over dims [dim, d) with the given remaining degree, in
// descending lexicographic order.
void emit_degree(std::size_t dim, unsigned remaining, Exponents& current, std::vector<Exponents>& out) {
  if (dim + 1 == current.size()) {
    current[dim] = remaining;
    out.push_back(current);
    return;
  }
  for (unsigned e = remaining + 1; e-- > 0;) {
    current[dim] = e;
    emit_degree(dim + 1, remaining - e, current, out);
  }
  current[dim] = 0;
}

void check_actions(const MonomialBasis& basis, const Matrix2D& actions) {
  if (actions.cols() != basis.action_dim())
    throw ShapeError("phi: actions have " + std::to_string(actions.cols()) + " columns, basis expects " +
                     std::to_string(basis.action_dim()));
  for (double a : actions.flat())
    if (!(a >= -1.0 && a <= 1.0)) throw DomainError("phi: action component " + std::to_string(a) + " outside [-1, 1]");
}

constexpr std::size_t kActionChunk = 256;

}  // namespace

MonomialBasis::MonomialBasis(std::size_t action_dim, std::size_t rank) : action_dim_(action_dim), rank_(rank) {
  if (action_dim == 0) throw DomainError("MonomialBasis: action_dim must be >= 1");
  Exponents current(action_dim, 0);
  for (unsigned degree = 0; degree <= rank; ++degree) emit_degree(0, degree, current, exponents_);
}

MonomialBasis enumerate_monomials(std::size_t action_dim, std::size_t rank) { return MonomialBasis(action_dim, rank); }

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

Matrix2D phi(const MonomialBasis& basis, const Matrix2D& actions) {
  check_actions(basis, actions);
  const std::size_t k = actions.rows();
  const std::size_t d = basis.action_dim();
  const std::size_t r = basis.rank();
  const auto& exps = basis.exponents();
  Matrix2D features(basis.size(), k);
  const auto chunks = static_cast<std::ptrdiff_t>((k + kActionChunk - 1) / kActionChunk);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
    // Products are accumulated left to right over dimensions, one factor at
    // a time, so every entry is bitwise equal to the serial reference.
    std::vector<double> first(r + 1);
    const std::size_t begin = static_cast<std::size_t>(ch) * kActionChunk;
    const std::size_t end = std::min(k, begin + kActionChunk);
    for (std::size_t i = begin; i < end; ++i) {
      double p = 1.0;
      for (std::size_t e = 0; e <= r; ++e) {
        first[e] = p;
        p *= actions(i, 0);
      }
      for (std::size_t j = 0; j < exps.size(); ++j) {
        double v = first[exps[j][0]];
        for (std::size_t dim = 1; dim < d; ++dim)
          for (unsigned e = 0; e < exps[j][dim]; ++e) v *= actions(i, dim);
        features(j, i) = v;
      }
    }
  }
  return features;
}

Matrix2D q_from_coefficients(const Matrix2D& coeffs, const Matrix2D& features) {
  if (coeffs.cols() != features.rows())
    throw ShapeError("q_from_coefficients: " + std::to_string(coeffs.cols()) + " coefficients vs " +
                     std::to_string(features.rows()) + " basis features");
  return kernels::matmul(coeffs, features);
}

namespace reference {

Matrix2D phi(const MonomialBasis& basis, const Matrix2D& actions) {
  check_actions(basis, actions);
  Matrix2D features(basis.size(), actions.rows());
  for (std::size_t j = 0; j < basis.size(); ++j)
    for (std::size_t i = 0; i < actions.rows(); ++i) {
      double v = 1.0;
      for (std::size_t dim = 0; dim < basis.action_dim(); ++dim)
        for (unsigned e = 0; e < basis.exponents()[j][dim]; ++e) v *= actions(i, dim);
      features(j, i) = v;
    }
  return features;
}

}  // namespace reference

}  // namespace mqf
