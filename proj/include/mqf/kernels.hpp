#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mqf/matrix.hpp"

/// Data-parallel dense kernels.
///
/// Work is split into fixed chunks of output rows and distributed with
/// OpenMP. The chunking is independent of the thread count, so results are
/// bitwise identical for any OMP_NUM_THREADS. The `reference` namespace holds
/// plain serial loops with the same contracts, kept for tests and benchmarks.
namespace mqf::kernels {

inline constexpr std::size_t kRowChunk = 64;

/// a * b
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);
/// a * b^T
Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b);
/// a^T * b
Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b);

void add_row_vector(Matrix2D& m, std::span<const double> v);
std::vector<double> column_sums(const Matrix2D& m);

void tanh_inplace(std::span<double> values);
void relu_inplace(std::span<double> values);

/// Per-row maximum; ties resolve to the lowest column index.
struct RowMax {
  std::vector<std::size_t> index;
  std::vector<double> value;
};
RowMax row_argmax(const Matrix2D& m);
/// row_argmax(a * b) without storing the product. Entries are accumulated in
/// inner-index order, as in reference::matmul, so the result equals
/// reference::row_argmax(reference::matmul(a, b)) exactly.
RowMax max_of_product(const Matrix2D& a, const Matrix2D& b);

namespace reference {
Matrix2D matmul(const Matrix2D& a, const Matrix2D& b);
Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b);
Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b);
void tanh_inplace(std::span<double> values);
RowMax row_argmax(const Matrix2D& m);
}  // namespace reference

}  // namespace mqf::kernels
