#include "mqf/kernels.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "mqf/errors.hpp"

namespace mqf::kernels {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 16;

void require(bool ok, const char* op, const Matrix2D& a, const Matrix2D& b) {
  if (!ok) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

std::size_t chunk_count(std::size_t rows) { return (rows + kRowChunk - 1) / kRowChunk; }

}  // namespace

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Matrix2D c(a.rows(), b.cols());
  if (c.empty()) return c;
  const ConstMap A(a.data(), a.rows(), a.cols());
  const ConstMap B(b.data(), b.rows(), b.cols());
  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(a.rows()));
  const bool parallel = chunks > 1 && a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
    const auto r0 = static_cast<Eigen::Index>(ch) * kRowChunk;
    const auto len = std::min<Eigen::Index>(kRowChunk, static_cast<Eigen::Index>(a.rows()) - r0);
    MutMap C(c.data() + r0 * c.cols(), len, c.cols());
    C.noalias() = A.middleRows(r0, len) * B;
  }
  return c;
}

Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  Matrix2D c(a.rows(), b.rows());
  if (c.empty()) return c;
  const ConstMap A(a.data(), a.rows(), a.cols());
  const ConstMap B(b.data(), b.rows(), b.cols());
  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(a.rows()));
  const bool parallel = chunks > 1 && a.rows() * a.cols() * b.rows() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
    const auto r0 = static_cast<Eigen::Index>(ch) * kRowChunk;
    const auto len = std::min<Eigen::Index>(kRowChunk, static_cast<Eigen::Index>(a.rows()) - r0);
    MutMap C(c.data() + r0 * c.cols(), len, c.cols());
    C.noalias() = A.middleRows(r0, len) * B.transpose();
  }
  return c;
}

Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  Matrix2D c(a.cols(), b.cols());
  if (c.empty()) return c;
  const ConstMap A(a.data(), a.rows(), a.cols());
  const ConstMap B(b.data(), b.rows(), b.cols());
  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(a.cols()));
  const bool parallel = chunks > 1 && a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) {
    const auto r0 = static_cast<Eigen::Index>(ch) * kRowChunk;
    const auto len = std::min<Eigen::Index>(kRowChunk, static_cast<Eigen::Index>(a.cols()) - r0);
    MutMap C(c.data() + r0 * c.cols(), len, c.cols());
    C.noalias() = A.middleCols(r0, len).transpose() * B;
  }
  return c;
}

void add_row_vector(Matrix2D& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw ShapeError("add_row_vector: length mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* row = m.data() + r * m.cols();
#pragma omp simd
    for (std::size_t c = 0; c < v.size(); ++c) row[c] += v[c];
  }
}

std::vector<double> column_sums(const Matrix2D& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
#pragma omp simd
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c];
  }
  return out;
}

namespace {

// Max first (vectorizable), then the first column holding it.
void scan_row(const double* row, std::size_t n, std::size_t& index, double& value) {
  double best = row[0];
#pragma omp simd reduction(max : best)
  for (std::size_t c = 1; c < n; ++c) best = row[c] > best ? row[c] : best;
  std::size_t at = 0;
  while (row[at] != best) ++at;
  index = at;
  value = best;
}

}  // namespace

RowMax row_argmax(const Matrix2D& m) {
  RowMax out{std::vector<std::size_t>(m.rows(), 0), std::vector<double>(m.rows(), 0.0)};
  if (m.cols() == 0) throw ShapeError("row_argmax: matrix has no columns");
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
  const bool parallel = m.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t r = 0; r < rows; ++r) scan_row(m.data() + r * m.cols(), m.cols(), out.index[r], out.value[r]);
  return out;
}

RowMax max_of_product(const Matrix2D& a, const Matrix2D& b) {
  require(a.cols() == b.rows(), "max_of_product", a, b);
  if (b.cols() == 0) throw ShapeError("max_of_product: no columns");
  RowMax out{std::vector<std::size_t>(a.rows(), 0), std::vector<double>(a.rows(), 0.0)};
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  const bool parallel = a.rows() * inner * n >= kParallelWork;
#pragma omp parallel if (parallel)
  {
    std::vector<double, AlignedAllocator<double>> q(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      double* qd = q.data();
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t k = 0; k < inner; ++k) {
        const double c = a(static_cast<std::size_t>(r), k);
        const double* brow = b.data() + k * n;
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) qd[j] += c * brow[j];
      }
      scan_row(qd, n, out.index[r], out.value[r]);
    }
  }
  return out;
}

namespace reference {

Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  require(a.cols() == b.rows(), "reference::matmul", a, b);
  Matrix2D c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b) {
  require(a.cols() == b.cols(), "reference::matmul_nt", a, b);
  Matrix2D c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b) {
  require(a.rows() == b.rows(), "reference::matmul_tn", a, b);
  Matrix2D c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

void tanh_inplace(std::span<double> values) {
  for (double& v : values) v = std::tanh(v);
}

RowMax row_argmax(const Matrix2D& m) {
  if (m.cols() == 0) throw ShapeError("row_argmax: matrix has no columns");
  RowMax out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
      if (m(r, c) > m(r, best)) best = c;
    out.index.push_back(best);
    out.value.push_back(m(r, best));
  }
  return out;
}

}  // namespace reference

}  // namespace mqf::kernels
