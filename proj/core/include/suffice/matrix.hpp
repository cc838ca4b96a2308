#ifndef SUFFICE_MATRIX_HPP
#define SUFFICE_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace suffice {

/// Dense row-major matrix of doubles. Just enough for small MLPs and
/// tabular feature blocks; nothing here is performance-exotic.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  bool operator==(const Matrix& other) const = default;
};

/// New matrix holding the listed rows of `m`, in the given order.
template <typename IndexContainer>
Matrix gather_rows(const Matrix& m, const IndexContainer& idx) {
  Matrix out(idx.size(), m.cols);
  std::size_t r = 0;
  for (const auto i : idx) {
    const double* src = m.row(static_cast<std::size_t>(i));
    double* dst = out.row(r++);
    for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j];
  }
  return out;
}

}  // namespace suffice

#endif  // SUFFICE_MATRIX_HPP
