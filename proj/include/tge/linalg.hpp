#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tge/kernels.hpp"

namespace tge {

// Dense row-major matrix. Vectors are 1xN matrices where convenient.
template <typename T>
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, T(0)) {}

  T* row(std::size_t i) { return a.data() + i * cols; }
  const T* row(std::size_t i) const { return a.data() + i * cols; }
  T& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  T operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  std::size_t size() const { return a.size(); }
  void zero() { std::fill(a.begin(), a.end(), T(0)); }
};

template <typename S, typename T>
Mat<S> mat_cast(const Mat<T>& m) {
  Mat<S> out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.a.size(); ++i) out.a[i] = static_cast<S>(m.a[i]);
  return out;
}

// C += A * B      (A: m x k, B: k x n, C: m x n)
template <typename T>
void gemm_nn(Mat<T>& C, const Mat<T>& A, const Mat<T>& B) {
  assert(A.cols == B.rows && C.rows == A.rows && C.cols == B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t p = 0; p < A.cols; ++p) kern::axpy(C.row(i), A(i, p), B.row(p), B.cols);
}

// C += A * B^T    (A: m x k, B: n x k, C: m x n)
template <typename T>
void gemm_nt(Mat<T>& C, const Mat<T>& A, const Mat<T>& B) {
  assert(A.cols == B.cols && C.rows == A.rows && C.cols == B.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < B.rows; ++j) C(i, j) += kern::dot(A.row(i), B.row(j), A.cols);
}

// C += A^T * B    (A: k x m, B: k x n, C: m x n)
template <typename T>
void gemm_tn(Mat<T>& C, const Mat<T>& A, const Mat<T>& B) {
  assert(A.rows == B.rows && C.rows == A.cols && C.cols == B.cols);
  for (std::size_t p = 0; p < A.rows; ++p)
    for (std::size_t i = 0; i < A.cols; ++i) kern::axpy(C.row(i), A(p, i), B.row(p), B.cols);
}

// y = x * W + b applied row-wise (x: m x k, W: k x n, b: n)
template <typename T>
Mat<T> affine(const Mat<T>& x, const Mat<T>& w, const std::vector<T>& b) {
  assert(x.cols == w.rows && b.size() == w.cols);
  Mat<T> y(x.rows, w.cols);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) = b[j];
  gemm_nn(y, x, w);
  return y;
}

// In-place, max-shifted. Returns the normalizer log(sum exp(x - max)) + max.
template <typename T>
T softmax_row(T* x, std::size_t n) {
  const T m = kern::vmax(x, n);
  T s = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::exp(x[i] - m);
    s += x[i];
  }
  kern::scal(x, T(1) / s, n);
  return std::log(s) + m;
}

template <typename T>
T cosine(const T* a, const T* b, std::size_t n) {
  const T na = kern::dot(a, a, n);
  const T nb = kern::dot(b, b, n);
  if (na == T(0) || nb == T(0)) return T(0);
  return kern::dot(a, b, n) / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace tge
