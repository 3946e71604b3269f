#pragma once

// Small dense linear algebra: the matrices in this project are at most a
// few dozen rows, so everything is plain row-major storage.

#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace daeh::linalg {

using Vector = std::vector<double>;
using Complex = std::complex<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);

  const std::vector<double>& data() const { return data_; }

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double norm_inf(std::span<const double> v);
double norm2(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double norm1(const Matrix& a);     // max column sum
double norm_inf(const Matrix& a);  // max row sum
double norm_fro(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// LU with partial pivoting, generic over real and complex scalars.
template <class T>
class Lu {
 public:
  explicit Lu(std::vector<T> a, std::size_t n);

  std::size_t size() const { return n_; }
  /// A pivot was exactly zero.
  bool exactly_singular() const { return zero_pivot_; }
  T determinant() const;
  std::vector<T> solve(std::span<const T> b) const;

 private:
  std::vector<T> lu_;
  std::vector<std::size_t> perm_;
  std::size_t n_;
  int sign_ = 1;
  bool zero_pivot_ = false;
};

Lu<double> lu(const Matrix& a);
Vector solve(const Matrix& a, std::span<const double> b);
Matrix solve(const Matrix& a, const Matrix& b);
Matrix inverse(const Matrix& a);
double determinant(const Matrix& a);

/// Determinant after scaling every row to unit max-abs entry.  Scale-free
/// measure used for singularity thresholds.
double scaled_determinant(const Matrix& a);

/// Full Householder QR, A = Q R with Q square orthogonal.
struct QrResult {
  Matrix q;
  Matrix r;
};
QrResult householder_qr(const Matrix& a);

/// Orthonormal basis (as columns) of ker(a) for a full-row-rank a.
Matrix null_space_basis(const Matrix& a);

struct EigenResult {
  std::vector<Complex> values;
  double max_backward_error = 0.0;  // max ||Av - mu v|| / ||A|| over pairs
  int iterations = 0;
};

/// Closed form for n <= 2, Householder-Hessenberg + shifted QR otherwise.
/// Values are sorted by (real part, imaginary part).
EigenResult eigenvalues(const Matrix& a);

/// Eigenvector for `mu` by inverse iteration.
std::vector<Complex> inverse_iteration(const Matrix& a, Complex mu, int iterations = 3);

struct SvdResult {
  Matrix u;  // columns are left singular vectors
  Vector sigma;  // descending
  Matrix v;  // columns are right singular vectors, A = U diag(sigma) V^T
  int sweeps = 0;
};

/// One-sided (Hestenes) Jacobi SVD of a square matrix.
SvdResult jacobi_svd(const Matrix& a);

/// Matrix exponential by Pade(6,6) approximation with scaling and squaring.
Matrix expm(const Matrix& a);

/// Random orthogonal matrix from QR of a matrix with entries in [-1, 1].
template <class Rng>
Matrix random_orthogonal(std::size_t n, Rng& rng);

}  // namespace daeh::linalg

#include "daeh/linalg_impl.hpp"
