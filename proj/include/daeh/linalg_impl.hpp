#pragma once

#include <random>
#include <stdexcept>
#include <utility>

namespace daeh::linalg {

template <class T>
Lu<T>::Lu(std::vector<T> a, std::size_t n) : lu_(std::move(a)), perm_(n), n_(n) {
  if (lu_.size() != n * n) throw std::invalid_argument("Lu: storage does not match size");
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu_[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(lu_[i * n + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_[k * n + j], lu_[p * n + j]);
      std::swap(perm_[k], perm_[p]);
      sign_ = -sign_;
    }
    const T pivot = lu_[k * n + k];
    if (pivot == T(0)) {
      zero_pivot_ = true;
      continue;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const T l = lu_[i * n + k] / pivot;
      lu_[i * n + k] = l;
      if (l == T(0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_[i * n + j] -= l * lu_[k * n + j];
    }
  }
}

template <class T>
T Lu<T>::determinant() const {
  T d = static_cast<T>(sign_);
  for (std::size_t i = 0; i < n_; ++i) d *= lu_[i * n_ + i];
  return d;
}

template <class T>
std::vector<T> Lu<T>::solve(std::span<const T> b) const {
  if (zero_pivot_) throw std::domain_error("Lu::solve: matrix is singular");
  std::vector<T> x(n_);
  for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu_[i * n_ + j] * x[j];
  }
  for (std::size_t i = n_; i-- > 0;) {
    for (std::size_t j = i + 1; j < n_; ++j) x[i] -= lu_[i * n_ + j] * x[j];
    x[i] /= lu_[i * n_ + i];
  }
  return x;
}

template <class Rng>
Matrix random_orthogonal(std::size_t n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = u(rng);
  return householder_qr(a).q;
}

}  // namespace daeh::linalg
