#include "daeh/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "daeh/error.hpp"

namespace daeh::linalg {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_column(std::size_t j, std::span<const double> v) {
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix Matrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
  Matrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Matrix::set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
}

Matrix& Matrix::operator+=(const Matrix& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (auto& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm1(const Matrix& a) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    m = std::max(m, s);
  }
  return m;
}

double norm_inf(const Matrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double v : a.row(i)) s += std::abs(v);
    m = std::max(m, s);
  }
  return m;
}

double norm_fro(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

Lu<double> lu(const Matrix& a) { return Lu<double>(a.data(), a.rows()); }

Vector solve(const Matrix& a, std::span<const double> b) { return lu(a).solve(b); }

Matrix solve(const Matrix& a, const Matrix& b) {
  auto f = lu(a);
  Matrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto col = b.column(j);
    x.set_column(j, f.solve(col));
  }
  return x;
}

Matrix inverse(const Matrix& a) { return solve(a, Matrix::identity(a.rows())); }

double determinant(const Matrix& a) { return lu(a).determinant(); }

double scaled_determinant(const Matrix& a) {
  Matrix s = a;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double m = norm_inf(s.row(i));
    if (m == 0.0) return 0.0;
    for (double& v : s.row(i)) v /= m;
  }
  return determinant(s);
}

QrResult householder_qr(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix r = a;
  Matrix q = Matrix::identity(m);
  for (std::size_t k = 0; k < std::min(m - 1, n); ++k) {
    double alpha = 0.0;
    for (std::size_t i = k; i < m; ++i) alpha += r(i, k) * r(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (r(k, k) > 0) alpha = -alpha;
    Vector v(m, 0.0);
    for (std::size_t i = k; i < m; ++i) v[i] = r(i, k);
    v[k] -= alpha;
    const double vv = dot(v, v);
    if (vv == 0.0) continue;
    // R <- H R, Q <- Q H with H = I - 2 v v^T / (v^T v)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += v[i] * r(i, j);
      s *= 2.0 / vv;
      for (std::size_t i = k; i < m; ++i) r(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = k; j < m; ++j) s += q(i, j) * v[j];
      s *= 2.0 / vv;
      for (std::size_t j = k; j < m; ++j) q(i, j) -= s * v[j];
    }
  }
  return {std::move(q), std::move(r)};
}

Matrix null_space_basis(const Matrix& a) {
  // ker(a) is the orthogonal complement of the column space of a^T.
  const std::size_t rank = a.rows();
  const std::size_t n = a.cols();
  auto qr = householder_qr(a.transpose());
  return qr.q.block(0, rank, n, n - rank);
}

namespace {

// Reduce to upper Hessenberg form by Householder similarity transforms.
void hessenberg(Matrix& h) {
  const std::size_t n = h.rows();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha += h(i, k) * h(i, k);
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (h(k + 1, k) > 0) alpha = -alpha;
    Vector v(n, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) v[i] = h(i, k);
    v[k + 1] -= alpha;
    const double vv = dot(v, v);
    if (vv == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += v[i] * h(i, j);
      s *= 2.0 / vv;
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= s * v[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += h(i, j) * v[j];
      s *= 2.0 / vv;
      for (std::size_t j = k + 1; j < n; ++j) h(i, j) -= s * v[j];
    }
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

double sign_of(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

// Francis double-shift QR on an upper Hessenberg matrix (1-based indexing
// internally, following the classic EISPACK hqr layout).
std::vector<Complex> hqr(const Matrix& hess, int& total_iterations) {
  const int n = static_cast<int>(hess.rows());
  std::vector<std::vector<double>> a(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) a[i][j] = hess(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));

  std::vector<double> wr(static_cast<std::size_t>(n + 1)), wi(static_cast<std::size_t>(n + 1));
  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);

  const int max_iterations = 100 * n;
  int nn = n;
  double t = 0.0;
  int l = 1;
  while (nn >= 1) {
    int its = 0;
    do {
      for (l = nn; l >= 2; --l) {
        double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      double x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        double y = a[nn - 1][nn - 1];
        double w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (total_iterations >= max_iterations) {
            fail(ErrorKind::NoConvergence,
                 "eigenvalues: QR iteration did not converge after " + std::to_string(max_iterations) +
                     " iterations");
          }
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 1; i <= nn; ++i) a[i][i] -= x;
            const double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          ++total_iterations;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s != 0.0) {
              if (k == m) {
                if (l != m) a[k][k - 1] = -a[k][k - 1];
              } else {
                a[k][k - 1] = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a[k][j] + q * a[k + 1][j];
                if (k != nn - 1) {
                  p += r * a[k + 2][j];
                  a[k + 2][j] -= p * z;
                }
                a[k + 1][j] -= p * y;
                a[k][j] -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a[i][k] + y * a[i][k + 1];
                if (k != nn - 1) {
                  p += z * a[i][k + 2];
                  a[i][k + 2] -= p * r;
                }
                a[i][k + 1] -= p * q;
                a[i][k] -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  std::vector<Complex> out;
  for (int i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

std::vector<Complex> closed_form(const Matrix& a) {
  if (a.rows() == 1) return {Complex(a(0, 0), 0.0)};
  const double tr = a(0, 0) + a(1, 1);
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double half = 0.5 * (a(0, 0) - a(1, 1));
  const double disc = half * half + a(0, 1) * a(1, 0);
  const double mid = 0.5 * tr;
  if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    // avoid cancellation: compute the larger root first
    const double big = mid + (mid >= 0.0 ? r : -r);
    const double small = big != 0.0 ? det / big : mid - (mid >= 0.0 ? r : -r);
    return {Complex(big, 0.0), Complex(small, 0.0)};
  }
  const double im = std::sqrt(-disc);
  return {Complex(mid, im), Complex(mid, -im)};
}

}  // namespace

std::vector<Complex> inverse_iteration(const Matrix& a, Complex mu, int iterations) {
  const std::size_t n = a.rows();
  const double scale = std::max(norm1(a), 1.0);
  // Shift slightly off the eigenvalue so the system stays solvable.
  const Complex shift = mu + Complex(1e-10 * scale, 1e-10 * scale);
  std::vector<Complex> m(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i * n + j] = Complex(a(i, j), 0.0) - (i == j ? shift : Complex(0.0));
  Lu<Complex> f(std::move(m), n);
  std::vector<Complex> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = Complex(1.0 + 0.1 * static_cast<double>(i), 0.3);
  if (f.exactly_singular()) return v;
  for (int it = 0; it < iterations; ++it) {
    v = f.solve(v);
    double nv = 0.0;
    for (const auto& c : v) nv += std::norm(c);
    nv = std::sqrt(nv);
    if (nv == 0.0 || !std::isfinite(nv)) break;
    for (auto& c : v) c /= nv;
  }
  return v;
}

EigenResult eigenvalues(const Matrix& a) {
  if (!a.square() || a.rows() == 0) throw std::invalid_argument("eigenvalues: need a nonempty square matrix");
  EigenResult res;
  if (a.rows() <= 2) {
    res.values = closed_form(a);
  } else {
    Matrix h = a;
    hessenberg(h);
    res.values = hqr(h, res.iterations);
  }
  std::sort(res.values.begin(), res.values.end(), [](Complex x, Complex y) {
    if (x.real() != y.real()) return x.real() < y.real();
    return x.imag() < y.imag();
  });
  const double an = std::max(norm_fro(a), std::numeric_limits<double>::min());
  const std::size_t n = a.rows();
  for (const auto& mu : res.values) {
    auto v = inverse_iteration(a, mu);
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      Complex s(0.0);
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * v[j];
      num += std::norm(s - mu * v[i]);
    }
    res.max_backward_error = std::max(res.max_backward_error, std::sqrt(num) / an);
  }
  return res;
}

SvdResult jacobi_svd(const Matrix& a) {
  if (!a.square()) throw std::invalid_argument("jacobi_svd: square matrix expected");
  const std::size_t n = a.rows();
  Matrix w = a;
  Matrix v = Matrix::identity(n);
  const double eps = std::numeric_limits<double>::epsilon();
  SvdResult res;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          alpha += w(r, i) * w(r, i);
          beta += w(r, j) * w(r, j);
          gamma += w(r, i) * w(r, j);
        }
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double wi = w(r, i), wj = w(r, j);
          w(r, i) = c * wi - s * wj;
          w(r, j) = s * wi + c * wj;
          const double vi = v(r, i), vj = v(r, j);
          v(r, i) = c * vi - s * vj;
          v(r, j) = s * vi + c * vj;
        }
      }
    }
    res.sweeps = sweep + 1;
    if (!rotated) break;
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(w.column(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  res.sigma.resize(n);
  res.u = Matrix(n, n);
  res.v = Matrix(n, n);
  const double smax = sigma[order[0]];
  const double zero_tol = 64.0 * eps * std::max(smax, std::numeric_limits<double>::min());
  std::vector<Vector> basis;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    res.sigma[k] = sigma[j];
    res.v.set_column(k, v.column(j));
    if (sigma[j] > zero_tol) {
      Vector col = w.column(j);
      for (double& c : col) c /= sigma[j];
      basis.push_back(col);
      res.u.set_column(k, col);
    }
  }
  // Complete the left basis for (numerically) zero singular values.
  for (std::size_t k = basis.size(); k < n; ++k) {
    Vector best;
    double best_norm = -1.0;
    for (std::size_t e = 0; e < n; ++e) {
      Vector c(n, 0.0);
      c[e] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) {
          const double d = dot(c, b);
          for (std::size_t r = 0; r < n; ++r) c[r] -= d * b[r];
        }
      }
      const double nc = norm2(c);
      if (nc > best_norm) {
        best_norm = nc;
        best = c;
      }
    }
    for (double& c : best) c /= best_norm;
    basis.push_back(best);
    res.u.set_column(k, best);
  }
  return res;
}

Matrix expm(const Matrix& a) {
  const std::size_t n = a.rows();
  constexpr int q = 6;
  // c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
  double c[q + 1];
  c[0] = 1.0;
  for (int k = 1; k <= q; ++k) c[k] = c[k - 1] * static_cast<double>(q - k + 1) / static_cast<double>(k * (2 * q - k + 1));

  const double nrm = norm1(a);
  int squarings = 0;
  if (nrm > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(nrm / 0.5))));
  Matrix x = a * std::ldexp(1.0, -squarings);

  Matrix num = Matrix::identity(n) * c[0];
  Matrix den = Matrix::identity(n) * c[0];
  Matrix power = Matrix::identity(n);
  for (int k = 1; k <= q; ++k) {
    power = power * x;
    num += power * c[k];
    den += power * ((k % 2 == 0 ? 1.0 : -1.0) * c[k]);
  }
  Matrix r = solve(den, num);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

}  // namespace daeh::linalg
