#pragma once
// Independent reference computations shared by the unit and acceptance tests.

#include "arff/types.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Matrix = std::vector<std::vector<cd>>;

// S(j,k) by direct evaluation, with points as rows.
inline Matrix design(const Eigen::MatrixXd& freqs, const Eigen::MatrixXd& points, bool complex_exp) {
  const auto m = points.rows(), k = freqs.rows(), d = points.cols();
  Matrix s(m, std::vector<cd>(k));
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index l = 0; l < k; ++l) {
      double phase = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) phase += freqs(l, i) * points(j, i);
      if (complex_exp)
        s[j][l] = std::polar(1.0, phase);
      else
        s[j][l] = std::cos(phase + freqs(l, d));
    }
  return s;
}

// Gaussian elimination with partial pivoting on A x = b (b has several columns).
inline Matrix gauss_solve(Matrix a, Matrix b) {
  const std::size_t n = a.size(), c = b.empty() ? 0 : b[0].size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) == 0.0) throw std::runtime_error("singular");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cd f = a[r][col] / a[col][col];
      for (std::size_t q = col; q < n; ++q) a[r][q] -= f * a[col][q];
      for (std::size_t q = 0; q < c; ++q) b[r][q] -= f * b[col][q];
    }
  }
  Matrix x(n, std::vector<cd>(c));
  for (std::size_t r = n; r-- > 0;)
    for (std::size_t q = 0; q < c; ++q) {
      cd acc = b[r][q];
      for (std::size_t p = r + 1; p < n; ++p) acc -= a[r][p] * x[p][q];
      x[r][q] = acc / a[r][r];
    }
  return x;
}

// (S^H S + lambda M I) a = S^H y, assembled entry by entry.
inline Matrix regularized_solve(const Matrix& s, const Eigen::MatrixXd& y, double lambda) {
  const std::size_t m = s.size(), k = s[0].size(), c = y.cols();
  Matrix g(k, std::vector<cd>(k)), rhs(k, std::vector<cd>(c));
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = 0; q < k; ++q) {
      cd acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += std::conj(s[j][p]) * s[j][q];
      g[p][q] = acc;
    }
    g[p][p] += lambda * static_cast<double>(m);
    for (std::size_t q = 0; q < c; ++q) {
      cd acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += std::conj(s[j][p]) * y(j, q);
      rhs[p][q] = acc;
    }
  }
  return gauss_solve(g, rhs);
}

// max |x - ref| / max |ref|
inline double relative_difference(const Eigen::MatrixXcd& x, const Matrix& ref) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < ref.size(); ++p)
    for (std::size_t q = 0; q < ref[p].size(); ++q) {
      diff = std::max(diff, std::abs(x(p, q) - ref[p][q]));
      scale = std::max(scale, std::abs(ref[p][q]));
    }
  return diff / scale;
}

}  // namespace oracle
