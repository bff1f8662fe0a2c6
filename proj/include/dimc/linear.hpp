#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>
#include <vector>

#include "dimc/errors.hpp"
#include "dimc/rational.hpp"

namespace dimc {

template <typename Scalar>
using SparseRow = std::vector<std::pair<std::size_t, Scalar>>;

inline constexpr std::size_t kDenseLimit = 2000;

namespace detail {

inline std::vector<std::vector<double>> absorption_dense(const std::vector<SparseRow<double>>& q,
                                                         const std::vector<SparseRow<double>>& r, std::size_t k) {
  const std::size_t n = q.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, p] : q[i]) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -= p;
    for (const auto& [j, p] : r[i]) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += p;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::MatrixXd x = lu.solve(b);
  if (!x.allFinite() || (n > 0 && (a * x - b).cwiseAbs().maxCoeff() > 1e-9))
    throw SingularSystem("absorption system (" + std::to_string(n) + " unknowns) is singular");
  std::vector<std::vector<double>> out(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i][j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

inline std::vector<std::vector<double>> absorption_gauss_seidel(const std::vector<SparseRow<double>>& q,
                                                                const std::vector<SparseRow<double>>& r,
                                                                std::size_t k) {
  const std::size_t n = q.size();
  std::vector<std::vector<double>> x(n, std::vector<double>(k, 0.0));
  std::vector<double> self(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, p] : q[i])
      if (j == i) self[i] += p;
  for (std::size_t i = 0; i < n; ++i)
    if (!(self[i] < 1.0)) throw SingularSystem("transient state " + std::to_string(i) + " never leaves itself");
  for (std::size_t iter = 0; iter < 10'000'000; ++iter) {
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        double v = 0.0;
        for (const auto& [j, p] : r[i])
          if (j == c) v += p;
        for (const auto& [j, p] : q[i])
          if (j != i) v += p * x[j][c];
        v /= 1.0 - self[i];
        change = std::max(change, std::abs(v - x[i][c]));
        x[i][c] = v;
      }
    }
    if (change < 1e-15) return x;
  }
  throw SingularSystem("Gauss-Seidel did not converge on " + std::to_string(n) + " unknowns");
}

inline std::vector<std::vector<Rational>> absorption_exact(const std::vector<SparseRow<Rational>>& q,
                                                           const std::vector<SparseRow<Rational>>& r, std::size_t k) {
  const std::size_t n = q.size();
  // Augmented matrix [I - Q | R].
  std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n + k));
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = 1;
    for (const auto& [j, p] : q[i]) m[i][j] -= p;
    for (const auto& [j, p] : r[i]) m[i][n + j] += p;
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && m[pivot][col] == 0) ++pivot;
    if (pivot == n) throw SingularSystem("exact absorption system is singular");
    std::swap(m[pivot], m[col]);
    Rational inv = Rational(1) / m[col][col];
    for (std::size_t c = col; c < n + k; ++c)
      if (m[col][c] != 0) m[col][c] *= inv;
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col || m[row][col] == 0) continue;
      Rational f = m[row][col];
      for (std::size_t c = col; c < n + k; ++c)
        if (m[col][c] != 0) m[row][c] -= f * m[col][c];
    }
  }
  std::vector<std::vector<Rational>> out(n, std::vector<Rational>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i][j] = m[i][n + j];
  return out;
}

}  // namespace detail

// Solves X = Q X + R for a substochastic Q over n transient states and k
// absorbing targets: X[i][c] is the probability to be absorbed in c from i.
// Every transient state must reach some target with positive probability.
inline std::vector<std::vector<double>> solve_absorption(const std::vector<SparseRow<double>>& q,
                                                         const std::vector<SparseRow<double>>& r, std::size_t k) {
  if (q.size() <= kDenseLimit) return detail::absorption_dense(q, r, k);
  return detail::absorption_gauss_seidel(q, r, k);
}

inline std::vector<std::vector<Rational>> solve_absorption(const std::vector<SparseRow<Rational>>& q,
                                                           const std::vector<SparseRow<Rational>>& r, std::size_t k) {
  return detail::absorption_exact(q, r, k);
}

}  // namespace dimc
