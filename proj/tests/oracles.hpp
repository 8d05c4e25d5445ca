// Independent numerical oracles used by the test suites. Everything here is
// deliberately implemented through routes different from the library code it
// checks: plain quadrature, nested finite differences, direct image sums and
// exhaustive vertex enumeration.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "maglat/fieldcore.hpp"
#include "maglat/pattern.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Adaptive tensor Gauss-Legendre quadrature of f over [x0,x1]x[y0,y1].
inline double quad_rectangle(const std::function<double(double, double)>& f, double x0, double x1,
                             double y0, double y1, double tol = 1e-12, int depth = 0) {
  static const double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                               0.2223810344533745, 0.1012285362903763};
  auto panel = [&](double ax, double bx, double ay, double by) {
    const double hx = 0.5 * (bx - ax), mx = 0.5 * (bx + ax);
    const double hy = 0.5 * (by - ay), my = 0.5 * (by + ay);
    double s = 0.0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) s += gw[i] * gw[j] * f(mx + hx * gx[i], my + hy * gx[j]);
    return s * hx * hy;
  };
  const double whole = panel(x0, x1, y0, y1);
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  const double parts = panel(x0, xm, y0, ym) + panel(xm, x1, y0, ym) + panel(x0, xm, ym, y1) +
                       panel(xm, x1, ym, y1);
  if (std::abs(parts - whole) < tol * (1.0 + std::abs(parts)) || depth > 12) return parts;
  const double t2 = tol;  // subdivision already gains accuracy per level
  return quad_rectangle(f, x0, xm, y0, ym, t2, depth + 1) +
         quad_rectangle(f, xm, x1, y0, ym, t2, depth + 1) +
         quad_rectangle(f, x0, xm, ym, y1, t2, depth + 1) +
         quad_rectangle(f, xm, x1, ym, y1, t2, depth + 1);
}

// ---------------------------------------------------------------------------
// Richardson-extrapolated nested central differences of a scalar field.
// axes lists the differentiation directions (size 1..3).
inline double central_difference(const std::function<double(const Eigen::Vector3d&)>& f,
                                 const Eigen::Vector3d& r, const std::vector<int>& axes,
                                 double h) {
  std::function<double(const Eigen::Vector3d&, size_t)> rec =
      [&](const Eigen::Vector3d& p, size_t level) -> double {
    if (level == axes.size()) return f(p);
    Eigen::Vector3d dp = Eigen::Vector3d::Zero();
    dp[axes[level]] = h;
    return (rec(p + dp, level + 1) - rec(p - dp, level + 1)) / (2.0 * h);
  };
  return rec(r, 0);
}

inline double richardson_derivative(const std::function<double(const Eigen::Vector3d&)>& f,
                                    const Eigen::Vector3d& r, const std::vector<int>& axes,
                                    double h) {
  const double d_h = central_difference(f, r, axes, h);
  const double d_h2 = central_difference(f, r, axes, 0.5 * h);
  return (4.0 * d_h2 - d_h) / 3.0;
}

// ---------------------------------------------------------------------------
// Direct image-sum evaluation of the potential of a periodic pixel pattern:
// per-pixel solid-angle kernels summed over a (2R+1)^2 block of unit cells,
// with the pattern mean completed to the infinite plane analytically through
// the same polygon kernel (the fluctuation tail then decays fast enough for
// 1e-6 agreement).
inline double tiled_kernel_potential(const maglat::MagnetizationPattern& pattern,
                                     const Eigen::Vector3d& r, int radius = 20) {
  const auto& g = pattern.geometry;
  const double mean = pattern.mean();
  const Eigen::Vector2d a1 = g.a1(), a2 = g.a2();

  auto pixel_polygon = [&](int i, int j, int ci, int cj) {
    maglat::FiniteDomain dom;
    const Eigen::Vector2d base = (ci + double(i) / g.n1) * a1 + (cj + double(j) / g.n2) * a2;
    const Eigen::Vector2d du = a1 / g.n1, dv = a2 / g.n2;
    dom.polygon = {base, base + du, base + du + dv, base + dv};
    return dom;
  };

  double acc = 0.0;
  for (int ci = -radius; ci <= radius; ++ci)
    for (int cj = -radius; cj <= radius; ++cj)
      for (int j = 0; j < g.n2; ++j)
        for (int i = 0; i < g.n1; ++i) {
          const double dm = pattern.at(i, j) - mean;
          if (dm == 0.0) continue;
          acc += dm * maglat::polygon_potential(pixel_polygon(i, j, ci, cj), r);
        }
  // Mean part: the infinite uniform sheet contributes exactly `mean`.
  return acc + mean;
}

// ---------------------------------------------------------------------------
// Exhaustive vertex enumeration for  max c.x  s.t.  A x = b, 0 <= x <= u.
// Returns the best objective over all basic feasible solutions, or NaN if the
// polytope is empty. Only sensible for small n.
inline double brute_force_box_lp(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                                 const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                                 double feas_tol = 1e-9) {
  const int n = int(c.size());
  // Drop rows that are zero at the roundoff scale of the matrix (a constraint
  // projected out entirely would otherwise fake a rank).
  double max_row = 0.0;
  for (Eigen::Index i = 0; i < A_in.rows(); ++i)
    max_row = std::max(max_row, A_in.row(i).norm());
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < A_in.rows(); ++i)
    if (A_in.row(i).norm() > 1e-12 * std::max(max_row, 1e-300)) rows.push_back(i);
  for (Eigen::Index i = 0; i < A_in.rows(); ++i)
    if (A_in.row(i).norm() <= 1e-12 * std::max(max_row, 1e-300) &&
        std::abs(b_in[i]) > feas_tol)
      return std::numeric_limits<double>::quiet_NaN();  // 0 = b_i infeasible
  Eigen::MatrixXd A(Eigen::Index(rows.size()), A_in.cols());
  Eigen::VectorXd b(Eigen::Index(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    A.row(Eigen::Index(i)) = A_in.row(rows[i]);
    b[Eigen::Index(i)] = b_in[rows[i]];
  }
  int r = 0;
  if (!rows.empty()) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-11);
    r = int(qr.rank());
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(r);

  std::function<void(int, int)> choose = [&](int start, int k) {
    if (k == r) {
      Eigen::MatrixXd Af(A.rows(), r);
      for (int j = 0; j < r; ++j) Af.col(j) = A.col(idx[j]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(Af.transpose() * Af);
      if (lu.rank() < r) return;
      std::vector<int> rest;
      for (int i = 0; i < n; ++i)
        if (std::find(idx.begin(), idx.end(), i) == idx.end()) rest.push_back(i);
      const int m = int(rest.size());
      for (long mask = 0; mask < (1L << m); ++mask) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int t = 0; t < m; ++t)
          if (mask & (1L << t)) x[rest[t]] = u[rest[t]];
        Eigen::VectorXd rhs = b;
        for (int t = 0; t < m; ++t) rhs -= A.col(rest[t]) * x[rest[t]];
        const Eigen::VectorXd xf = lu.solve(Af.transpose() * rhs);
        bool ok = true;
        for (int j = 0; j < r && ok; ++j)
          ok = xf[j] >= -feas_tol && xf[j] <= u[idx[j]] + feas_tol;
        if (!ok) continue;
        for (int j = 0; j < r; ++j) x[idx[j]] = std::clamp(xf[j], 0.0, u[idx[j]]);
        if ((A * x - b).lpNorm<Eigen::Infinity>() > feas_tol * (1.0 + b.norm())) continue;
        best = std::max(best, c.dot(x));
      }
      return;
    }
    for (int i = start; i < n; ++i) {
      idx[k] = i;
      choose(i + 1, k + 1);
    }
  };
  if (r == 0) {
    // Only bound patterns; feasible iff b = 0 (A has rank 0).
    for (long mask = 0; mask < (1L << n); ++mask) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (int t = 0; t < n; ++t)
        if (mask & (1L << t)) x[t] = u[t];
      if ((A * x - b).lpNorm<Eigen::Infinity>() > feas_tol) continue;
      best = std::max(best, c.dot(x));
    }
  } else {
    choose(0, 0);
  }
  return std::isfinite(best) ? best : std::numeric_limits<double>::quiet_NaN();
}

// Deterministic random binary pattern.
inline maglat::MagnetizationPattern random_binary_pattern(const maglat::LatticeGeometry& g,
                                                          unsigned seed) {
  std::mt19937 rng(seed);
  std::bernoulli_distribution bit(0.5);
  maglat::MagnetizationPattern p;
  p.geometry = g;
  p.values.resize(g.pixel_count());
  for (Eigen::Index i = 0; i < p.values.size(); ++i) p.values[i] = bit(rng) ? 1.0 : 0.0;
  return p;
}

}  // namespace oracle
