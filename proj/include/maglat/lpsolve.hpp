#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "maglat/errors.hpp"
#include "maglat/geometry.hpp"
#include "maglat/pattern.hpp"

namespace maglat {

/// Reduced linear program derived from A m = C b: maximize |C| = |m.m0|/||m0||^2
/// subject to Atilde m = 0 and 0 <= m <= 1, where m0 is the minimum-norm
/// inhomogeneous solution and Atilde = A - b m0^T/||m0||^2.
struct LpInstance {
  Eigen::MatrixXd A;       // original constraint matrix (K x N)
  Eigen::VectorXd b;       // targets (K)
  Eigen::VectorXd m0;      // pseudo-inverse solution A^+ b
  Eigen::MatrixXd Atilde;  // reduced matrix, Atilde m0 = 0
  double residual = 0.0;   // ||A m0 - b||
  int rank = 0;            // rank of A

  static LpInstance build(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);
};

// Minimum-norm least-squares solution of A m = b via a rank-revealing
// decomposition. Throws on all-zero b (no inhomogeneous direction).
Eigen::VectorXd inhomogeneous_solution(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       double* residual = nullptr, int* rank = nullptr);

// Atilde = A - b m0^T / ||m0||^2; throws on zero m0.
Eigen::MatrixXd reduce(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& m0);

struct LpSolution {
  enum class Status { optimal, infeasible, failed };
  Eigen::VectorXd m;
  double C = 0.0;       // achieved strength m.m0/||m0||^2
  double C_pos = 0.0;   // objective of the maximizing orientation
  double C_neg = 0.0;   // objective of the minimizing orientation
  Status status = Status::failed;
  std::vector<int> unrailed;  // indices with tol < m_i < 1 - tol
  double kkt_primal = 0.0, kkt_dual = 0.0, kkt_gap = 0.0;
  int iterations = 0;
};

struct LpOptions {
  double tolerance = 1e-10;   // KKT tolerance (relative)
  double rail_tol = 1e-6;     // bound-snap tolerance for rail classification
  int max_iterations = 200;
};

// Solves both orientations of the box LP and keeps the one with larger |C|
// (ties prefer the positive orientation). The returned point is purified to
// a vertex, so |unrailed| <= rank(Atilde) <= rank(A).
LpSolution solve(const LpInstance& instance, const LpOptions& options = {});

// Generic box LP used internally and by tests: min c.x s.t. A x = b,
// 0 <= x <= u. Dependent rows of A are removed up front.
struct BoxLpResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double kkt_primal = 0.0, kkt_dual = 0.0, kkt_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};
BoxLpResult solve_box_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                         const LpOptions& options = {});

struct RoundingReport {
  MagnetizationPattern pattern;            // binary
  double C = 0.0;                          // strength of the rounded pattern
  double perturbation = 0.0;               // ||A m_rounded - C b||
  double perturbation_rel = 0.0;           // relative to ||C b||
  std::vector<int> rounded_indices;        // un-railed pixels that were rounded
};

// Snaps pixels within tol of a bound and rounds the remaining un-railed
// pixels to the nearer bound (exact halves go to 0).
RoundingReport round_unrailed(const LatticeGeometry& geometry, const LpInstance& instance,
                              const LpSolution& solution, double tol = 1e-6);

// Human-readable solver report (External Interfaces).
std::string format_report(const LpInstance& instance, const LpSolution& solution,
                          const RoundingReport* rounding = nullptr);

}  // namespace maglat
