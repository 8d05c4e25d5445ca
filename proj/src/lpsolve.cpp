#include "maglat/lpsolve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace maglat {

Eigen::VectorXd inhomogeneous_solution(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                       double* residual, int* rank) {
  if (A.rows() != b.size()) throw std::invalid_argument("inhomogeneous_solution: size mismatch");
  if (b.lpNorm<Eigen::Infinity>() == 0.0)
    throw std::invalid_argument("inhomogeneous_solution: no inhomogeneous direction (b = 0)");
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  cod.setThreshold(1e-12);
  const Eigen::VectorXd m0 = cod.solve(b);
  if (residual) *residual = (A * m0 - b).norm();
  if (rank) *rank = int(cod.rank());
  return m0;
}

Eigen::MatrixXd reduce(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                       const Eigen::VectorXd& m0) {
  const double n2 = m0.squaredNorm();
  if (!(n2 > 0.0)) throw std::invalid_argument("reduce: zero m0");
  return A - b * (m0.transpose() / n2);
}

LpInstance LpInstance::build(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  LpInstance inst;
  inst.A = A;
  inst.b = b;
  inst.m0 = inhomogeneous_solution(A, b, &inst.residual, &inst.rank);
  if (!(inst.m0.squaredNorm() > 0.0))
    throw InfeasibleError("constraints admit no inhomogeneous direction (A^+ b = 0)");
  inst.Atilde = reduce(A, b, inst.m0);
  // Rows fully projected out by the reduction are zero up to roundoff of the
  // original matrix; make them exactly zero so they cannot fake a rank.
  double max_row = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) max_row = std::max(max_row, A.row(i).norm());
  for (Eigen::Index i = 0; i < inst.Atilde.rows(); ++i)
    if (inst.Atilde.row(i).norm() <= 1e-12 * max_row) inst.Atilde.row(i).setZero();
  return inst;
}

namespace {

// Rows of A made linearly independent (QR rank detection); returns kept rows.
// Rows that are zero up to roundoff of the overall matrix scale are dropped
// first, so a fully projected-out constraint does not masquerade as rank.
std::vector<Eigen::Index> independent_rows(const Eigen::MatrixXd& A) {
  std::vector<Eigen::Index> keep;
  if (A.rows() == 0) return keep;
  double max_row = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) max_row = std::max(max_row, A.row(i).norm());
  std::vector<Eigen::Index> nonzero;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (A.row(i).norm() > 1e-12 * max_row) nonzero.push_back(i);
  if (nonzero.empty()) return keep;

  Eigen::MatrixXd At(A.cols(), Eigen::Index(nonzero.size()));
  for (size_t j = 0; j < nonzero.size(); ++j) At.col(Eigen::Index(j)) = A.row(nonzero[j]);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(At);
  qr.setThreshold(1e-12);
  const Eigen::Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < rank; ++k) keep.push_back(nonzero[perm[k]]);
  std::sort(keep.begin(), keep.end());
  return keep;
}

double step_to_boundary(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
  return a;
}

}  // namespace

BoxLpResult solve_box_lp(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                         const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                         const LpOptions& options) {
  const Eigen::Index n = c.size();
  if (u.size() != n || A_in.cols() != n || A_in.rows() != b_in.size())
    throw std::invalid_argument("solve_box_lp: inconsistent dimensions");
  if ((u.array() <= 0.0).any()) throw std::invalid_argument("solve_box_lp: bounds must be positive");

  // Work with an independent row subset; dependent equalities would make the
  // normal equations singular.
  const auto keep = independent_rows(A_in);
  const Eigen::Index k = Eigen::Index(keep.size());
  Eigen::MatrixXd A(k, n);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    A.row(i) = A_in.row(keep[size_t(i)]);
    b[i] = b_in[keep[size_t(i)]];
  }

  BoxLpResult res;
  // Mehrotra predictor-corrector on
  //   min c.x  s.t.  A x = b,  x + s = u,  x, s >= 0
  // with duals (y, z, t): A^T y + z - t = c.
  Eigen::VectorXd x = 0.5 * u, s = 0.5 * u;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
  const double zinit = std::max(1.0, c.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd z = Eigen::VectorXd::Constant(n, zinit);
  Eigen::VectorXd t = Eigen::VectorXd::Constant(n, zinit);

  const double bnorm = 1.0 + b.norm() + u.norm();
  const double cnorm = 1.0 + c.norm();

  Eigen::VectorXd rp, ru, rd, theta, rhat, dy, dx, ds, dz, dt;
  Eigen::VectorXd rxz(n), rst(n), dx_aff(n), ds_aff(n), dz_aff(n), dt_aff(n);
  Eigen::MatrixXd M(k, k);

  auto solve_step = [&](const Eigen::VectorXd& rxz_c, const Eigen::VectorXd& rst_c,
                        const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
    rhat = rd - rxz_c.cwiseQuotient(x) + rst_c.cwiseQuotient(s) -
           (t.cwiseQuotient(s)).cwiseProduct(ru);
    if (k > 0) {
      dy = ldlt.solve(rp + A * rhat.cwiseQuotient(theta));
      dx = (A.transpose() * dy - rhat).cwiseQuotient(theta);
    } else {
      dy.resize(0);
      dx = -rhat.cwiseQuotient(theta);
    }
    ds = ru - dx;
    dz = (rxz_c - z.cwiseProduct(dx)).cwiseQuotient(x);
    dt = (rst_c - t.cwiseProduct(ds)).cwiseQuotient(s);
  };

  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    rp = b - A * x;
    ru = u - x - s;
    rd = c - A.transpose() * y - z + t;
    const double mu = (x.dot(z) + s.dot(t)) / double(2 * n);

    res.kkt_primal = std::max(rp.lpNorm<Eigen::Infinity>(), ru.lpNorm<Eigen::Infinity>()) / bnorm;
    res.kkt_dual = rd.lpNorm<Eigen::Infinity>() / cnorm;
    res.kkt_gap = mu / (1.0 + std::abs(c.dot(x)));
    if (res.kkt_primal < options.tolerance && res.kkt_dual < options.tolerance &&
        res.kkt_gap < options.tolerance) {
      res.converged = true;
      break;
    }

    theta = z.cwiseQuotient(x) + t.cwiseQuotient(s);
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    if (k > 0) {
      M.noalias() = A * theta.cwiseInverse().asDiagonal() * A.transpose();
      // Tiny diagonal lift keeps the factorization well-posed near the optimum.
      M.diagonal().array() += 1e-14 * (1.0 + M.trace() / double(std::max<Eigen::Index>(k, 1)));
      ldlt.compute(M);
      if (ldlt.info() != Eigen::Success)
        throw SolverFailure("interior point: normal equations factorization failed");
    }

    // Predictor (affine scaling).
    rxz = -x.cwiseProduct(z);
    rst = -s.cwiseProduct(t);
    solve_step(rxz, rst, ldlt);
    dx_aff = dx;
    ds_aff = ds;
    dz_aff = dz;
    dt_aff = dt;
    const double ap_aff = std::min(step_to_boundary(x, dx_aff), step_to_boundary(s, ds_aff));
    const double ad_aff = std::min(step_to_boundary(z, dz_aff), step_to_boundary(t, dt_aff));
    const double mu_aff = ((x + ap_aff * dx_aff).dot(z + ad_aff * dz_aff) +
                           (s + ap_aff * ds_aff).dot(t + ad_aff * dt_aff)) /
                          double(2 * n);
    const double sigma = std::pow(std::max(mu_aff, 0.0) / mu, 3);

    // Corrector with centering.
    rxz = (-x.cwiseProduct(z) - dx_aff.cwiseProduct(dz_aff)).array() + sigma * mu;
    rst = (-s.cwiseProduct(t) - ds_aff.cwiseProduct(dt_aff)).array() + sigma * mu;
    solve_step(rxz, rst, ldlt);

    const double gamma = 0.9995;
    const double ap = std::min(1.0, gamma * std::min(step_to_boundary(x, dx),
                                                     step_to_boundary(s, ds)));
    const double ad = std::min(1.0, gamma * std::min(step_to_boundary(z, dz),
                                                     step_to_boundary(t, dt)));
    x += ap * dx;
    s += ap * ds;
    y += ad * dy;
    z += ad * dz;
    t += ad * dt;
  }

  res.x = x;
  res.objective = c.dot(x);
  return res;
}

namespace {

// Moves an optimal interior solution to a vertex: while the fractional
// columns of Atilde are dependent, slide along a null direction of those
// columns until a bound is hit, choosing the sign that never worsens the
// minimized objective. Each step rails at least one variable. Null vectors
// come from the QR pivoting of the fractional column block (K is tiny, so a
// step costs O(K^2 nf)).
void purify_to_vertex(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, Eigen::VectorXd& x,
                      double rail_tol) {
  const Eigen::Index n = x.size();
  auto snap = [&]() {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x[i] < rail_tol) x[i] = 0.0;
      else if (x[i] > 1.0 - rail_tol) x[i] = 1.0;
    }
  };
  snap();

  // Basis of fractional variables whose columns are linearly independent,
  // maintained incrementally (the basis never exceeds rank(A) members).
  std::vector<Eigen::Index> basis;
  Eigen::MatrixXd basis_cols(A.rows(), 0);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  auto refactor = [&]() {
    basis_cols.resize(A.rows(), Eigen::Index(basis.size()));
    for (size_t k = 0; k < basis.size(); ++k) basis_cols.col(Eigen::Index(k)) = A.col(basis[k]);
    if (basis.size()) cod.compute(basis_cols);
  };
  auto drop_railed_basis = [&]() {
    bool changed = false;
    for (size_t k = basis.size(); k-- > 0;)
      if (x[basis[k]] <= 0.0 || x[basis[k]] >= 1.0) {
        basis.erase(basis.begin() + long(k));
        changed = true;
      }
    if (changed) refactor();
  };

  std::vector<Eigen::Index> queue;
  for (Eigen::Index i = 0; i < n; ++i)
    if (x[i] > 0.0 && x[i] < 1.0) queue.push_back(i);

  const double col_scale = A.size() ? A.cwiseAbs().maxCoeff() * std::sqrt(double(A.rows())) : 0.0;
  size_t qi = 0;
  int slides = 0;
  const int max_slides = 2 * int(n) + 16;
  while (qi < queue.size() && slides < max_slides) {
    const Eigen::Index dep = queue[qi];
    if (x[dep] <= 0.0 || x[dep] >= 1.0) {
      ++qi;
      continue;
    }
    // Independent column: absorb into the basis and move on.
    Eigen::VectorXd y(Eigen::Index(basis.size()));
    double resid = A.col(dep).norm();
    if (!basis.empty()) {
      y = cod.solve(A.col(dep));
      resid = (A.col(dep) - basis_cols * y).norm();
    }
    if (resid > 1e-10 * std::max(col_scale, 1.0)) {
      basis.push_back(dep);
      refactor();
      ++qi;
      continue;
    }

    // Dependent: slide along the null vector (-1 on dep, y on the basis)
    // in the direction that does not increase the minimized objective.
    double slope = -c[dep];
    for (size_t k = 0; k < basis.size(); ++k) slope += y[Eigen::Index(k)] * c[basis[k]];
    auto max_step = [&](double sgn) {
      double a = std::numeric_limits<double>::infinity();
      const double dd = -sgn;
      a = dd > 0.0 ? (1.0 - x[dep]) / dd : -x[dep] / dd;
      for (size_t k = 0; k < basis.size(); ++k) {
        const double dk = sgn * y[Eigen::Index(k)];
        if (dk > 1e-13) a = std::min(a, (1.0 - x[basis[k]]) / dk);
        else if (dk < -1e-13) a = std::min(a, -x[basis[k]] / dk);
      }
      return a;
    };
    const double ctol = 1e-11 * (1.0 + c.lpNorm<Eigen::Infinity>());
    double sgn;
    if (slope < -ctol) sgn = 1.0;
    else if (slope > ctol) sgn = -1.0;
    else sgn = max_step(1.0) >= max_step(-1.0) ? 1.0 : -1.0;
    const double step = max_step(sgn);
    if (!std::isfinite(step) || step <= 0.0) {
      ++qi;
      continue;
    }
    x[dep] -= sgn * step;
    for (size_t k = 0; k < basis.size(); ++k) x[basis[k]] += sgn * step * y[Eigen::Index(k)];
    snap();
    ++slides;
    drop_railed_basis();
    // dep is retried: it either railed, becomes independent of the reduced
    // basis, or slides again; every slide rails at least one variable.
  }
}

}  // namespace

LpSolution solve(const LpInstance& instance, const LpOptions& options) {
  const Eigen::Index n = instance.m0.size();
  const Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(instance.Atilde.rows());
  const double m0n2 = instance.m0.squaredNorm();

  LpSolution sol;
  // Maximize m.m0 and minimize m.m0; keep the larger |C|.
  const BoxLpResult up = solve_box_lp(instance.Atilde, zero, -instance.m0, u, options);
  const BoxLpResult dn = solve_box_lp(instance.Atilde, zero, instance.m0, u, options);
  if (!up.converged && !dn.converged) {
    sol.status = LpSolution::Status::failed;
    std::ostringstream oss;
    oss << "interior point did not converge: residuals primal " << up.kkt_primal << "/"
        << dn.kkt_primal << " dual " << up.kkt_dual << "/" << dn.kkt_dual;
    throw SolverFailure(oss.str());
  }
  sol.C_pos = -up.objective / m0n2;
  sol.C_neg = -(-dn.objective) / m0n2;

  // Near-ties (complement-symmetric programs) deterministically prefer the
  // positive orientation.
  const double tie = 1e-9 * std::max(1.0, std::abs(sol.C_pos));
  const bool take_up = std::abs(sol.C_pos) >= std::abs(sol.C_neg) - tie;
  const BoxLpResult& best = take_up ? up : dn;
  sol.m = best.x;
  purify_to_vertex(instance.Atilde, take_up ? (-instance.m0).eval() : instance.m0.eval(), sol.m,
                   options.rail_tol);
  sol.C = sol.m.dot(instance.m0) / m0n2;
  sol.status = LpSolution::Status::optimal;
  sol.kkt_primal = best.kkt_primal;
  sol.kkt_dual = best.kkt_dual;
  sol.kkt_gap = best.kkt_gap;
  sol.iterations = up.iterations + dn.iterations;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sol.m[i] > options.rail_tol && sol.m[i] < 1.0 - options.rail_tol)
      sol.unrailed.push_back(int(i));
  return sol;
}

RoundingReport round_unrailed(const LatticeGeometry& geometry, const LpInstance& instance,
                              const LpSolution& solution, double tol) {
  if (solution.status != LpSolution::Status::optimal)
    throw std::invalid_argument("round_unrailed: solution is not optimal");
  RoundingReport rep;
  rep.pattern.geometry = geometry;
  rep.pattern.values = solution.m;
  auto& m = rep.pattern.values;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (m[i] <= tol) m[i] = 0.0;
    else if (m[i] >= 1.0 - tol) m[i] = 1.0;
    else {
      rep.rounded_indices.push_back(int(i));
      m[i] = m[i] > 0.5 ? 1.0 : 0.0;  // exact halves round to unmagnetized
    }
  }
  rep.C = m.dot(instance.m0) / instance.m0.squaredNorm();
  const Eigen::VectorXd target = rep.C * instance.b;
  rep.perturbation = (instance.A * m - target).norm();
  const double tn = target.norm();
  rep.perturbation_rel = tn > 0.0 ? rep.perturbation / tn : rep.perturbation;
  return rep;
}

std::string format_report(const LpInstance& instance, const LpSolution& solution,
                          const RoundingReport* rounding) {
  std::ostringstream os;
  os.precision(12);
  os << "strength C = " << solution.C << " (maximizing " << solution.C_pos << ", minimizing "
     << solution.C_neg << ")\n";
  os << "iterations = " << solution.iterations << "\n";
  os << "kkt residuals: primal " << solution.kkt_primal << " dual " << solution.kkt_dual
     << " gap " << solution.kkt_gap << "\n";
  os << "constraint rank = " << instance.rank << ", least-squares residual = " << instance.residual
     << "\n";
  os << "un-railed pixels (" << solution.unrailed.size() << "):";
  for (int i : solution.unrailed) os << ' ' << i;
  os << "\n";
  if (rounding) {
    os << "rounded pixels (" << rounding->rounded_indices.size() << "):";
    for (int i : rounding->rounded_indices) os << ' ' << i;
    os << "\nrounded strength C = " << rounding->C << "\n";
    os << "rounding perturbation ||A m - C b|| = " << rounding->perturbation << " ("
       << rounding->perturbation_rel << " relative)\n";
  }
  return os.str();
}

}  // namespace maglat
