#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "maglat/lpsolve.hpp"
#include "oracles.hpp"

using namespace maglat;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("inhomogeneous solution: hand cases") {
  MatrixXd A(1, 2);
  A << 1.0, -1.0;
  VectorXd b(1);
  b << 1.0;
  const VectorXd m0 = inhomogeneous_solution(A, b);
  CHECK(m0[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(m0[1] == doctest::Approx(-0.5).epsilon(1e-13));

  const MatrixXd I3 = MatrixXd::Identity(3, 3);
  VectorXd b3(3);
  b3 << 1.0, 2.0, 3.0;
  CHECK((inhomogeneous_solution(I3, b3) - b3).norm() < 1e-13);

  CHECK_THROWS_AS(inhomogeneous_solution(A, VectorXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("inhomogeneous solution: residual and null-space orthogonality") {
  std::mt19937 rng(4);
  std::normal_distribution<double> gauss;
  for (int it = 0; it < 20; ++it) {
    MatrixXd A(4, 20);
    VectorXd b(4);
    for (int i = 0; i < A.rows(); ++i) {
      b[i] = gauss(rng);
      for (int j = 0; j < A.cols(); ++j) A(i, j) = gauss(rng);
    }
    double residual = 0.0;
    const VectorXd m0 = inhomogeneous_solution(A, b, &residual);
    CHECK((A * m0 - b).norm() < 1e-10);
    CHECK(residual < 1e-10);
    // m0 lies in the row space: orthogonal to a null-space basis.
    Eigen::FullPivLU<MatrixXd> lu(A);
    const MatrixXd null_basis = lu.kernel();
    for (int k = 0; k < null_basis.cols(); ++k)
      CHECK(std::abs(m0.dot(null_basis.col(k))) <
            1e-10 * m0.norm() * null_basis.col(k).norm());
  }
}

TEST_CASE("reduce: collapse and invariants") {
  MatrixXd A(1, 2);
  A << 1.0, -1.0;
  VectorXd b(1);
  b << 1.0;
  VectorXd m0(2);
  m0 << 0.5, -0.5;
  const MatrixXd At = reduce(A, b, m0);
  CHECK(At.norm() < 1e-14);

  // b = 0 rows are unchanged.
  MatrixXd A2(2, 3);
  A2 << 1, 2, 3, 4, 5, 6;
  VectorXd b2(2);
  b2 << 1.0, 0.0;
  const VectorXd m02 = inhomogeneous_solution(A2, b2);
  const MatrixXd At2 = reduce(A2, b2, m02);
  CHECK((At2.row(1) - A2.row(1)).norm() < 1e-13);
  CHECK((At2 * m02).norm() < 1e-12 * A2.norm() * m02.norm());

  CHECK_THROWS_AS(reduce(A, b, VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("reduced instance invariant: Atilde m0 = 0 on random systems") {
  std::mt19937 rng(8);
  std::normal_distribution<double> gauss;
  for (int it = 0; it < 25; ++it) {
    MatrixXd A(3, 15);
    VectorXd b(3);
    for (int i = 0; i < 3; ++i) {
      b[i] = gauss(rng);
      for (int j = 0; j < 15; ++j) A(i, j) = gauss(rng);
    }
    const auto inst = LpInstance::build(A, b);
    CHECK((inst.Atilde * inst.m0).lpNorm<Eigen::Infinity>() <
          1e-12 * A.norm() * inst.m0.norm());
  }
}

TEST_CASE("solve: two-variable instances solvable by hand") {
  {
    MatrixXd A(1, 2);
    A << 1.0, -1.0;
    VectorXd b(1);
    b << 1.0;
    const auto inst = LpInstance::build(A, b);
    const auto sol = solve(inst);
    CHECK(sol.status == LpSolution::Status::optimal);
    CHECK(sol.C == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.m[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(sol.m[1] == doctest::Approx(0.0).epsilon(1e-8));
    CHECK(int(sol.unrailed.size()) <= inst.rank);
  }
  {
    // Forced degenerate: Atilde = [[1,1]] with m0 = (1,-1)/2 leaves only
    // m = (t, -t) feasible inside the box, so m = 0 and C = 0.
    MatrixXd At(1, 2);
    At << 1.0, 1.0;
    LpInstance inst;
    inst.A = At;
    inst.b = VectorXd::Zero(1);
    inst.m0 = VectorXd(2);
    inst.m0 << 1.0, -1.0;
    inst.Atilde = At;
    inst.rank = 1;
    const auto sol = solve(inst);
    CHECK(std::abs(sol.C) < 1e-9);
    CHECK(sol.m.norm() < 1e-7);
  }
}

TEST_CASE("solve: optimality matches vertex enumeration on random instances") {
  std::mt19937 rng(100);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> ndist(4, 12), kdist(1, 3);
  int done = 0;
  while (done < 200) {
    const int n = ndist(rng), k = kdist(rng);
    MatrixXd A(k, n);
    VectorXd b(k);
    for (int i = 0; i < k; ++i) {
      b[i] = gauss(rng);
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    }
    if (b.norm() < 0.1) continue;
    const auto inst = LpInstance::build(A, b);
    if (inst.m0.norm() < 1e-8) continue;
    const auto sol = solve(inst);
    REQUIRE(sol.status == LpSolution::Status::optimal);

    const VectorXd u = VectorXd::Ones(n);
    const VectorXd zero = VectorXd::Zero(inst.Atilde.rows());
    const double best_up =
        oracle::brute_force_box_lp(inst.Atilde, zero, inst.m0, u) / inst.m0.squaredNorm();
    const double best_dn =
        oracle::brute_force_box_lp(inst.Atilde, zero, -inst.m0, u) / inst.m0.squaredNorm();
    const double brute_C = std::max(std::abs(best_up), std::abs(best_dn));
    CHECK(std::abs(sol.C) == doctest::Approx(brute_C).epsilon(1e-8));

    // Feasibility and the un-railed bound at the reported optimum.
    CHECK((inst.Atilde * sol.m).lpNorm<Eigen::Infinity>() <
          1e-8 * (1.0 + inst.Atilde.norm()));
    CHECK(int(sol.unrailed.size()) <= inst.rank);
    ++done;
  }
}

TEST_CASE("solve: scaling covariance under b -> s b") {
  std::mt19937 rng(55);
  std::normal_distribution<double> gauss;
  MatrixXd A(2, 10);
  VectorXd b(2);
  for (int i = 0; i < 2; ++i) {
    b[i] = gauss(rng);
    for (int j = 0; j < 10; ++j) A(i, j) = gauss(rng);
  }
  LatticeGeometry g;
  g.zeta = 0.5 * kPi;
  g.n1 = 5;
  g.n2 = 2;
  const auto base_inst = LpInstance::build(A, b);
  const auto base = solve(base_inst);
  const auto base_rounded = round_unrailed(g, base_inst, base);
  for (double s : {0.5, 2.0, 7.0}) {
    const auto inst = LpInstance::build(A, s * b);
    const auto scaled = solve(inst);
    // The optimal binary pattern is invariant and C scales as 1/s (so the
    // product C b is invariant). Fractional vertex coordinates agree to
    // solver precision.
    const auto rounded = round_unrailed(g, inst, scaled);
    CHECK((rounded.pattern.values - base_rounded.pattern.values).lpNorm<Eigen::Infinity>() ==
          0.0);
    CHECK((scaled.m - base.m).lpNorm<Eigen::Infinity>() < 2e-6);
    CHECK(scaled.C * s == doctest::Approx(base.C).epsilon(2e-7));
  }
}

TEST_CASE("solve: determinism") {
  std::mt19937 rng(77);
  std::normal_distribution<double> gauss;
  MatrixXd A(3, 30);
  VectorXd b(3);
  for (int i = 0; i < 3; ++i) {
    b[i] = gauss(rng);
    for (int j = 0; j < 30; ++j) A(i, j) = gauss(rng);
  }
  const auto inst = LpInstance::build(A, b);
  const auto s1 = solve(inst);
  const auto s2 = solve(inst);
  CHECK(s1.C == s2.C);  // bitwise
  CHECK((s1.m - s2.m).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("round_unrailed: binary solutions pass through unchanged") {
  LatticeGeometry g;
  g.zeta = 0.5 * kPi;
  g.n1 = 2;
  g.n2 = 2;
  MatrixXd A(1, 4);
  A << 1.0, -1.0, 0.5, -0.5;
  VectorXd b(1);
  b << 1.0;
  const auto inst = LpInstance::build(A, b);
  LpSolution sol;
  sol.status = LpSolution::Status::optimal;
  sol.m = VectorXd(4);
  sol.m << 1.0, 0.0, 1.0, 0.0;
  sol.C = sol.m.dot(inst.m0) / inst.m0.squaredNorm();
  const auto rep = round_unrailed(g, inst, sol);
  CHECK(rep.pattern.binary());
  CHECK(rep.rounded_indices.empty());
  CHECK((rep.pattern.values - sol.m).norm() == 0.0);
  CHECK(rep.C == doctest::Approx(sol.C).epsilon(1e-14));

  // Un-railed pixels snap to the nearer bound; exact halves go to 0.
  sol.m << 1.0, 0.3, 0.8, 0.5;
  const auto rep2 = round_unrailed(g, inst, sol);
  CHECK(rep2.pattern.values[1] == 0.0);
  CHECK(rep2.pattern.values[2] == 1.0);
  CHECK(rep2.pattern.values[3] == 0.0);
  CHECK(rep2.rounded_indices.size() == 3);
  CHECK(rep2.perturbation == doctest::Approx((A * rep2.pattern.values - rep2.C * b).norm()));
}

TEST_CASE("format_report mentions the key quantities") {
  MatrixXd A(1, 2);
  A << 1.0, -1.0;
  VectorXd b(1);
  b << 1.0;
  const auto inst = LpInstance::build(A, b);
  const auto sol = solve(inst);
  const std::string rep = format_report(inst, sol);
  CHECK(rep.find("strength C") != std::string::npos);
  CHECK(rep.find("kkt residuals") != std::string::npos);
}
