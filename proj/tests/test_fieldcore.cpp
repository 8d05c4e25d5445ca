#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "maglat/fieldcore.hpp"
#include "maglat/spectrum.hpp"
#include "oracles.hpp"

using namespace maglat;
using Eigen::Vector3d;

namespace {

LatticeGeometry square_grid(int n) {
  LatticeGeometry g;
  g.zeta = 0.5 * kPi;
  g.n1 = g.n2 = n;
  return g;
}

// Pattern m = 1/2 + 1/2 sin(2 pi x / d) as an explicit spectrum.
FourierSpectrum single_sine_spectrum() {
  LatticeGeometry g = square_grid(2);
  std::map<std::pair<int, int>, std::complex<double>> modes;
  modes[{0, 0}] = 0.5;
  modes[{1, 0}] = std::complex<double>(0.0, -0.25);
  modes[{-1, 0}] = std::complex<double>(0.0, 0.25);
  return FourierSpectrum::explicit_modes(g, std::move(modes), 100.0);
}

}  // namespace

TEST_CASE("kernel value matches the closed form") {
  CHECK(kernel_value(0, 0, 1) == doctest::Approx(1.0 / kTwoPi).epsilon(1e-14));
  CHECK(kernel_value(1, 1, 1) == doctest::Approx(1.0 / (kTwoPi * std::pow(3.0, 1.5))).epsilon(1e-14));
  CHECK_THROWS_AS(kernel_value(3, 4, 0), std::domain_error);
  CHECK_THROWS_AS(kernel_value(3, 4, -1), std::domain_error);
  CHECK(kernel_value(2, -5, 0.3) > 0.0);
}

TEST_CASE("polygon potential: quadrature oracle on the unit square") {
  FiniteDomain dom;
  dom.polygon = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  const Vector3d r(0.5, 0.5, 1.0);
  const double expected = oracle::quad_rectangle(
      [&](double x, double y) { return kernel_value(r.x() - x, r.y() - y, r.z()); }, 0, 1, 0, 1,
      1e-13);
  CHECK(polygon_potential(dom, r) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("polygon potential: mirror symmetry and plane limit") {
  FiniteDomain dom;
  dom.polygon = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (double z : {0.1, 0.5, 2.0})
    CHECK(polygon_potential(dom, {0.25, 0.5, z}) ==
          doctest::Approx(polygon_potential(dom, {0.75, 0.5, z})).epsilon(1e-13));

  // Growing squares converge monotonically to the Dirichlet value 1.
  double prev = 0.0;
  for (double half = 1.0; half <= 2.0e5; half *= 4.0) {
    FiniteDomain big;
    big.polygon = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
    const double val = polygon_potential(big, {0.0, 0.0, 1.0});
    CHECK(val > prev);
    CHECK(val < 1.0 + 1e-15);
    prev = val;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("polygon potential: domain and validation errors") {
  FiniteDomain dom;
  dom.polygon = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK_THROWS_AS(polygon_potential(dom, {0.5, 0.5, 0.0}), std::domain_error);
  FiniteDomain degenerate;
  degenerate.polygon = {{0, 0}, {1, 0}};
  CHECK_THROWS_AS(polygon_potential(degenerate, {0.5, 0.5, 1.0}), std::invalid_argument);
  FiniteDomain bowtie;
  bowtie.polygon = {{0, 0}, {1, 1}, {1, 0}, {0, 1}};
  CHECK_THROWS_AS(polygon_potential(bowtie, {0.5, 0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("spectrum of uniform and stripe patterns") {
  const auto g = square_grid(2);
  const auto uni = FourierSpectrum::of_pattern(MagnetizationPattern::uniform(g, 1.0));
  CHECK(uni.coefficient(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(uni.coefficient(1, 0)) < 1e-14);
  CHECK(std::abs(uni.coefficient(0, 1)) < 1e-14);
  CHECK(std::abs(uni.coefficient(1, 1)) < 1e-14);

  // 50% duty stripe along a1: mean 1/2, |fundamental| = 1/pi.
  MagnetizationPattern stripe;
  stripe.geometry = g;
  stripe.values.resize(4);
  stripe.at(0, 0) = 1.0;
  stripe.at(1, 0) = 0.0;
  stripe.at(0, 1) = 1.0;
  stripe.at(1, 1) = 0.0;
  const auto sp = FourierSpectrum::of_pattern(stripe, 1e4);
  CHECK(sp.coefficient(0, 0).real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(sp.coefficient(1, 0)) == doctest::Approx(1.0 / kPi).epsilon(1e-13));
  CHECK(std::abs(sp.coefficient(-1, 0)) == doctest::Approx(1.0 / kPi).epsilon(1e-13));
  CHECK(std::abs(sp.coefficient(2, 0)) < 1e-14);               // even harmonics vanish
  CHECK(std::abs(sp.coefficient(3, 0)) ==
        doctest::Approx(1.0 / (3.0 * kPi)).epsilon(1e-13));    // exact square-wave series
  CHECK(sp.coefficient(-1, 0) == std::conj(sp.coefficient(1, 0)));
}

TEST_CASE("spectrum linearity") {
  const auto g = square_grid(5);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(0.0, 0.5);
  MagnetizationPattern a, bpat;
  a.geometry = bpat.geometry = g;
  a.values.resize(g.pixel_count());
  bpat.values.resize(g.pixel_count());
  for (int i = 0; i < g.pixel_count(); ++i) {
    a.values[i] = val(rng);
    bpat.values[i] = val(rng);
  }
  MagnetizationPattern sum = a;
  sum.values += bpat.values;
  const auto sa = FourierSpectrum::of_pattern(a);
  const auto sb = FourierSpectrum::of_pattern(bpat);
  const auto ss = FourierSpectrum::of_pattern(sum);
  for (int p = -2; p <= 2; ++p)
    for (int q = -2; q <= 2; ++q)
      CHECK(std::abs(ss.coefficient(p, q) - sa.coefficient(p, q) - sb.coefficient(p, q)) < 1e-13);
}

TEST_CASE("periodic potential: single mode closed form and uniform sheet") {
  const auto spec = single_sine_spectrum();
  for (double x : {0.0, 0.1, 0.37})
    for (double z : {0.2, 0.5, 1.4}) {
      const double expected = 0.5 + 0.5 * std::sin(kTwoPi * x) * std::exp(-kTwoPi * z);
      CHECK(periodic_potential(spec, {x, 0.3, z}).value ==
            doctest::Approx(expected).epsilon(1e-13));
    }

  const auto g = square_grid(4);
  const auto uni = FourierSpectrum::of_pattern(MagnetizationPattern::uniform(g, 1.0));
  for (double z : {0.05, 0.3, 2.0}) {
    CHECK(periodic_potential(uni, {0.2, 0.9, z}).value == doctest::Approx(1.0).epsilon(1e-13));
    const auto fe = field_expansion(uni, {0.2, 0.9, z}, 3);
    CHECK(fe.u.norm() < 1e-13);
    CHECK(fe.v.norm() < 1e-12);
    CHECK(fe.w[0].norm() + fe.w[1].norm() + fe.w[2].norm() < 1e-11);
  }
  CHECK_THROWS_AS(periodic_potential(spec, {0.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("periodic potential cross-validated against the tiled kernel sum") {
  const auto g = square_grid(4);
  const auto pattern = oracle::random_binary_pattern(g, 42);
  // Sub-Nyquist modes are not enough for a step pattern at this height; the
  // analytic coefficients stay exact beyond Nyquist, so extend the cutoff
  // until damping takes over.
  const auto spec = FourierSpectrum::of_pattern(pattern, 40.0 / 0.5);
  const Vector3d r(0.3, 0.7, 0.5);
  const double direct = oracle::tiled_kernel_potential(pattern, r, 20);
  const double fourier = periodic_potential(spec, r).value;
  CHECK(fourier == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("fourier/direct equivalence holds for z >= 0.1 d on random binary patterns") {
  for (unsigned seed : {1u, 2u, 3u}) {
    const auto g = square_grid(4);
    const auto pattern = oracle::random_binary_pattern(g, seed);
    for (double z : {0.1, 0.25, 1.0}) {
      const auto spec = FourierSpectrum::of_pattern(pattern, 40.0 / z);
      Vector3d r(0.15, 0.65, z);
      // The image-block tail decays like 1/R^3; extrapolate it away.
      const double s1 = oracle::tiled_kernel_potential(pattern, r, 20);
      const double s2 = oracle::tiled_kernel_potential(pattern, r, 40);
      const double direct = (8.0 * s2 - s1) / 7.0;
      const double fourier = periodic_potential(spec, r).value;
      CHECK(fourier == doctest::Approx(direct).epsilon(1e-6));
    }
  }
}

TEST_CASE("field expansion: single-mode partial derivatives") {
  const auto spec = single_sine_spectrum();
  const double z = 0.7;
  const auto fe = field_expansion(spec, {0.0, 0.0, z}, 2);
  // At x = 0 the sine vanishes: d/dz = 0, d/dx = pi * e^{-2 pi z} (amplitude
  // 1/2 times wave slope 2 pi, in reduced units).
  CHECK(fe.u.z() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(fe.u.x() == doctest::Approx(kPi * std::exp(-kTwoPi * z)).epsilon(1e-13));
  CHECK(fe.u.y() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("field expansion matches Richardson finite differences order by order") {
  // Each derivative order is differenced from the analytically evaluated
  // order below it (w from v, v from u, u from the potential); differencing
  // the raw potential three times would drown order-3 in roundoff.
  const auto g = square_grid(8);
  const auto pattern = oracle::random_binary_pattern(g, 11);
  const Vector3d r(0.2, 0.4, 0.6);
  const double h = 1e-4;
  // Pin the retained mode set across the whole finite-difference stencil:
  // a mode drifting across the damping bound between stencil points would be
  // amplified by 1/h in the differences.
  const double cutoff = 0.999 * FourierSpectrum::damping_bound(r.z() + 4.0 * h);
  const auto spec = FourierSpectrum::of_pattern(pattern, cutoff);
  const auto fe = field_expansion(spec, r, 3);
  auto psi = [&](const Vector3d& p) { return periodic_potential(spec, p).value; };

  const double scale_u = fe.u.norm();
  const double scale_v = fe.v.norm();
  double scale_w = 0.0;
  for (int i = 0; i < 3; ++i) scale_w = std::max(scale_w, fe.w[i].norm());

  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(oracle::richardson_derivative(psi, r, {i}, h) - fe.u[i]) < 1e-7 * scale_u);
    for (int j = i; j < 3; ++j) {
      auto uj = [&](const Vector3d& p) { return field_expansion(spec, p, 1).u[j]; };
      CHECK(std::abs(oracle::richardson_derivative(uj, r, {i}, h) - fe.v(i, j)) <
            1e-7 * scale_v);
      for (int k = j; k < 3; ++k) {
        auto vjk = [&](const Vector3d& p) { return field_expansion(spec, p, 2).v(j, k); };
        CHECK(std::abs(oracle::richardson_derivative(vjk, r, {i}, h) - fe.w[i](j, k)) <
              1e-7 * scale_w);
      }
    }
  }
}

TEST_CASE("laplace trace invariants at random points") {
  const auto g = square_grid(6);
  const auto pattern = oracle::random_binary_pattern(g, 3);
  const auto spec = FourierSpectrum::of_pattern(pattern);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> pos(0.0, 1.0), height(0.1, 2.0);
  for (int it = 0; it < 300; ++it) {
    const Vector3d r(pos(rng), pos(rng), height(rng));
    const auto fe = field_expansion(spec, r, 3);
    CHECK(std::abs(fe.v.trace()) <= 1e-8 * std::max(fe.v.norm(), 1e-300));
    double wmax = 0.0;
    for (int i = 0; i < 3; ++i) wmax = std::max(wmax, fe.w[i].norm());
    for (int i = 0; i < 3; ++i) {
      const double contracted = fe.w[i](0, 0) + fe.w[i](1, 1) + fe.w[i](2, 2);
      CHECK(std::abs(contracted) <= 1e-8 * std::max(wmax, 1e-300));
    }
    // Full permutation symmetry of w.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          CHECK(fe.w[i](j, k) == doctest::Approx(fe.w[j](i, k)).epsilon(1e-10));
          CHECK(fe.w[i](j, k) == doctest::Approx(fe.w[k](j, i)).epsilon(1e-10));
        }
  }
}

TEST_CASE("exponential damping of the fluctuation part") {
  const auto g = square_grid(6);
  const auto pattern = oracle::random_binary_pattern(g, 5);
  const auto spec = FourierSpectrum::of_pattern(pattern);
  const double mean = spec.mean();
  const double kmin = kTwoPi;  // smallest nonzero mode norm on a square cell
  double prev = std::abs(periodic_potential(spec, {0.3, 0.3, 0.3}).value - mean);
  for (double z = 0.45; z < 2.0; z += 0.15) {
    const double cur = std::abs(periodic_potential(spec, {0.3, 0.3, z}).value - mean);
    CHECK(cur <= prev * std::exp(-kmin * 0.15) * (1.0 + 1e-9) + 1e-15);
    prev = cur;
  }
}

TEST_CASE("basis rows: uniform pattern sums and consistency with field_expansion") {
  const auto g = square_grid(6);
  const double cutoff = FourierSpectrum::nyquist_cutoff(g);
  const Vector3d r(0.37, 0.81, 0.45);

  std::vector<Vector3d> pts = {r, r, r, r};
  std::vector<DerivativeSelector> sel = {DerivativeSelector::psi(), DerivativeSelector::u(2),
                                         DerivativeSelector::v(0, 2),
                                         DerivativeSelector::w(0, 1, 2)};
  const Eigen::MatrixXd rows = basis_derivative_rows(g, cutoff, pts, sel);

  // Psi row applied to the uniform pattern gives exactly 1.
  CHECK(rows.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  // Derivative rows annihilate the uniform pattern.
  CHECK(std::abs(rows.row(1).sum()) < 1e-12);

  const auto pattern = oracle::random_binary_pattern(g, 23);
  const auto spec = FourierSpectrum::of_pattern(pattern, cutoff);
  const auto fe = field_expansion(spec, r, 3);
  const double psi = periodic_potential(spec, r).value;
  CHECK(rows.row(0).dot(pattern.values) == doctest::Approx(psi).epsilon(1e-12));
  CHECK(rows.row(1).dot(pattern.values) == doctest::Approx(fe.u.z()).epsilon(1e-12));
  CHECK(rows.row(2).dot(pattern.values) == doctest::Approx(fe.v(0, 2)).epsilon(1e-12));
  CHECK(rows.row(3).dot(pattern.values) == doctest::Approx(fe.w[0](1, 2)).epsilon(1e-12));
}

TEST_CASE("basis rows: single pixel against tiled polygon-kernel derivative") {
  const auto g = square_grid(4);
  const double z = 0.5;
  const double cutoff = 40.0 / z;  // beyond Nyquist: step pattern needs the tail
  const Vector3d r(0.3, 0.7, z);

  const Eigen::MatrixXd rows =
      basis_derivative_rows(g, cutoff, {r, r}, {DerivativeSelector::psi(),
                                                DerivativeSelector::u(0)});
  MagnetizationPattern single;
  single.geometry = g;
  single.values = Eigen::VectorXd::Zero(g.pixel_count());
  const int pi = 1, pj = 2;
  single.at(pi, pj) = 1.0;

  const double direct = oracle::tiled_kernel_potential(single, r, 20);
  CHECK(rows.row(0).dot(single.values) == doctest::Approx(direct).epsilon(1e-6));

  auto tiled = [&](const Vector3d& p) { return oracle::tiled_kernel_potential(single, p, 20); };
  const double ddx = oracle::richardson_derivative(tiled, r, {0}, 1e-4);
  CHECK(rows.row(1).dot(single.values) == doctest::Approx(ddx).epsilon(2e-5));
}
