#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "maglat/twowave.hpp"
#include "oracles.hpp"

using namespace maglat;
using Eigen::Vector3d;

namespace {
TwoWaveSpec square_spec() { return {0.5 * kPi, kPi / 3.0, 1.0}; }
TwoWaveSpec triangular_spec() { return {kPi / 3.0, 5.0 * kPi / 12.0, 1.0}; }
}  // namespace

TEST_CASE("alpha closed form for the square spec") {
  const auto s = square_spec();
  CHECK(s.alpha() == doctest::Approx(-kPi / 3.0).epsilon(1e-14));
  const auto t = triangular_spec();
  CHECK(std::tan(t.alpha()) ==
        doctest::Approx(std::cos(t.psi + t.zeta) / std::cos(t.psi)).epsilon(1e-12));
}

TEST_CASE("spec validation rejects degenerate angles") {
  TwoWaveSpec bad{0.0, 0.3, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  TwoWaveSpec bad2{0.5 * kPi, 0.5 * kPi, 1.0};  // cos(psi) = 0
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("lattice periodicity of the analytic potential") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), height(0.0, 1.5);
  std::uniform_int_distribution<int> cell(-3, 3);
  for (const auto& s : {square_spec(), triangular_spec()}) {
    const Eigen::Vector2d a1(1.0, 0.0), a2(std::cos(s.zeta), std::sin(s.zeta));
    for (int it = 0; it < 50; ++it) {
      const Vector3d r(pos(rng), pos(rng), height(rng));
      const Eigen::Vector2d shift = double(cell(rng)) * a1 + double(cell(rng)) * a2;
      const Vector3d r2(r.x() + shift.x(), r.y() + shift.y(), r.z());
      CHECK(analytic_potential(s, r2) == doctest::Approx(analytic_potential(s, r)).epsilon(1e-11));
    }
  }
}

TEST_CASE("analytic potential satisfies Laplace's equation (finite differences)") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), height(0.1, 1.0);
  for (const auto& s : {square_spec(), triangular_spec()}) {
    for (int it = 0; it < 30; ++it) {
      const Vector3d r(pos(rng), pos(rng), height(rng));
      auto f = [&](const Vector3d& p) { return analytic_potential(s, p); };
      const double lap = oracle::richardson_derivative(f, r, {0, 0}, 1e-3) +
                         oracle::richardson_derivative(f, r, {1, 1}, 1e-3) +
                         oracle::richardson_derivative(f, r, {2, 2}, 1e-3);
      const double scale = std::abs(analytic_potential(s, r)) * kTwoPi * kTwoPi + 1.0;
      CHECK(std::abs(lap) < 1e-8 * scale);
    }
  }
}

TEST_CASE("two-wave field equals its explicit four-mode spectrum") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), height(0.2, 1.2);
  for (const auto& s : {square_spec(), triangular_spec()}) {
    const TwoWaveField tw(s);
    const auto spec = two_wave_spectrum(s);
    for (int it = 0; it < 25; ++it) {
      const Vector3d r(pos(rng), pos(rng), height(rng));
      CHECK(periodic_potential(spec, r).value ==
            doctest::Approx(analytic_potential(s, r)).epsilon(1e-12));
      const auto a = tw.expansion(r, 3);
      const auto b = field_expansion(spec, r, 3);
      CHECK((a.u - b.u).norm() < 1e-12 * (1.0 + b.u.norm()));
      CHECK((a.v - b.v).norm() < 1e-12 * (1.0 + b.v.norm()));
      for (int i = 0; i < 3; ++i)
        CHECK((a.w[i] - b.w[i]).norm() < 1e-11 * (1.0 + b.w[i].norm()));
    }
  }
}

TEST_CASE("bias formula matches numerically nulling the transverse field") {
  for (const auto& s : {square_spec(), triangular_spec()}) {
    const double h = 0.5;
    const TwoWaveField tw(s);
    const Vector3d field_at_site = tw.field({0.0, 0.0, h});
    const Vector3d bias = analytic_bias(s, h);
    CHECK((bias + field_at_site).norm() < 1e-12 * (1.0 + field_at_site.norm()));
    // The residual field at the site is perpendicular to the Ioffe axis.
    CHECK(std::abs(field_at_site.dot(s.ioffe_axis())) < 1e-12 * field_at_site.norm());
    CHECK(std::abs(bias.z()) < 1e-14);
  }
  // h -> infinity: bias -> 0.
  CHECK(analytic_bias(square_spec(), 50.0).norm() < 1e-40);
  TwoWaveSpec bad{0.5 * kPi, 0.5 * kPi, 1.0};
  CHECK_THROWS_AS(analytic_bias(bad, 0.5), std::invalid_argument);
}

TEST_CASE("gradient tensor at lattice points: zero eigenvalue along the Ioffe axis") {
  for (const auto& s : {square_spec(), triangular_spec()}) {
    const TwoWaveField tw(s);
    for (double h : {0.3, 0.5, 1.1}) {
      const auto fe = tw.expansion({0.0, 0.0, h}, 2);
      const Vector3d nu = s.ioffe_axis();
      CHECK((fe.v * nu).norm() < 1e-12 * fe.v.norm());
      CHECK(std::abs(fe.v.trace()) < 1e-12 * fe.v.norm());
    }
  }
}

TEST_CASE("two-wave v at trap points is proportional to the rotated-gradient form") {
  // For theta = pi/2, phi = pi/4 the target matrix is
  // [[0,0,cos psi],[0,0,-sin psi],[cos psi,-sin psi,0]].
  for (const auto& s : {square_spec(), triangular_spec()}) {
    const TwoWaveField tw(s);
    const auto fe = tw.expansion({0.0, 0.0, 0.5}, 2);
    Eigen::Matrix3d form = Eigen::Matrix3d::Zero();
    form(0, 2) = form(2, 0) = std::cos(s.psi);
    form(1, 2) = form(2, 1) = -std::sin(s.psi);
    const double scale = fe.v(0, 2) / form(0, 2);
    CHECK((fe.v - scale * form).norm() < 1e-12 * fe.v.norm());
  }
}

TEST_CASE("symmetric Ioffe field value and formula zeros") {
  // sin(2 psi + zeta) = 0 cases give B_I = 0.
  TwoWaveSpec s0{0.5 * kPi, 0.25 * kPi, 1.0};  // 2 psi + zeta = pi
  CHECK(symmetric_ioffe(s0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
  // cos(psi + zeta) = 0 is a genuine pole.
  TwoWaveSpec pole{0.5 * kPi, 0.0, 1.0};  // psi + zeta = pi/2
  CHECK_THROWS_AS(symmetric_ioffe(pole, 0.5), std::invalid_argument);
  // Direct formula value for the square spec.
  const auto s = square_spec();
  const double expected = 1.0 * std::exp(-kPi) * kPi * std::cos(s.alpha()) *
                          std::sin(2.0 * s.psi + s.zeta) /
                          (std::cos(s.psi) * std::cos(s.psi) * std::cos(s.psi + s.zeta));
  CHECK(symmetric_ioffe(s, 0.5) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("amplitude_for_strength reproduces the requested gradient strength") {
  for (const auto& base : {square_spec(), triangular_spec()}) {
    const double C = 0.87, h = 0.5;
    TwoWaveSpec s = base;
    s.amplitude = amplitude_for_strength(C, s.zeta, s.psi, h);
    const TwoWaveField tw(s);
    const auto fe = tw.expansion({0.0, 0.0, h}, 2);
    CHECK(fe.v(0, 2) == doctest::Approx(C * std::cos(s.psi)).epsilon(1e-12));
    CHECK(fe.v(1, 2) == doctest::Approx(-C * std::sin(s.psi)).epsilon(1e-12));
  }
}
