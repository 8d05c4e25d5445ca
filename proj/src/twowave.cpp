#include "maglat/twowave.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace maglat {

void TwoWaveSpec::validate() const {
  if (!(zeta > 0.0 && zeta < kPi))
    throw std::invalid_argument("TwoWaveSpec: zeta must lie in (0, pi)");
  if (std::abs(std::cos(psi)) < 1e-12)
    throw std::invalid_argument("TwoWaveSpec: cos(psi) = 0 leaves alpha undefined");
  if (!(std::isfinite(amplitude)))
    throw std::invalid_argument("TwoWaveSpec: non-finite amplitude");
}

namespace {

// In-plane wavevectors of the two waves; both have norm 2*pi/sin(zeta).
void wave_vectors(const TwoWaveSpec& s, Eigen::Vector2d& k1, Eigen::Vector2d& k2, double& kappa) {
  k1 = {kTwoPi, -kTwoPi / std::tan(s.zeta)};
  k2 = {0.0, kTwoPi / std::sin(s.zeta)};
  kappa = kTwoPi / std::sin(s.zeta);
}

}  // namespace

double analytic_potential(const TwoWaveSpec& spec, const Eigen::Vector3d& r) {
  spec.validate();
  Eigen::Vector2d k1, k2;
  double kappa;
  wave_vectors(spec, k1, k2, kappa);
  const double a = spec.alpha();
  return spec.amplitude *
         (std::cos(a) * std::sin(k1.x() * r.x() + k1.y() * r.y()) +
          std::sin(a) * std::sin(k2.x() * r.x() + k2.y() * r.y())) *
         std::exp(-kappa * r.z());
}

Eigen::Vector3d analytic_bias(const TwoWaveSpec& spec, double h) {
  spec.validate();
  if (!(h > 0.0)) throw std::domain_error("analytic_bias: h must be positive");
  const double a = spec.alpha();
  const double damp = std::exp(-kTwoPi * h / std::sin(spec.zeta));
  const double scale = spec.amplitude * damp * kTwoPi * std::cos(a) / std::cos(spec.psi);
  const Eigen::Vector3d field(-std::cos(spec.psi) * scale, std::sin(spec.psi) * scale, 0.0);
  return -field;
}

double symmetric_ioffe(const TwoWaveSpec& spec, double h) {
  spec.validate();
  if (!(h > 0.0)) throw std::domain_error("symmetric_ioffe: h must be positive");
  const double cpz = std::cos(spec.psi + spec.zeta);
  if (std::abs(cpz) < 1e-12)
    throw std::invalid_argument("symmetric_ioffe: cos(psi + zeta) = 0");
  const double a = spec.alpha();
  const double damp = std::exp(-kTwoPi * h / std::sin(spec.zeta));
  return spec.amplitude * damp * kPi * std::cos(a) * std::sin(2.0 * spec.psi + spec.zeta) /
         (std::cos(spec.psi) * std::cos(spec.psi) * cpz);
}

double amplitude_for_strength(double C, double zeta, double psi, double h) {
  // Matching v_xz at the lattice point: only wave 1 contributes there, with
  // v_xz = -amp * cos(alpha) * k1x * kappa * damp = C cos(psi) (reduced).
  TwoWaveSpec s{zeta, psi, 1.0};
  const double damp = std::exp(-kTwoPi * h / std::sin(zeta));
  const double kappa = kTwoPi / std::sin(zeta);
  return -C * std::cos(psi) / (std::cos(s.alpha()) * kTwoPi * kappa * damp);
}

FieldExpansion TwoWaveField::expansion(const Eigen::Vector3d& r, int order) const {
  if (order < 1 || order > 3) throw std::invalid_argument("TwoWaveField: order must be 1..3");
  Eigen::Vector2d k1, k2;
  double kappa;
  wave_vectors(spec_, k1, k2, kappa);
  const double a = spec_.alpha();
  const double amp[2] = {spec_.amplitude * std::cos(a), spec_.amplitude * std::sin(a)};
  const Eigen::Vector2d kv[2] = {k1, k2};

  FieldExpansion fe;
  fe.point = r;
  fe.order = order;
  double wsym[3][3][3] = {};
  for (int wave = 0; wave < 2; ++wave) {
    // amp * sin(k.rho) e^{-kappa z} = Im[amp e^{i k.rho - kappa z}]
    const std::complex<double> term =
        amp[wave] * std::exp(std::complex<double>(-kappa * r.z(),
                                                  kv[wave].x() * r.x() + kv[wave].y() * r.y()));
    const std::complex<double> f[3] = {{0.0, kv[wave].x()}, {0.0, kv[wave].y()}, {-kappa, 0.0}};
    for (int i = 0; i < 3; ++i) {
      fe.u[i] += (term * f[i]).imag();
      if (order < 2) continue;
      for (int j = i; j < 3; ++j) {
        const double vij = (term * f[i] * f[j]).imag();
        fe.v(i, j) += vij;
        if (j != i) fe.v(j, i) += vij;
        if (order < 3) continue;
        for (int k = j; k < 3; ++k) wsym[i][j][k] += (term * f[i] * f[j] * f[k]).imag();
      }
    }
  }
  if (order >= 3) {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        for (int k = j; k < 3; ++k) {
          const double wijk = wsym[i][j][k];
          fe.w[i](j, k) = fe.w[i](k, j) = wijk;
          fe.w[j](i, k) = fe.w[j](k, i) = wijk;
          fe.w[k](i, j) = fe.w[k](j, i) = wijk;
        }
  }
  return fe;
}

FourierSpectrum two_wave_spectrum(const TwoWaveSpec& spec, int n1, int n2) {
  spec.validate();
  LatticeGeometry g;
  g.zeta = spec.zeta;
  g.n1 = n1;
  g.n2 = n2;
  const double a = spec.alpha();
  // sin(k.rho) contributed by a Hermitian pair: amp(1,0) = -i/2 * A.
  const std::complex<double> half_i(0.0, -0.5);
  std::map<std::pair<int, int>, std::complex<double>> modes;
  modes[{1, 0}] = half_i * spec.amplitude * std::cos(a);
  modes[{-1, 0}] = std::conj(modes[{1, 0}]);
  modes[{0, 1}] = half_i * spec.amplitude * std::sin(a);
  modes[{0, -1}] = std::conj(modes[{0, 1}]);
  return FourierSpectrum::explicit_modes(g, std::move(modes),
                                         2.0 * kTwoPi / std::sin(spec.zeta));
}

}  // namespace maglat
