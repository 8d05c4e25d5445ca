#pragma once

#include <Eigen/Dense>

#include "maglat/fieldcore.hpp"

namespace maglat {

/// Closed-form two-wave lattice family: two damped plane waves with equal
/// wavevector norms 2*pi/sin(zeta) forming an oblique lattice of IP traps
/// above the points n1*a1 + n2*a2. All quantities in reduced units
/// (lengths in d, potential in (1/2)mu0*delta*Mz).
struct TwoWaveSpec {
  double zeta = 0.5 * kPi;  // lattice angle [rad]
  double psi = 0.0;         // Ioffe-axis angle [rad]; axis is {sin psi, cos psi, 0}
  double amplitude = 1.0;   // potential amplitude [reduced]

  double alpha() const { return std::atan(std::cos(psi + zeta) / std::cos(psi)); }
  Eigen::Vector3d ioffe_axis() const { return {std::sin(psi), std::cos(psi), 0.0}; }

  void validate() const;
};

// Scalar potential of the two-wave family at r (any z; damped for z > 0).
double analytic_potential(const TwoWaveSpec& spec, const Eigen::Vector3d& r);

// In-plane bias that nulls the transverse field at the lattice points at
// height h, i.e. -B(0,0,h) of the two-wave field.
Eigen::Vector3d analytic_bias(const TwoWaveSpec& spec, double h);

// The Ioffe field strength at which the Zeeman pseudo-potential becomes
// invariant under exchange of the two lattice axes.
double symmetric_ioffe(const TwoWaveSpec& spec, double h);

// Equivalent two-wave amplitude whose gradient tensor at the trap matches a
// strength-C gradient constraint at height h (used to seed bias searches).
double amplitude_for_strength(double C, double zeta, double psi, double h);

/// Closed-form field provider for the two-wave potential.
class TwoWaveField final : public FieldSource {
 public:
  explicit TwoWaveField(TwoWaveSpec spec) : spec_(spec) { spec_.validate(); }
  FieldExpansion expansion(const Eigen::Vector3d& r, int order) const override;
  const TwoWaveSpec& spec() const { return spec_; }

 private:
  TwoWaveSpec spec_;
};

// The same field expressed as an explicit four-mode spectrum on the matching
// lattice geometry (modes (+-1, 0) and (0, +-1)).
FourierSpectrum two_wave_spectrum(const TwoWaveSpec& spec, int n1 = 2, int n2 = 2);

}  // namespace maglat
