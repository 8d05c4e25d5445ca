#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace maglat {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Reference constants (CODATA / standard tables).
inline constexpr double kMu0 = 4.0e-7 * kPi;            // [T*m/A]
inline constexpr double kBohrMagneton = 9.2740100783e-24; // [J/T]
inline constexpr double kBoltzmann = 1.380649e-23;       // [J/K]
inline constexpr double kGauss = 1.0e-4;                 // [T]

/// Film and lattice scale parameters. All internal computations use reduced
/// units: lengths in units of the lattice period d, scalar potential in units
/// of (1/2)*mu0*delta*Mz, fields in (1/2)*mu0*delta*Mz/d, and so on. This
/// struct owns the conversion factors between reduced and SI quantities.
struct PhysicalParams {
  double mu0 = kMu0;   // [T*m/A]
  double Mz = 0.0;     // remanent out-of-plane magnetization [A/m]
  double delta = 0.0;  // film thickness [m]
  double d = 0.0;      // lattice period [m]

  double magnetization_current() const { return Mz * delta; }  // [A]

  // Unit of the scalar potential Psi, (1/2)*mu0*delta*Mz  [T*m].
  double psi_unit() const { return 0.5 * mu0 * magnetization_current(); }
  // Unit of B = -grad Psi  [T].
  double field_unit() const { return psi_unit() / d; }
  double field_unit_gauss() const { return field_unit() / kGauss; }
  // Unit of the gradient tensor v  [T/m].
  double gradient_unit() const { return psi_unit() / (d * d); }
  // Unit of the curvature tensor w  [T/m^2].
  double curvature_unit() const { return psi_unit() / (d * d * d); }

  void validate() const {
    if (!(mu0 > 0.0 && Mz > 0.0 && delta > 0.0 && d > 0.0))
      throw std::invalid_argument("PhysicalParams: all fields must be strictly positive");
  }
};

/// Hyperfine state of the trapped atom plus the constants needed to convert
/// field strength to energy, temperature and trap frequency.
struct AtomSpec {
  double F = 0.0;
  double mF = 0.0;
  double gF = 0.0;
  double mass = 0.0;          // [kg]
  double mu_B = kBohrMagneton;  // [J/T]
  double omega_recoil = 0.0;  // [rad/s]
  std::string species;

  // Zeeman energy per unit field for the weak-field-seeking state, mF*gF*mu_B.
  double zeeman_slope() const { return mF * gF * mu_B; }  // [J/T]

  double energy_from_tesla(double b) const { return zeeman_slope() * b; }  // [J]
  double mkelvin_from_gauss(double b_gauss) const {
    return energy_from_tesla(b_gauss * kGauss) / kBoltzmann * 1.0e3;
  }
  // Trap frequency from a curvature eigenvalue of |B| in T/m^2.
  double omega_from_curvature(double lambda) const {
    return std::sqrt(zeeman_slope() * lambda / mass);  // [rad/s]
  }
  double lamb_dicke(double omega) const { return std::sqrt(omega_recoil / omega); }

  void validate() const {
    if (!(mF * gF > 0.0))
      throw std::invalid_argument("AtomSpec: mF*gF must be positive (weak-field seeker)");
    if (!(mass > 0.0)) throw std::invalid_argument("AtomSpec: mass must be positive");
  }

  // 87Rb 5^2S_1/2 |F=2, mF=2>.
  static AtomSpec rb87_22() {
    AtomSpec a;
    a.F = 2.0;
    a.mF = 2.0;
    a.gF = 0.49983643;
    a.mass = 1.44316060e-25;
    a.omega_recoil = kTwoPi * 3.771e3;
    a.species = "rb87";
    return a;
  }
};

}  // namespace maglat
