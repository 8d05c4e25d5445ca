#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <vector>

#include "maglat/analysis.hpp"
#include "maglat/fieldcore.hpp"
#include "maglat/units.hpp"

namespace maglat {

/// Macroscopic Z-shaped wire beneath the film: a central segment of length L
/// along the in-plane direction {sin(psi), cos(psi), 0} (the Z-trap Ioffe
/// axis), with two parallel leads. Geometry in meters; positive current
/// produces an Ioffe field along +axis at points above the center.
struct ZWireSpec {
  double length = 1e-3;       // central segment L [m]
  double standoff = 0.4e-3;   // depth beneath the film plane [m]
  double psi = 0.0;           // in-plane orientation angle [rad]
  double lead_length = 1e-2;  // modeled lead length [m], >= 10 L

  Eigen::Vector3d axis() const { return {std::sin(psi), std::cos(psi), 0.0}; }

  void validate() const {
    if (!(length > 0.0) || !(standoff > 0.0))
      throw std::invalid_argument("ZWireSpec: length and standoff must be positive");
    if (lead_length < 10.0 * length)
      throw std::invalid_argument("ZWireSpec: lead_length must be >= 10 L (semi-infinite proxy)");
  }

  // The three directed segments (P1 -> P2), current flowing in order.
  std::array<std::pair<Eigen::Vector3d, Eigen::Vector3d>, 3> segments() const;
};

// Closed-form field of one straight finite segment carrying current I [A]
// from p1 to p2, evaluated at r (all SI). Throws on on-segment evaluation.
Eigen::Vector3d segment_field(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, double current,
                              const Eigen::Vector3d& r);

// Biot-Savart field of the Z-wire at r [m], in tesla.
Eigen::Vector3d zwire_field(const ZWireSpec& spec, double current, const Eigen::Vector3d& r);

/// Z-wire as a reduced-units field provider (derivatives via forward-mode
/// second-order jets, exact to machine precision).
class ZWireField final : public FieldSource {
 public:
  ZWireField(ZWireSpec spec, double current, PhysicalParams phys)
      : spec_(spec), current_(current), phys_(phys) {
    spec_.validate();
    phys_.validate();
  }
  FieldExpansion expansion(const Eigen::Vector3d& r_reduced, int order) const override;
  double current() const { return current_; }

 private:
  ZWireSpec spec_;
  double current_;
  PhysicalParams phys_;
};

// find_trap + characterize_trap on the superposed lattice + Z-wire field.
TrapReport combined_trap(const FieldSource& lattice, const ZWireSpec& zwire, double current,
                         const PhysicalParams& phys, const BiasConfig& bias,
                         const AtomSpec& atom, const Eigen::Vector3d& seed);

struct TrajectorySample {
  double h_prime = 0.0;  // trap height [reduced]
  double current = 0.0;  // Z-wire current [A]
  BiasConfig bias;       // reduced units
  double depth = 0.0;    // reduced
  bool curvature_ok = true;
  std::vector<double> well_heights;  // on-axis |B| minima (merge diagnostics)
};

struct LoadingTrajectory {
  std::vector<TrajectorySample> samples;  // h' strictly decreasing
  double depth_floor = 0.0;               // reduced
  Eigen::Vector2d site_xy = {0.0, 0.0};
};

struct TrajectoryPlan {
  double h_start = 0.0;     // reduced; default set from 100 um / d
  double h_end = 0.5;       // reduced lattice height
  int n_samples = 60;       // logarithmic ladder in h'
  double BI_start = 0.0;    // reduced (the 2 G handoff value)
  double depth_floor = 0.0; // reduced
  double I_max = 60.0;      // current bracket [A]
  double max_control_step = 0.35;  // relative continuity bound per sample
};

/// Plans (I_z, B0) per height so each sample is an IP trap at h' above the
/// lattice site with depth >= max(floor, final lattice depth); B_I follows a
/// log-linear schedule from BI_start to the lattice value. The final sample
/// is the lattice-only configuration with I_z = 0.
LoadingTrajectory plan_trajectory(const FieldSource& lattice, const ZWireSpec& zwire,
                                  const PhysicalParams& phys, const Eigen::Vector2d& site_xy,
                                  const BiasConfig& final_bias, const TrajectoryPlan& plan);

struct AuditOptions {
  double zero_threshold = 0.0;     // reduced field (10 mG equivalent)
  double surface_min_field = 0.0;  // reduced (120 G equivalent)
  double z_surface = 0.2;          // audit plane height [reduced]
  int zero_nx = 32, zero_ny = 32, zero_nz = 48;
  int surface_grid = 64;
  // In-plane half-width (fractional) of the atom column scanned for zeros:
  // the transfer happens on the vertical line above the loading site.
  double column_half = 0.25;
};

struct SampleAudit {
  double depth = 0.0;                     // reduced
  double scan_min_field = 0.0;            // min |B| in the atom column
  double surface_min_field = 0.0;         // min |B| over the full audit plane
  double surface_min_field_column = 0.0;  // min |B| on the plane below the atoms
  bool depth_ok = false, zeros_ok = false, surface_ok = false;
};

struct AuditReport {
  std::vector<SampleAudit> samples;
  bool all_ok = true;
};

// Re-evaluates every trajectory sample: no field zeros between trap and
// surface, depth above the floor, and the surface-plane field above the
// repulsive-barrier threshold.
AuditReport audit_trajectory(const LoadingTrajectory& traj, const FieldSource& lattice,
                             const ZWireSpec& zwire, const PhysicalParams& phys,
                             const LatticeGeometry& geometry, const AuditOptions& options);

// Trajectory CSV: h_prime_um, I_z_A, B0x_G, B0y_G, B0z_G, B_I_G, depth_G,
// min_field_G, surface_min_field_G.
void write_trajectory_csv(std::ostream& os, const LoadingTrajectory& traj,
                          const AuditReport& audit, const PhysicalParams& phys);

}  // namespace maglat
