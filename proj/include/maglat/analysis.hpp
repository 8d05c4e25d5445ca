#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "maglat/errors.hpp"
#include "maglat/fieldcore.hpp"
#include "maglat/pattern.hpp"
#include "maglat/units.hpp"

namespace maglat {

/// External field configuration: uniform bias B0 plus the signed Ioffe field
/// along the trap axis. All in reduced field units (1/2)mu0*delta*Mz/d.
struct BiasConfig {
  Eigen::Vector3d B0 = Eigen::Vector3d::Zero();
  double B_I = 0.0;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();

  Eigen::Vector3d B0_gauss(const PhysicalParams& p) const { return B0 * p.field_unit_gauss(); }
  double B_I_gauss(const PhysicalParams& p) const { return B_I * p.field_unit_gauss(); }

  // ||B0 + B_src(r)|| should equal |B_I| with the field along +-axis at a
  // consistent trap; returns the residual of that identity.
  double consistency_residual(const FieldSource& source, const Eigen::Vector3d& r_trap) const;
};

/// Superposition of field sources (non-owning).
class CombinedField final : public FieldSource {
 public:
  explicit CombinedField(std::vector<const FieldSource*> parts) : parts_(std::move(parts)) {}
  FieldExpansion expansion(const Eigen::Vector3d& r, int order) const override;
  void add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                        std::vector<Eigen::Vector3d>& accum) const override;

 private:
  std::vector<const FieldSource*> parts_;
};

struct Barrier {
  std::string direction;               // label, e.g. "a1", "a2", "a1-a2"
  Eigen::Vector3d saddle;              // reduced position
  double height = 0.0;                 // reduced field units above the trap
  double height_gauss = 0.0;
  double height_mk = 0.0;
};

struct TrapReport {
  Eigen::Vector3d position;            // reduced units
  Eigen::Vector3d position_si;         // meters
  BiasConfig bias;
  double min_field = 0.0;              // reduced
  double min_field_gauss = 0.0;
  double depth = 0.0;                  // reduced, ||B0|| - |B_I|
  double depth_gauss = 0.0;
  double depth_mk = 0.0;
  Eigen::Matrix3d curvature;           // Hessian of |B| (reduced)
  Eigen::Matrix3d curvature_ip;        // IP-form curvature from (v, w, B_I)
  double curvature_agreement = 0.0;    // relative difference of the two routes
  Eigen::Vector3d curvature_eigenvalues;  // ascending, reduced
  Eigen::Matrix3d curvature_axes;         // columns = eigenvectors
  Eigen::Vector3d omega;               // rad/s, same order as eigenvalues
  Eigen::Vector3d lamb_dicke;          // per axis
  std::vector<Barrier> barriers;
  std::vector<Eigen::Vector3d> zero_flags;  // spurious-zero findings, if scanned
};

// Zeeman pseudo-potential V = mF gF muB ||B_src(r) + B0||, in joules.
double zeeman_potential(const FieldSource& source, const BiasConfig& bias, const AtomSpec& atom,
                        const PhysicalParams& phys, const Eigen::Vector3d& r);

// Reduced pseudo-potential ||B_src(r) + B0|| and its derivatives.
struct ZeemanDerivatives {
  double value = 0.0;
  Eigen::Vector3d gradient;
  Eigen::Matrix3d hessian;
  Eigen::Vector3d field;  // total field
};
ZeemanDerivatives zeeman_derivatives(const FieldSource& source, const BiasConfig& bias,
                                     const Eigen::Vector3d& r, int order = 2);

// IP-trap curvature of ||B|| from the local expansion and the Ioffe vector:
// [v.v - w.(B_I axis)] / |B_I|. The sign of the w term follows the
// scalar-potential derivative convention of FieldExpansion.
Eigen::Matrix3d ip_curvature(const FieldExpansion& fe, const Eigen::Vector3d& ioffe_vector);

/// Finds the in-plane point near `site_xy` where the gradient tensor at
/// height h has a null eigenvalue and the required bias is purely in-plane,
/// then returns the bias producing an IP trap there with Ioffe field B_I.
/// axis_hint orients the null eigenvector (and the sign of B_I).
BiasConfig solve_bias(const FieldSource& source, const Eigen::Vector2d& site_xy, double h_target,
                      double B_I, const Eigen::Vector3d& axis_hint);

// Newton/trust-region minimization of the pseudo-potential from `seed`.
// Throws NotATrapError on saddles, flat potentials or escape.
Eigen::Vector3d find_trap(const FieldSource& source, const BiasConfig& bias,
                          const Eigen::Vector3d& seed);

// Full local characterization at a converged minimum.
TrapReport characterize_trap(const FieldSource& source, const BiasConfig& bias,
                             const AtomSpec& atom, const PhysicalParams& phys,
                             const Eigen::Vector3d& trap_position);

// Index-1 saddle of V between two converged minima; the barrier height is
// V(saddle) - V(trap_a) in reduced units.
Barrier barrier_between(const FieldSource& source, const BiasConfig& bias,
                        const Eigen::Vector3d& trap_a, const Eigen::Vector3d& trap_b,
                        const std::string& label = "");

// Convenience: barrier in a lattice direction from the trap at `trap`.
Barrier barrier_along(const FieldSource& source, const BiasConfig& bias,
                      const Eigen::Vector3d& trap, const Eigen::Vector2d& lattice_dir,
                      const std::string& label = "");

struct IoffeSearchOptions {
  double bi_abs_min = 0.008;   // reduced units
  double bi_abs_max = 0.4;
  int scan_points = 10;        // per sign, geometric ladder
  bool scan_positive = true;
  bool scan_negative = true;
  double tol = 1e-6;           // relative tolerance on B_I
};

struct IoffeSearchResult {
  double B_I = 0.0;            // selected root
  double barrier_a = 0.0, barrier_b = 0.0;
  std::vector<double> roots;   // all barrier-equality roots found
};

/// 1D root search on B_I nulling the barrier difference between two lattice
/// directions. Among multiple roots the one with the largest equalized
/// barrier is selected (the physically useful operating point).
IoffeSearchResult symmetric_ioffe_search(const FieldSource& source,
                                         const Eigen::Vector2d& site_xy, double h,
                                         const Eigen::Vector3d& axis_hint,
                                         const Eigen::Vector2d& dir_a,
                                         const Eigen::Vector2d& dir_b,
                                         const IoffeSearchOptions& opt = {});

struct ZeroScanRegion {
  double z_min = 0.02;
  double z_max = 4.0;
  int nx = 64, ny = 64, nz = 64;
  bool log_z = true;
  // In-plane fractional window (center, half-width in (a1, a2) coordinates);
  // the default covers one full unit cell with periodic wrap.
  Eigen::Vector2d window_center = {0.5, 0.5};
  Eigen::Vector2d window_half = {0.5, 0.5};

  bool full_cell() const { return window_half.x() >= 0.5 && window_half.y() >= 0.5; }
};

struct ZeroScanResult {
  std::vector<Eigen::Vector3d> points;  // refined points with |B| < threshold
  double min_field = 0.0;               // global refined minimum of |B|
  Eigen::Vector3d min_point;
  ZeroScanRegion resolution;
};

// Grid scan + local minimization of ||B_total|| over one unit cell.
// An empty result certifies no zeros above `threshold` at this resolution.
ZeroScanResult detect_zeros(const FieldSource& source, const BiasConfig& bias,
                            const LatticeGeometry& geometry, const ZeroScanRegion& region,
                            double threshold);

struct TruncationConfig {
  Eigen::Vector2d site_xy = {0.0, 0.0};
  double h = 0.5;
  Eigen::Vector3d axis_hint = Eigen::Vector3d::UnitX();
  double B_I = 0.0;  // reduced; the reference operating point
  std::vector<std::pair<std::string, Eigen::Vector2d>> barrier_dirs;
  AtomSpec atom;
  PhysicalParams phys;
  int map_grid = 128;
};

struct TruncationReport {
  int modes_kept = 0;
  double cutoff = 0.0;
  double potential_deviation = 0.0;  // max |dV| / potential range in plane
  double depth_change = 0.0;         // relative, signed
  std::vector<std::pair<std::string, double>> barrier_changes;  // relative, signed
  // Relative frequency changes keyed by dominant axis of the mode (x/y/z).
  double freq_change_x = 0.0, freq_change_y = 0.0, freq_change_z = 0.0;
};

// Re-evaluates trap physics with modes ||k|| <= cutoff only and reports
// relative deviations from the full-resolution reference. The external
// fields (B0, B_I) stay fixed at the reference operating point.
TruncationReport fourier_truncation_report(const MagnetizationPattern& pattern, double cutoff,
                                           const TruncationConfig& config);

// Potential-map CSV export: x/d, y/d, z/d, Psi_reduced, Bx_reduced,
// By_reduced, Bz_reduced over an n1 x n2 fractional grid at height z.
void write_potential_map(std::ostream& os, const FourierSpectrum& spectrum, double z, int n1,
                         int n2);

// Report CSV (one row per trap) with the documented column schema.
void write_trap_reports_csv(std::ostream& os, const std::vector<TrapReport>& reports,
                            const PhysicalParams& phys);

}  // namespace maglat
