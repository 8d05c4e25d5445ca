#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "maglat/analysis.hpp"
#include "maglat/constraints.hpp"
#include "maglat/lpsolve.hpp"
#include "maglat/pattern.hpp"
#include "maglat/units.hpp"

namespace maglat {

struct SiteSpec {
  std::string label = "A";
  Eigen::Vector2d xy = {0.0, 0.0};
  double height = 0.5;  // reduced
  double phi = 0.25 * kPi, theta = 0.5 * kPi, psi = 0.0;
  bool gradient = true;  // add the gradient-tensor rows for this site

  TrapSite trap_site() const {
    TrapSite s;
    s.position = {xy.x(), xy.y(), height};
    s.phi = phi;
    s.theta = theta;
    s.psi = psi;
    s.label = label;
    return s;
  }
};

struct FieldConstraintSpec {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // reduced
  int component = 0;                                // 0..2 (x, y, z)
  double target = 0.0;                              // reduced, times C
};

struct EqualitySpec {
  std::string site_a, site_b;
  int selector = 1;  // 1 = u, 2 = v
};

/// Parsed design-spec file. Sections: [lattice] zeta, d, n1, n2;
/// [film] Mz, delta; [atom] species | F, mF, gF, mass; repeated [[site]] and
/// [[constraint]] blocks (see README for the exact keys).
struct DesignSpec {
  LatticeGeometry geometry;
  PhysicalParams phys;
  AtomSpec atom = AtomSpec::rb87_22();
  std::vector<SiteSpec> sites;
  std::vector<FieldConstraintSpec> field_constraints;
  std::vector<EqualitySpec> equalities;
  LpOptions lp;
  bool analyze = true;
  bool scan_zeros = false;
  IoffeSearchOptions ioffe;

  static DesignSpec parse(const std::string& text);
  static DesignSpec load(const std::string& path);
};

struct DesignResult {
  MagnetizationPattern pattern;  // binary, re-analysis runs on this
  double C = 0.0;
  LpSolution lp;
  RoundingReport rounding;
  int rank = 0;
  BiasConfig bias;               // equalized operating point
  IoffeSearchResult ioffe;
  std::vector<TrapReport> reports;
  std::vector<std::pair<std::string, Eigen::Vector2d>> barrier_dirs;
  ZeroScanResult zeros;
  std::string provenance;
};

// Full pipeline: constraints -> LP (both orientations) -> rounding ->
// re-analysis of the rounded binary pattern (trap positions re-found by
// Newton, Ioffe field equalized over the primitive lattice directions).
DesignResult run_design(const DesignSpec& spec);

// The nested nonlinear search of the triangular design: tunes the u_y target
// of a field constraint at `point` until the three nearest-neighbor barriers
// of the re-analyzed rounded pattern are equal.
struct EqualizeOptions {
  Eigen::Vector3d point = {0.5, 0.0, 0.5};
  int component = 1;  // u_y
  double scan_lo = -0.15, scan_hi = -0.05;
  int scan_points = 5;
  double tol = 5e-3;  // on the relative barrier mismatch
  int max_refine = 12;
};

struct EqualizeResult {
  double target = 0.0;  // tuned u_y value (relative to C)
  DesignResult design;
  std::vector<std::pair<double, double>> objective_scan;  // (target, objective)
};

EqualizeResult equalize_triangular(const DesignSpec& base, const EqualizeOptions& options = {});

// Writes pattern file, solver report, trap-report CSV, potential-map CSV and
// (optionally) raster images into `dir`. Byte-deterministic except images.
void export_result(const DesignResult& result, const DesignSpec& spec, const std::string& dir,
                   bool csv = true, bool png = false);

// 8-bit grayscale PNG.
void write_png(const std::string& path, const std::vector<unsigned char>& pixels, int width,
               int height);

}  // namespace maglat
