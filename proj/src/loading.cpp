#include "maglat/loading.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace maglat {

namespace {

// Forward-mode scalar carrying value, gradient and Hessian w.r.t. the
// evaluation point. Enough arithmetic for the segment-field composition.
struct Jet2 {
  double v = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();

  static Jet2 constant(double c) { return {c, Eigen::Vector3d::Zero(), Eigen::Matrix3d::Zero()}; }
  static Jet2 coordinate(double c, int axis) {
    Jet2 j = constant(c);
    j.g[axis] = 1.0;
    return j;
  }
};

Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.g + b.g, a.h + b.h}; }
Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.g - b.g, a.h - b.h}; }
Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g,
          a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose()};
}
Jet2 operator*(double c, const Jet2& a) { return {c * a.v, c * a.g, c * a.h}; }
Jet2 inverse(const Jet2& a) {
  const double iv = 1.0 / a.v;
  return {iv, -iv * iv * a.g,
          -iv * iv * a.h + 2.0 * iv * iv * iv * a.g * a.g.transpose()};
}
Jet2 jsqrt(const Jet2& a) {
  const double sv = std::sqrt(a.v);
  return {sv, 0.5 / sv * a.g,
          0.5 / sv * a.h - 0.25 / (sv * a.v) * a.g * a.g.transpose()};
}

struct JetVec {
  Jet2 x, y, z;
  Jet2 dot(const Eigen::Vector3d& c) const { return c.x() * x + c.y() * y + c.z() * z; }
  Jet2 squared_norm() const { return x * x + y * y + z * z; }
};

// B of one segment in jet arithmetic:
// B = (mu0 I / 4 pi) [ (a.L)/|a| - (b.L)/|b| ] (L x a) / |L x a|^2.
std::array<Jet2, 3> segment_field_jet(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2,
                                      double current, const Eigen::Vector3d& r) {
  const Eigen::Vector3d lvec = p2 - p1;
  const double llen = lvec.norm();
  if (!(llen > 0.0)) throw std::invalid_argument("segment_field: degenerate segment");
  const Eigen::Vector3d lhat = lvec / llen;

  JetVec a{Jet2::coordinate(r.x() - p1.x(), 0), Jet2::coordinate(r.y() - p1.y(), 1),
           Jet2::coordinate(r.z() - p1.z(), 2)};
  JetVec b{Jet2::coordinate(r.x() - p2.x(), 0), Jet2::coordinate(r.y() - p2.y(), 1),
           Jet2::coordinate(r.z() - p2.z(), 2)};

  // L x a (components are affine in r).
  JetVec lxa{lhat.y() * a.z - lhat.z() * a.y, lhat.z() * a.x - lhat.x() * a.z,
             lhat.x() * a.y - lhat.y() * a.x};
  const Jet2 rho2 = lxa.squared_norm();
  const double rho = std::sqrt(rho2.v);
  const double t_proj = (r - p1).dot(lhat);
  if (rho < 1e-12 * llen) {
    if (t_proj > -1e-9 * llen && t_proj < llen * (1.0 + 1e-9))
      throw std::domain_error("segment_field: evaluation point lies on the wire segment");
    // On the segment axis but outside it the field vanishes identically.
    return {Jet2::constant(0.0), Jet2::constant(0.0), Jet2::constant(0.0)};
  }

  const Jet2 scalar = (kMu0 * current / (2.0 * kTwoPi)) *
                      ((a.dot(lhat) * inverse(jsqrt(a.squared_norm()))) -
                       (b.dot(lhat) * inverse(jsqrt(b.squared_norm())))) *
                      inverse(rho2);
  return {scalar * lxa.x, scalar * lxa.y, scalar * lxa.z};
}

}  // namespace

std::array<std::pair<Eigen::Vector3d, Eigen::Vector3d>, 3> ZWireSpec::segments() const {
  const Eigen::Vector3d nu = axis();
  const Eigen::Vector3d w = nu.cross(Eigen::Vector3d::UnitZ());
  const Eigen::Vector3d zoff(0.0, 0.0, -standoff);
  const Eigen::Vector3d j1 = -0.5 * length * nu + zoff;  // lead-in junction
  const Eigen::Vector3d j2 = 0.5 * length * nu + zoff;   // lead-out junction
  return {{{j1 + lead_length * w, j1}, {j1, j2}, {j2, j2 - lead_length * w}}};
}

Eigen::Vector3d segment_field(const Eigen::Vector3d& p1, const Eigen::Vector3d& p2, double current,
                              const Eigen::Vector3d& r) {
  const auto jets = segment_field_jet(p1, p2, current, r);
  return {jets[0].v, jets[1].v, jets[2].v};
}

Eigen::Vector3d zwire_field(const ZWireSpec& spec, double current, const Eigen::Vector3d& r) {
  spec.validate();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (const auto& [p1, p2] : spec.segments()) b += segment_field(p1, p2, current, r);
  return b;
}

FieldExpansion ZWireField::expansion(const Eigen::Vector3d& r_reduced, int order) const {
  FieldExpansion fe;
  fe.point = r_reduced;
  fe.order = order;
  if (current_ == 0.0) return fe;
  const Eigen::Vector3d r_si = r_reduced * phys_.d;

  Jet2 bx, by, bz;
  for (const auto& [p1, p2] : spec_.segments()) {
    const auto jets = segment_field_jet(p1, p2, current_, r_si);
    bx = bx + jets[0];
    by = by + jets[1];
    bz = bz + jets[2];
  }

  // u = -B, v = -dB/dr, w = -d2B/dr2 in reduced units; jet derivatives are
  // w.r.t. SI coordinates, so each order picks up a factor d.
  const double fu = phys_.field_unit();
  const double cv = phys_.d / fu;
  const double cw = phys_.d * phys_.d / fu;
  const Jet2* comps[3] = {&bx, &by, &bz};
  for (int k = 0; k < 3; ++k) fe.u[k] = -comps[k]->v / fu;
  if (order >= 2) {
    Eigen::Matrix3d v;
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) v(k, j) = -comps[k]->g[j] * cv;
    fe.v = 0.5 * (v + v.transpose());  // curl-free: symmetric up to roundoff
  }
  if (order >= 3) {
    double wraw[3][3][3];
    for (int k = 0; k < 3; ++k) {
      const Eigen::Matrix3d hk = -comps[k]->h * cw;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) wraw[k][i][j] = hk(i, j);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          fe.w[i](j, k) = (wraw[i][j][k] + wraw[j][i][k] + wraw[k][j][i] + wraw[i][k][j] +
                           wraw[j][k][i] + wraw[k][i][j]) /
                          6.0;
  }
  return fe;
}

TrapReport combined_trap(const FieldSource& lattice, const ZWireSpec& zwire, double current,
                         const PhysicalParams& phys, const BiasConfig& bias,
                         const AtomSpec& atom, const Eigen::Vector3d& seed) {
  const ZWireField zfield(zwire, current, phys);
  const CombinedField total({&lattice, &zfield});
  const Eigen::Vector3d trap = find_trap(total, bias, seed);
  return characterize_trap(total, bias, atom, phys, trap);
}

namespace {

// On-axis |B| minima between the surface and well above the trap height, for
// the double-well merge diagnostics.
std::vector<double> axis_minima(const FieldSource& total, const BiasConfig& bias,
                                const Eigen::Vector2d& xy, double z_lo, double z_hi) {
  const int n = 400;
  std::vector<double> zs(n), vs(n);
  for (int i = 0; i < n; ++i) {
    zs[i] = z_lo * std::pow(z_hi / z_lo, double(i) / (n - 1));
    vs[i] = (total.field({xy.x(), xy.y(), zs[i]}) + bias.B0).norm();
  }
  std::vector<double> minima;
  for (int i = 1; i + 1 < n; ++i)
    if (vs[i] < vs[i - 1] && vs[i] <= vs[i + 1]) minima.push_back(zs[i]);
  return minima;
}

}  // namespace

LoadingTrajectory plan_trajectory(const FieldSource& lattice, const ZWireSpec& zwire,
                                  const PhysicalParams& phys, const Eigen::Vector2d& site_xy,
                                  const BiasConfig& final_bias, const TrajectoryPlan& plan) {
  zwire.validate();
  if (!(plan.h_start > plan.h_end)) {
    // Degenerate request: a single sample equal to the lattice configuration.
    LoadingTrajectory traj;
    traj.site_xy = site_xy;
    traj.depth_floor = plan.depth_floor;
    TrajectorySample s;
    s.h_prime = plan.h_end;
    s.current = 0.0;
    s.bias = final_bias;
    s.depth = final_bias.B0.norm() - std::abs(final_bias.B_I);
    traj.samples.push_back(s);
    return traj;
  }

  const double final_depth = final_bias.B0.norm() - std::abs(final_bias.B_I);
  const double target_depth = std::max(plan.depth_floor, final_depth);
  const double BI_end = final_bias.B_I;

  std::vector<double> heights(size_t(plan.n_samples));
  for (int i = 0; i < plan.n_samples; ++i)
    heights[size_t(i)] =
        plan.h_start * std::pow(plan.h_end / plan.h_start, double(i) / (plan.n_samples - 1));

  auto bi_schedule = [&](double h) {
    const double t = std::log(plan.h_start / h) / std::log(plan.h_start / plan.h_end);
    return plan.BI_start + (BI_end - plan.BI_start) * t;
  };

  LoadingTrajectory traj;
  traj.site_xy = site_xy;
  traj.depth_floor = std::min(plan.depth_floor, final_depth);
  traj.samples.resize(size_t(plan.n_samples));

  // Final sample: the lattice alone.
  {
    TrajectorySample& s = traj.samples.back();
    s.h_prime = plan.h_end;
    s.current = 0.0;
    s.bias = final_bias;
    s.depth = final_depth;
  }

  // Walk upward from the lattice, growing the current continuously.
  double current_guess = 0.0;
  for (int i = plan.n_samples - 2; i >= 0; --i) {
    const double h = heights[size_t(i)];
    const double bi = bi_schedule(h);

    auto depth_at = [&](double current) -> std::pair<double, BiasConfig> {
      const ZWireField zf(zwire, current, phys);
      const CombinedField total({&lattice, &zf});
      const BiasConfig bias = solve_bias(total, site_xy, h, bi, final_bias.axis);
      return {bias.B0.norm() - std::abs(bi), bias};
    };

    double lo = 0.0, hi = std::max(2.0 * current_guess, 0.05);
    auto [d_lo, bias_lo] = depth_at(lo);
    TrajectorySample& s = traj.samples[size_t(i)];
    s.h_prime = h;
    if (d_lo >= target_depth) {
      // The lattice alone already exceeds the floor at this height
      // (possible just above h_end); keep the zero-current solution.
      s.current = 0.0;
      s.bias = bias_lo;
      s.depth = d_lo;
      current_guess = 0.0;
    } else {
      double d_hi = 0.0;
      BiasConfig bias_hi;
      for (;;) {
        auto [d, b] = depth_at(hi);
        d_hi = d;
        bias_hi = b;
        if (d_hi >= target_depth) break;
        hi *= 2.0;
        if (hi > plan.I_max)
          throw InfeasibleError("plan_trajectory: depth floor unreachable at height h' = " +
                                std::to_string(h * phys.d * 1e6) + " um");
      }
      double flo = d_lo - target_depth, fhi = d_hi - target_depth;
      double root = hi;
      BiasConfig bias_root = bias_hi;
      for (int it = 0; it < 60 && (hi - lo) > 1e-10 * std::max(1.0, hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (std::abs(fhi - flo) > 0.0) {
          const double sec = lo - flo * (hi - lo) / (fhi - flo);
          if (sec > lo + 0.05 * (hi - lo) && sec < hi - 0.05 * (hi - lo)) mid = sec;
        }
        auto [d, b] = depth_at(mid);
        if (d - target_depth >= 0.0) {
          hi = mid;
          fhi = d - target_depth;
          root = mid;
          bias_root = b;
        } else {
          lo = mid;
          flo = d - target_depth;
        }
      }
      s.current = root;
      s.bias = bias_root;
      s.depth = bias_root.B0.norm() - std::abs(bi);
      current_guess = root;
    }

    // Diagnostics at the planned critical point: positive curvature marks a
    // true minimum; during the double-well merge the point can briefly turn
    // into a z-saddle while the atoms follow the adjacent wells (reported
    // through well_heights).
    {
      const ZWireField zf(zwire, s.current, phys);
      const CombinedField total({&lattice, &zf});
      const ZeemanDerivatives zd =
          zeeman_derivatives(total, s.bias, {site_xy.x(), site_xy.y(), h}, 2);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(zd.hessian);
      s.curvature_ok = es.eigenvalues()[0] > 0.0;
      s.well_heights = axis_minima(total, s.bias, site_xy, 0.04, 1.5 * h);
    }
  }
  return traj;
}

AuditReport audit_trajectory(const LoadingTrajectory& traj, const FieldSource& lattice,
                             const ZWireSpec& zwire, const PhysicalParams& phys,
                             const LatticeGeometry& geometry, const AuditOptions& options) {
  AuditReport report;
  report.samples.resize(traj.samples.size());
  for (size_t i = 0; i < traj.samples.size(); ++i) {
    const TrajectorySample& s = traj.samples[i];
    SampleAudit& a = report.samples[i];
    const ZWireField zf(zwire, s.current, phys);
    const CombinedField total({&lattice, &zf});

    a.depth = s.bias.B0.norm() - std::abs(s.bias.B_I);
    a.depth_ok = a.depth >= traj.depth_floor - 1e-9;

    // Zero scan in the atom column (the vertical region the transferring
    // atoms traverse) between the surface plane and above the trap.
    ZeroScanRegion region;
    region.z_min = options.z_surface;
    region.z_max = std::max(1.2 * s.h_prime, options.z_surface * 1.5);
    region.nx = options.zero_nx;
    region.ny = options.zero_ny;
    region.nz = options.zero_nz;
    const Eigen::Vector2d site_frac = geometry.fractional(traj.site_xy);
    region.window_center = site_frac;
    region.window_half = {options.column_half, options.column_half};
    const ZeroScanResult zeros =
        detect_zeros(total, s.bias, geometry, region, options.zero_threshold);
    a.scan_min_field = zeros.min_field;
    a.zeros_ok = zeros.points.empty();

    // Surface-plane audit at z_surface: full unit cell and the column below
    // the atoms.
    const int g = options.surface_grid;
    std::vector<Eigen::Vector3d> plane(size_t(g) * g, s.bias.B0);
    total.add_plane_fields(geometry, g, g, options.z_surface, plane);
    double smin = std::numeric_limits<double>::infinity();
    double cmin = std::numeric_limits<double>::infinity();
    for (int jb = 0; jb < g; ++jb)
      for (int ia = 0; ia < g; ++ia) {
        const double v = plane[size_t(jb) * g + ia].norm();
        smin = std::min(smin, v);
        double ds = std::abs(double(ia) / g - site_frac.x());
        double dt = std::abs(double(jb) / g - site_frac.y());
        ds = std::min(ds, 1.0 - ds);  // periodic distance
        dt = std::min(dt, 1.0 - dt);
        if (ds <= options.column_half && dt <= options.column_half) cmin = std::min(cmin, v);
      }
    a.surface_min_field = smin;
    a.surface_min_field_column = cmin;
    a.surface_ok = smin >= options.surface_min_field;

    report.all_ok = report.all_ok && a.depth_ok && a.zeros_ok && a.surface_ok;
  }
  return report;
}

void write_trajectory_csv(std::ostream& os, const LoadingTrajectory& traj,
                          const AuditReport& audit, const PhysicalParams& phys) {
  os << "h_prime_um,I_z_A,B0x_G,B0y_G,B0z_G,B_I_G,depth_G,min_field_G,surface_min_field_G\n";
  os << std::setprecision(10);
  const double fu = phys.field_unit_gauss();
  for (size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    const auto& a = audit.samples.at(i);
    os << s.h_prime * phys.d * 1e6 << ',' << s.current << ',' << s.bias.B0.x() * fu << ','
       << s.bias.B0.y() * fu << ',' << s.bias.B0.z() * fu << ',' << s.bias.B_I * fu << ','
       << s.depth * fu << ',' << a.scan_min_field * fu << ',' << a.surface_min_field * fu
       << '\n';
  }
}

}  // namespace maglat
