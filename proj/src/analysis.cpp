#include "maglat/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace maglat {

double BiasConfig::consistency_residual(const FieldSource& source,
                                        const Eigen::Vector3d& r_trap) const {
  const Eigen::Vector3d total = source.field(r_trap) + B0;
  return (total - B_I * axis).norm();
}

FieldExpansion CombinedField::expansion(const Eigen::Vector3d& r, int order) const {
  FieldExpansion sum;
  sum.point = r;
  sum.order = order;
  for (const auto* part : parts_) {
    const FieldExpansion fe = part->expansion(r, order);
    sum.u += fe.u;
    sum.v += fe.v;
    for (int i = 0; i < 3; ++i) sum.w[i] += fe.w[i];
  }
  return sum;
}

void CombinedField::add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                                     std::vector<Eigen::Vector3d>& accum) const {
  for (const auto* part : parts_) part->add_plane_fields(cell, g1, g2, z, accum);
}

double zeeman_potential(const FieldSource& source, const BiasConfig& bias, const AtomSpec& atom,
                        const PhysicalParams& phys, const Eigen::Vector3d& r) {
  const double v_red = (source.field(r) + bias.B0).norm();
  return atom.energy_from_tesla(v_red * phys.field_unit());
}

ZeemanDerivatives zeeman_derivatives(const FieldSource& source, const BiasConfig& bias,
                                     const Eigen::Vector3d& r, int order) {
  const FieldExpansion fe = source.expansion(r, order >= 2 ? 3 : 1);
  ZeemanDerivatives out;
  out.field = -fe.u + bias.B0;
  out.value = out.field.norm();
  if (out.value <= 0.0)
    throw NotATrapError("zeeman_derivatives: field zero encountered (cusp in the potential)");
  const Eigen::Vector3d bhat = out.field / out.value;
  const Eigen::Vector3d vb = fe.v * bhat;
  out.gradient = -vb;
  if (order >= 2)
    out.hessian = (fe.v * fe.v - vb * vb.transpose()) / out.value - fe.w_dot(bhat);
  return out;
}

Eigen::Matrix3d ip_curvature(const FieldExpansion& fe, const Eigen::Vector3d& ioffe_vector) {
  const double bi = ioffe_vector.norm();
  if (!(bi > 0.0)) throw std::invalid_argument("ip_curvature: zero Ioffe vector");
  return (fe.v * fe.v - fe.w_dot(ioffe_vector)) / bi;
}

namespace {

struct EigenPair {
  double value;
  Eigen::Vector3d vector;
};

// Eigenvalue of smallest magnitude (the near-null direction of an IP
// gradient tensor) with its eigenvector.
EigenPair smallest_abs_eigenpair(const Eigen::Matrix3d& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[best])) best = i;
  return {es.eigenvalues()[best], es.eigenvectors().col(best)};
}

}  // namespace

BiasConfig solve_bias(const FieldSource& source, const Eigen::Vector2d& site_xy, double h_target,
                      double B_I, const Eigen::Vector3d& axis_hint) {
  if (!(h_target > 0.0)) throw std::invalid_argument("solve_bias: height must be positive");
  Eigen::Vector2d xy = site_xy;

  auto residual = [&](const Eigen::Vector2d& p) -> Eigen::Vector2d {
    const FieldExpansion fe = source.expansion({p.x(), p.y(), h_target}, 2);
    const EigenPair null_dir = smallest_abs_eigenpair(fe.v);
    Eigen::Vector3d nu = null_dir.vector;
    if (nu.dot(axis_hint) < 0.0) nu = -nu;
    // (a) criticality: det v = 0 through its smallest eigenvalue;
    // (b) in-plane realizability: the required bias has no z component.
    const double f1 = null_dir.value;
    const double f2 = -fe.u.z() - B_I * nu.z();  // B_z(pattern) - B_I nu_z
    return {f1, f2};
  };

  const double fd = 1e-7;
  bool converged = false;
  for (int it = 0; it < 60 && !converged; ++it) {
    const Eigen::Vector2d f = residual(xy);
    const FieldExpansion fe = source.expansion({xy.x(), xy.y(), h_target}, 2);
    const double scale = fe.v.norm() + std::abs(B_I);
    if (f.norm() < 1e-12 * std::max(scale, 1e-6)) {
      converged = true;
      break;
    }
    Eigen::Matrix2d jac;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d dp = Eigen::Vector2d::Zero();
      dp[c] = fd;
      jac.col(c) = (residual(xy + dp) - residual(xy - dp)) / (2.0 * fd);
    }
    Eigen::Vector2d step = jac.fullPivLu().solve(-f);
    const double cap = 0.1;
    if (step.norm() > cap) step *= cap / step.norm();
    xy += step;
    if ((xy - site_xy).norm() > 0.45)
      throw SolverFailure("solve_bias: drifted away from the seed site; no IP-compatible point");
  }
  if (!converged)
    throw SolverFailure("solve_bias: Newton iteration on (det v, B_z) did not converge");

  const Eigen::Vector3d r_star(xy.x(), xy.y(), h_target);
  const FieldExpansion fe = source.expansion(r_star, 2);
  Eigen::Vector3d nu = smallest_abs_eigenpair(fe.v).vector;
  if (nu.dot(axis_hint) < 0.0) nu = -nu;
  BiasConfig bias;
  bias.axis = nu;
  bias.B_I = B_I;
  bias.B0 = B_I * nu - (-fe.u);
  return bias;
}

Eigen::Vector3d find_trap(const FieldSource& source, const BiasConfig& bias,
                          const Eigen::Vector3d& seed) {
  if (!(seed.z() > 0.0)) throw std::invalid_argument("find_trap: seed must be above the plane");
  Eigen::Vector3d r = seed;
  const double z_floor = 1e-3, z_escape = seed.z() + 6.0;
  const double gtol = 1e-11;

  for (int it = 0; it < 120; ++it) {
    const ZeemanDerivatives zd = zeeman_derivatives(source, bias, r, 2);
    const double gscale = std::max(zd.hessian.norm(), 1e-12);
    if (zd.gradient.norm() <= gtol * std::max(1.0, gscale)) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(zd.hessian);
      if (es.eigenvalues()[0] <= 1e-9 * std::abs(es.eigenvalues()[2]))
        throw NotATrapError("find_trap: converged to a non-minimum critical point");
      return r;
    }

    // Positive-definite modification of the Hessian.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(zd.hessian);
    const double lmax = std::max(
        {std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[2]), 1e-14});
    Eigen::Vector3d lam;
    for (int i = 0; i < 3; ++i) lam[i] = std::max(es.eigenvalues()[i], 1e-6 * lmax);
    const Eigen::Matrix3d hmod =
        es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    Eigen::Vector3d step = hmod.ldlt().solve(-zd.gradient);
    if (step.norm() > 0.25) step *= 0.25 / step.norm();

    // In the local quadratic regime the predicted decrease falls below the
    // roundoff of V; take plain Newton steps there.
    if (zd.gradient.norm() < 1e-6 * std::max(1.0, gscale)) {
      const Eigen::Vector3d trial = r + step;
      if (trial.z() <= z_floor)
        throw NotATrapError("find_trap: iterate crashed into the film surface");
      r = trial;
      continue;
    }

    // Backtracking line search on V.
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Eigen::Vector3d trial = r + t * step;
      if (trial.z() > z_floor) {
        const double v_trial = (source.field(trial) + bias.B0).norm();
        if (v_trial < zd.value) {
          r = trial;
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved)
      throw NotATrapError("find_trap: line search stalled (flat potential or cusp)");
    if (r.z() >= z_escape)
      throw NotATrapError("find_trap: iterate escaped to large z (no bound trap)");
    if (r.z() <= 2.0 * z_floor)
      throw NotATrapError("find_trap: iterate crashed into the film surface");
  }
  throw SolverFailure("find_trap: Newton did not converge");
}

TrapReport characterize_trap(const FieldSource& source, const BiasConfig& bias,
                             const AtomSpec& atom, const PhysicalParams& phys,
                             const Eigen::Vector3d& trap_position) {
  atom.validate();
  phys.validate();
  const FieldExpansion fe = source.expansion(trap_position, 3);
  const Eigen::Vector3d b_total = -fe.u + bias.B0;
  const double b_norm = b_total.norm();

  TrapReport rep;
  rep.position = trap_position;
  rep.position_si = trap_position * phys.d;
  rep.bias = bias;
  rep.min_field = b_norm;
  rep.min_field_gauss = b_norm * phys.field_unit_gauss();
  rep.depth = bias.B0.norm() - std::abs(bias.B_I);
  rep.depth_gauss = rep.depth * phys.field_unit_gauss();
  rep.depth_mk = atom.mkelvin_from_gauss(rep.depth_gauss);

  // Route (a): Hessian of ||B_total|| from the local expansion.
  const Eigen::Vector3d bhat = b_total / b_norm;
  const Eigen::Vector3d vb = fe.v * bhat;
  rep.curvature = (fe.v * fe.v - vb * vb.transpose()) / b_norm - fe.w_dot(bhat);
  // Route (b): the IP-trap form using the nominal Ioffe vector.
  rep.curvature_ip = ip_curvature(fe, bias.B_I * bias.axis);
  rep.curvature_agreement =
      (rep.curvature - rep.curvature_ip).norm() / std::max(rep.curvature.norm(), 1e-300);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(rep.curvature);
  rep.curvature_eigenvalues = es.eigenvalues();
  rep.curvature_axes = es.eigenvectors();
  if (es.eigenvalues()[0] <= 0.0)
    throw NotATrapError("characterize_trap: curvature not positive definite");
  for (int i = 0; i < 3; ++i) {
    const double lambda_si = es.eigenvalues()[i] * phys.curvature_unit();
    rep.omega[i] = atom.omega_from_curvature(lambda_si);
    rep.lamb_dicke[i] = atom.lamb_dicke(rep.omega[i]);
  }
  return rep;
}

namespace {

double vvalue(const FieldSource& source, const BiasConfig& bias, const Eigen::Vector3d& r) {
  return (source.field(r) + bias.B0).norm();
}

// Newton iteration on the in-plane gradient (d V/dx, dV/dy) = 0 at fixed z;
// indefinite 2x2 Hessian, converging to the separatrix saddle of the
// trapping-plane map.
bool plane_critical_newton(const FieldSource& source, const BiasConfig& bias, Eigen::Vector3d& r,
                           double step_cap, int max_iter = 80) {
  for (int it = 0; it < max_iter; ++it) {
    const ZeemanDerivatives zd = zeeman_derivatives(source, bias, r, 2);
    const Eigen::Vector2d g(zd.gradient.x(), zd.gradient.y());
    const double scale = std::max(zd.hessian.norm(), 1e-12);
    if (g.norm() <= 1e-11 * std::max(1.0, scale)) return true;
    Eigen::Matrix2d h = zd.hessian.topLeftCorner<2, 2>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
    const double lmin = es.eigenvalues().cwiseAbs().minCoeff();
    if (lmin < 1e-10 * scale) h += 1e-8 * scale * Eigen::Matrix2d::Identity();
    Eigen::Vector2d step = h.fullPivLu().solve(-g);
    if (step.norm() > step_cap) step *= step_cap / step.norm();
    r.x() += step.x();
    r.y() += step.y();
  }
  return false;
}

// Number of negative eigenvalues of the in-plane Hessian block.
int plane_hessian_index(const FieldSource& source, const BiasConfig& bias,
                        const Eigen::Vector3d& r) {
  const ZeemanDerivatives zd = zeeman_derivatives(source, bias, r, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(zd.hessian.topLeftCorner<2, 2>());
  int neg = 0;
  const double scale = std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[1]));
  for (int i = 0; i < 2; ++i)
    if (es.eigenvalues()[i] < -1e-9 * scale) ++neg;
  return neg;
}

// Fallback in-plane saddle locator: maximize over the path coordinate while
// minimizing over the in-plane transverse coordinate.
Eigen::Vector3d plane_path_saddle(const FieldSource& source, const BiasConfig& bias,
                                  const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  Eigen::Vector2d axis(b.x() - a.x(), b.y() - a.y());
  axis.normalize();
  const Eigen::Vector3d e1(-axis.y(), axis.x(), 0.0);

  auto transverse_min = [&](double t) -> Eigen::Vector3d {
    Eigen::Vector3d p = a + t * (b - a);
    for (int it = 0; it < 50; ++it) {
      const ZeemanDerivatives zd = zeeman_derivatives(source, bias, p, 2);
      const double g = zd.gradient.dot(e1);
      if (std::abs(g) < 1e-11 * std::max(1.0, zd.hessian.norm())) break;
      const double h = std::max(e1.dot(zd.hessian * e1), 1e-8 * zd.hessian.norm());
      double s = -g / h;
      s = std::clamp(s, -0.1, 0.1);
      p += s * e1;
    }
    return p;
  };

  const int nscan = 33;
  double best_t = 0.5, best_v = -1.0;
  for (int i = 1; i + 1 < nscan; ++i) {
    const double t = double(i) / (nscan - 1);
    const double v = vvalue(source, bias, transverse_min(t));
    if (v > best_v) {
      best_v = v;
      best_t = t;
    }
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = std::max(0.0, best_t - 1.5 / (nscan - 1));
  double hi = std::min(1.0, best_t + 1.5 / (nscan - 1));
  double t1 = hi - gr * (hi - lo), t2 = lo + gr * (hi - lo);
  double v1 = vvalue(source, bias, transverse_min(t1));
  double v2 = vvalue(source, bias, transverse_min(t2));
  for (int it = 0; it < 45 && hi - lo > 1e-10; ++it) {
    if (v1 < v2) {
      lo = t1;
      t1 = t2;
      v1 = v2;
      t2 = lo + gr * (hi - lo);
      v2 = vvalue(source, bias, transverse_min(t2));
    } else {
      hi = t2;
      t2 = t1;
      v2 = v1;
      t1 = hi - gr * (hi - lo);
      v1 = vvalue(source, bias, transverse_min(t1));
    }
  }
  return transverse_min(0.5 * (lo + hi));
}

}  // namespace

Barrier barrier_between(const FieldSource& source, const BiasConfig& bias,
                        const Eigen::Vector3d& trap_a, const Eigen::Vector3d& trap_b,
                        const std::string& label) {
  // The inter-trap barrier is the separatrix saddle of the pseudo-potential
  // map in the trapping plane (fixed z). The unrestricted 3D critical point
  // between traps is the escape col toward z -> infinity, whose height is
  // the trap depth, not the lattice barrier.
  const double dist = (trap_b - trap_a).norm();
  const double z_plane = 0.5 * (trap_a.z() + trap_b.z());
  Eigen::Vector3d saddle = 0.5 * (trap_a + trap_b);
  saddle.z() = z_plane;
  bool ok = plane_critical_newton(source, bias, saddle, 0.2 * dist);
  if (ok) ok = plane_hessian_index(source, bias, saddle) == 1;
  if (ok) {
    const double v_mid = vvalue(source, bias, saddle);
    Eigen::Vector3d mid = 0.5 * (trap_a + trap_b);
    mid.z() = z_plane;
    if (v_mid <= vvalue(source, bias, trap_a) || v_mid <= vvalue(source, bias, trap_b) ||
        (saddle - mid).norm() > 0.75 * dist)
      ok = false;
  }
  if (!ok) {
    Eigen::Vector3d a_pl = trap_a, b_pl = trap_b;
    a_pl.z() = b_pl.z() = z_plane;
    saddle = plane_path_saddle(source, bias, a_pl, b_pl);
    plane_critical_newton(source, bias, saddle, 0.05 * dist);
    if (plane_hessian_index(source, bias, saddle) != 1)
      throw SolverFailure("barrier_between: no in-plane index-1 saddle between the traps");
  }
  Barrier bar;
  bar.direction = label;
  bar.saddle = saddle;
  const double v_saddle = vvalue(source, bias, saddle);
  const double v_a = vvalue(source, bias, trap_a);
  const double v_b = vvalue(source, bias, trap_b);
  if (v_saddle < v_a || v_saddle < v_b)
    throw SolverFailure("barrier_between: saddle below a minimum (inconsistent topology)");
  bar.height = v_saddle - v_a;
  return bar;
}

Barrier barrier_along(const FieldSource& source, const BiasConfig& bias,
                      const Eigen::Vector3d& trap, const Eigen::Vector2d& lattice_dir,
                      const std::string& label) {
  const Eigen::Vector3d neighbor_seed =
      trap + Eigen::Vector3d(lattice_dir.x(), lattice_dir.y(), 0.0);
  const Eigen::Vector3d neighbor = find_trap(source, bias, neighbor_seed);
  return barrier_between(source, bias, trap, neighbor, label);
}

IoffeSearchResult symmetric_ioffe_search(const FieldSource& source,
                                         const Eigen::Vector2d& site_xy, double h,
                                         const Eigen::Vector3d& axis_hint,
                                         const Eigen::Vector2d& dir_a,
                                         const Eigen::Vector2d& dir_b,
                                         const IoffeSearchOptions& opt) {
  struct Sample {
    double bi = 0.0;
    double diff = 0.0;
    double barrier = 0.0;
    bool valid = false;
  };

  auto evaluate = [&](double bi) -> Sample {
    try {
      const BiasConfig bias = solve_bias(source, site_xy, h, bi, axis_hint);
      const Eigen::Vector3d trap = find_trap(source, bias, {site_xy.x(), site_xy.y(), h});
      const Barrier ba = barrier_along(source, bias, trap, dir_a, "a");
      const Barrier bb = barrier_along(source, bias, trap, dir_b, "b");
      return {bi, ba.height - bb.height, std::min(ba.height, bb.height), true};
    } catch (const std::exception&) {
      return {bi, 0.0, 0.0, false};
    }
  };

  std::vector<double> candidates;
  const double ratio =
      std::pow(opt.bi_abs_max / opt.bi_abs_min, 1.0 / std::max(1, opt.scan_points - 1));
  for (int s = 0; s < 2; ++s) {
    const double sign = s == 0 ? 1.0 : -1.0;
    if (sign > 0 && !opt.scan_positive) continue;
    if (sign < 0 && !opt.scan_negative) continue;
    for (int i = 0; i < opt.scan_points; ++i)
      candidates.push_back(sign * opt.bi_abs_min * std::pow(ratio, i));
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<Sample> samples;
  samples.reserve(candidates.size());
  for (double bi : candidates) samples.push_back(evaluate(bi));

  IoffeSearchResult result;
  double best_barrier = -1.0;
  for (size_t i = 0; i + 1 < samples.size(); ++i) {
    const Sample& s0 = samples[i];
    const Sample& s1 = samples[i + 1];
    if (!s0.valid || !s1.valid) continue;
    if (s0.bi * s1.bi < 0.0) continue;  // never bracket across zero Ioffe field
    if (s0.diff * s1.diff > 0.0) continue;

    double lo = s0.bi, hi = s1.bi, flo = s0.diff, fhi = s1.diff;
    Sample best = std::abs(flo) < std::abs(fhi) ? s0 : s1;
    for (int it = 0; it < 60 && std::abs(hi - lo) > opt.tol * std::abs(hi); ++it) {
      double mid = 0.5 * (lo + hi);
      const double denom = fhi - flo;
      if (std::abs(denom) > 0.0) {
        const double sec = lo - flo * (hi - lo) / denom;
        if (sec > std::min(lo, hi) + 0.1 * std::abs(hi - lo) &&
            sec < std::max(lo, hi) - 0.1 * std::abs(hi - lo))
          mid = sec;
      }
      const Sample sm = evaluate(mid);
      if (!sm.valid) break;
      best = sm;
      if (sm.diff * flo <= 0.0) {
        hi = mid;
        fhi = sm.diff;
      } else {
        lo = mid;
        flo = sm.diff;
      }
    }
    result.roots.push_back(best.bi);
    if (best.barrier > best_barrier) {
      best_barrier = best.barrier;
      result.B_I = best.bi;
      result.barrier_a = best.barrier + std::max(0.0, best.diff);
      result.barrier_b = best.barrier + std::max(0.0, -best.diff);
    }
  }
  if (result.roots.empty())
    throw SolverFailure(
        "symmetric_ioffe_search: no barrier-equality root in the scanned Ioffe interval");
  return result;
}

ZeroScanResult detect_zeros(const FieldSource& source, const BiasConfig& bias,
                            const LatticeGeometry& geometry, const ZeroScanRegion& region,
                            double threshold) {
  if (!(region.z_min > 0.0) || region.z_max <= region.z_min)
    throw std::invalid_argument("detect_zeros: invalid z range");
  ZeroScanResult out;
  out.resolution = region;

  const int nx = region.nx, ny = region.ny, nz = region.nz;
  std::vector<double> zs(nz);
  for (int k = 0; k < nz; ++k) {
    const double t = nz == 1 ? 0.0 : double(k) / (nz - 1);
    zs[k] = region.log_z ? region.z_min * std::pow(region.z_max / region.z_min, t)
                         : region.z_min + t * (region.z_max - region.z_min);
  }

  const bool full = region.full_cell();
  // The grid always spans the full (periodic) cell so the fast plane
  // evaluator applies; a window restricts which minima are considered.
  auto in_window = [&](int i, int j) {
    if (full) return true;
    double ds = std::abs(double(i) / nx - region.window_center.x());
    double dt = std::abs(double(j) / ny - region.window_center.y());
    ds = std::min(ds, 1.0 - ds);
    dt = std::min(dt, 1.0 - dt);
    return ds <= region.window_half.x() && dt <= region.window_half.y();
  };

  std::vector<double> norms(size_t(nx) * ny * nz);
  std::vector<Eigen::Vector3d> plane(size_t(nx) * ny);
  for (int k = 0; k < nz; ++k) {
    std::fill(plane.begin(), plane.end(), bias.B0);
    source.add_plane_fields(geometry, nx, ny, zs[k], plane);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        norms[(size_t(k) * ny + j) * nx + i] = plane[size_t(j) * nx + i].norm();
  }

  auto at = [&](int i, int j, int k) {
    i = (i % nx + nx) % nx;  // periodic in-plane
    j = (j % ny + ny) % ny;
    k = std::clamp(k, 0, nz - 1);
    return norms[(size_t(k) * ny + j) * nx + i];
  };

  out.min_field = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector3d> seeds;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        if (!in_window(i, j)) continue;
        const double v = at(i, j, k);
        if (v < out.min_field) {
          out.min_field = v;
          const Eigen::Vector2d gxy = geometry.cell_point(double(i) / nx, double(j) / ny);
          out.min_point = {gxy.x(), gxy.y(), zs[k]};
        }
        bool is_min = true;
        for (int dk = -1; dk <= 1 && is_min; ++dk)
          for (int dj = -1; dj <= 1 && is_min; ++dj)
            for (int di = -1; di <= 1 && is_min; ++di) {
              if (!di && !dj && !dk) continue;
              if (at(i + di, j + dj, k + dk) < v) is_min = false;
            }
        if (!is_min) continue;
        const Eigen::Vector2d xy = geometry.cell_point(double(i) / nx, double(j) / ny);
        seeds.push_back({xy.x(), xy.y(), zs[k]});
      }

  // Local refinement: damped Newton on |B|^2 / 2.
  for (Eigen::Vector3d r : seeds) {
    for (int it = 0; it < 60; ++it) {
      const FieldExpansion fe = source.expansion(r, 3);
      const Eigen::Vector3d b = -fe.u + bias.B0;
      const Eigen::Vector3d g = -fe.v * b;
      const Eigen::Matrix3d h = fe.v * fe.v - fe.w_dot(b);
      if (g.norm() < 1e-14) break;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(h);
      const double lmax =
          std::max(std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[2]));
      Eigen::Vector3d lam;
      for (int i = 0; i < 3; ++i)
        lam[i] = std::max(es.eigenvalues()[i], 1e-6 * std::max(lmax, 1e-12));
      Eigen::Vector3d step = (es.eigenvectors() * lam.asDiagonal() *
                              es.eigenvectors().transpose())
                                 .ldlt()
                                 .solve(-g);
      if (step.norm() > 0.1) step *= 0.1 / step.norm();
      const Eigen::Vector3d trial = r + step;
      if (trial.z() < 0.5 * region.z_min || trial.z() > 2.0 * region.z_max) break;
      if (!full) {
        // Stay near the requested window; a minimum outside it is not ours.
        const Eigen::Vector2d st = geometry.fractional({trial.x(), trial.y()});
        if (std::abs(st.x() - region.window_center.x()) > 1.3 * region.window_half.x() ||
            std::abs(st.y() - region.window_center.y()) > 1.3 * region.window_half.y())
          break;
      }
      if (step.norm() < 1e-13) break;
      r = trial;
    }
    const double v = (source.field(r) + bias.B0).norm();
    if (v < out.min_field) {
      out.min_field = v;
      out.min_point = r;
    }
    if (v < threshold) out.points.push_back(r);
  }
  return out;
}

TruncationReport fourier_truncation_report(const MagnetizationPattern& pattern, double cutoff,
                                           const TruncationConfig& config) {
  const FourierSpectrum full = FourierSpectrum::of_pattern(pattern);
  const FourierSpectrum trunc = FourierSpectrum::of_pattern(pattern, cutoff);
  const SpectrumField f_full(full), f_trunc(trunc);

  TruncationReport rep;
  rep.cutoff = cutoff;
  rep.modes_kept = int(trunc.modes_for_height(config.h).size());

  // Each resolution is operated at its own bias for the common Ioffe field,
  // as a lower-resolution fabrication would be.
  const BiasConfig bias_f =
      solve_bias(f_full, config.site_xy, config.h, config.B_I, config.axis_hint);
  const BiasConfig bias_t =
      solve_bias(f_trunc, config.site_xy, config.h, config.B_I, config.axis_hint);
  const Eigen::Vector3d trap_full =
      find_trap(f_full, bias_f, {config.site_xy.x(), config.site_xy.y(), config.h});
  const Eigen::Vector3d trap_trunc = find_trap(f_trunc, bias_t, trap_full);

  const double depth_full = bias_f.B0.norm() - std::abs(bias_f.B_I);
  const double depth_trunc = bias_t.B0.norm() - std::abs(bias_t.B_I);
  rep.depth_change = (depth_trunc - depth_full) / depth_full;

  // Frequencies keyed by the dominant axis of each principal direction.
  auto freqs_by_axis = [&](const FieldSource& src, const BiasConfig& bias,
                           const Eigen::Vector3d& trap) {
    const FieldExpansion fe = src.expansion(trap, 3);
    const Eigen::Vector3d b_total = -fe.u + bias.B0;
    const Eigen::Vector3d bhat = b_total.normalized();
    const Eigen::Vector3d vb = fe.v * bhat;
    const Eigen::Matrix3d hess =
        (fe.v * fe.v - vb * vb.transpose()) / b_total.norm() - fe.w_dot(bhat);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hess);
    std::array<double, 3> by_axis{};
    for (int i = 0; i < 3; ++i) {
      int axis = 0;
      es.eigenvectors().col(i).cwiseAbs().maxCoeff(&axis);
      by_axis[size_t(axis)] = std::sqrt(std::max(es.eigenvalues()[i], 0.0));
    }
    return by_axis;
  };
  const auto wf = freqs_by_axis(f_full, bias_f, trap_full);
  const auto wt = freqs_by_axis(f_trunc, bias_t, trap_trunc);
  rep.freq_change_x = (wt[0] - wf[0]) / wf[0];
  rep.freq_change_y = (wt[1] - wf[1]) / wf[1];
  rep.freq_change_z = (wt[2] - wf[2]) / wf[2];

  // Barriers in the configured directions.
  for (const auto& [label, dir] : config.barrier_dirs) {
    const Barrier bf = barrier_along(f_full, bias_f, trap_full, dir, label);
    const Barrier bt = barrier_along(f_trunc, bias_t, trap_trunc, dir, label);
    rep.barrier_changes.emplace_back(label, (bt.height - bf.height) / bf.height);
  }

  // In-plane pseudo-potential deviation at z = h, relative to the range.
  const int g = config.map_grid;
  double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin, dmax = 0.0;
  std::vector<Eigen::Vector3d> pf(size_t(g) * g, bias_f.B0), pt(size_t(g) * g, bias_t.B0);
  f_full.add_plane_fields(pattern.geometry, g, g, config.h, pf);
  f_trunc.add_plane_fields(pattern.geometry, g, g, config.h, pt);
  for (size_t i = 0; i < pf.size(); ++i) {
    const double vfv = pf[i].norm(), vtv = pt[i].norm();
    vmin = std::min(vmin, vfv);
    vmax = std::max(vmax, vfv);
    dmax = std::max(dmax, std::abs(vtv - vfv));
  }
  rep.potential_deviation = dmax / (vmax - vmin);
  return rep;
}

void write_potential_map(std::ostream& os, const FourierSpectrum& spectrum, double z, int n1,
                         int n2) {
  os << "x_d,y_d,z_d,Psi_reduced,Bx_reduced,By_reduced,Bz_reduced\n";
  os << std::setprecision(12);
  const SpectrumField field(spectrum);
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i) {
      const Eigen::Vector2d xy = spectrum.geometry().cell_point(double(i) / n1, double(j) / n2);
      const Eigen::Vector3d r(xy.x(), xy.y(), z);
      const double psi = periodic_potential(spectrum, r).value;
      const Eigen::Vector3d b = field.field(r);
      os << r.x() << ',' << r.y() << ',' << r.z() << ',' << psi << ',' << b.x() << ',' << b.y()
         << ',' << b.z() << '\n';
    }
}

void write_trap_reports_csv(std::ostream& os, const std::vector<TrapReport>& reports,
                            const PhysicalParams& phys) {
  os << "x_d,y_d,z_d,B0x_G,B0y_G,B0z_G,B_I_G,min_field_G,depth_G,depth_mK,"
        "barrier_labels,barriers_G,barriers_mK,omega1_kHz,omega2_kHz,omega3_kHz,"
        "eta1,eta2,eta3,curvature_agreement\n";
  os << std::setprecision(10);
  for (const auto& r : reports) {
    const Eigen::Vector3d b0g = r.bias.B0_gauss(phys);
    os << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ',' << b0g.x()
       << ',' << b0g.y() << ',' << b0g.z() << ',' << r.bias.B_I_gauss(phys) << ','
       << r.min_field_gauss << ',' << r.depth_gauss << ',' << r.depth_mk << ',';
    std::string labels, bg, bmk;
    for (size_t i = 0; i < r.barriers.size(); ++i) {
      const char* sep = i ? ";" : "";
      std::ostringstream g1, g2;
      g1 << std::setprecision(10) << r.barriers[i].height_gauss;
      g2 << std::setprecision(10) << r.barriers[i].height_mk;
      labels += sep + r.barriers[i].direction;
      bg += sep + g1.str();
      bmk += sep + g2.str();
    }
    os << labels << ',' << bg << ',' << bmk;
    for (int i = 0; i < 3; ++i) os << ',' << r.omega[i] / kTwoPi / 1e3;
    for (int i = 0; i < 3; ++i) os << ',' << r.lamb_dicke[i];
    os << ',' << r.curvature_agreement << '\n';
  }
}

}  // namespace maglat
