#include "maglat/constraints.hpp"

#include <Eigen/QR>
#include <cmath>
#include <sstream>

namespace maglat {

DesignProgram DesignProgram::create(const LatticeGeometry& geometry) {
  return create(geometry, FourierSpectrum::nyquist_cutoff(geometry));
}

DesignProgram DesignProgram::create(const LatticeGeometry& geometry, double cutoff) {
  geometry.validate();
  DesignProgram p;
  p.geometry = geometry;
  p.cutoff = cutoff;
  return p;
}

Eigen::Matrix3d gradient_target(double phi, double theta, double psi) {
  using Eigen::AngleAxisd;
  using Eigen::Vector3d;
  const Eigen::Matrix3d r = (AngleAxisd(0.5 * kPi - psi, Vector3d::UnitZ()) *
                             AngleAxisd(theta, Vector3d::UnitY()) *
                             AngleAxisd(-phi - 0.5 * kPi, Vector3d::UnitZ()))
                                .toRotationMatrix();
  Eigen::Matrix3d d = Eigen::Matrix3d::Zero();
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  return r * d * r.transpose();
}

namespace {

void check_target_tensor(const Eigen::Matrix3d& t) {
  const double scale = t.norm();
  if ((t - t.transpose()).norm() > 1e-10 * scale)
    throw std::invalid_argument("gradient target must be symmetric");
  if (std::abs(t.trace()) > 1e-10 * scale)
    throw std::invalid_argument("gradient target must be traceless");
}

const std::array<std::pair<int, int>, 5> kGradientComponents = {
    {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}}};

}  // namespace

void add_gradient_constraints(DesignProgram& program, const TrapSite& site,
                              const Eigen::Matrix3d& target) {
  site.validate();
  if (target.norm() > 0.0) check_target_tensor(target);
  for (const auto& s : program.sites)
    if ((s.position - site.position).norm() < 1e-12)
      throw std::invalid_argument("add_gradient_constraints: duplicate site '" + site.label + "'");

  std::vector<Eigen::Vector3d> points;
  std::vector<DerivativeSelector> sel;
  for (const auto& [i, j] : kGradientComponents) {
    points.push_back(site.position);
    sel.push_back(DerivativeSelector::v(i, j));
  }
  const Eigen::MatrixXd rows = basis_derivative_rows(program.geometry, program.cutoff, points, sel);
  static const char* names[5] = {"xx", "xy", "xz", "yy", "yz"};
  for (int k = 0; k < 5; ++k) {
    ConstraintRow row;
    row.coefficients = rows.row(k);
    row.target = target(kGradientComponents[k].first, kGradientComponents[k].second);
    row.kind = ConstraintRow::Kind::gradient;
    std::ostringstream desc;
    desc << "v_" << names[k] << " at site " << (site.label.empty() ? "?" : site.label);
    row.description = desc.str();
    program.rows.push_back(std::move(row));
  }
  program.sites.push_back(site);
}

void add_field_constraint(DesignProgram& program, const Eigen::Vector3d& point, int component,
                          double target) {
  if (!(point.z() > 0.0))
    throw std::invalid_argument("add_field_constraint: point must be above the plane");
  if (component < 0 || component > 2)
    throw std::invalid_argument("add_field_constraint: component must be 0..2");
  const Eigen::MatrixXd rows = basis_derivative_rows(program.geometry, program.cutoff, {point},
                                                     {DerivativeSelector::u(component)});
  ConstraintRow row;
  row.coefficients = rows.row(0);
  row.target = target;
  row.kind = ConstraintRow::Kind::field;
  std::ostringstream desc;
  desc << "u_" << "xyz"[component] << " at (" << point.x() << ", " << point.y() << ", "
       << point.z() << ")";
  row.description = desc.str();
  program.rows.push_back(std::move(row));
}

void add_equality_constraints(DesignProgram& program, const TrapSite& site_a,
                              const TrapSite& site_b, int derivative_order) {
  site_a.validate();
  site_b.validate();
  if ((site_a.position - site_b.position).norm() < 1e-12)
    throw std::invalid_argument("add_equality_constraints: identical sites");

  std::vector<Eigen::Vector3d> points;
  std::vector<DerivativeSelector> sel;
  std::vector<std::string> names;
  if (derivative_order == 1) {
    for (int i = 0; i < 3; ++i) {
      points.push_back(site_a.position);
      sel.push_back(DerivativeSelector::u(i));
      names.push_back(std::string("u_") + "xyz"[i]);
    }
  } else if (derivative_order == 2) {
    for (const auto& [i, j] : kGradientComponents) {
      points.push_back(site_a.position);
      sel.push_back(DerivativeSelector::v(i, j));
      names.push_back(std::string("v_") + "xyz"[i] + "xyz"[j]);
    }
  } else {
    throw std::invalid_argument("add_equality_constraints: selector must be u (1) or v (2)");
  }
  const size_t n = points.size();
  for (size_t k = 0; k < n; ++k) {
    points.push_back(site_b.position);
    sel.push_back(sel[k]);
  }

  const Eigen::MatrixXd rows = basis_derivative_rows(program.geometry, program.cutoff, points, sel);
  for (size_t k = 0; k < n; ++k) {
    ConstraintRow row;
    row.coefficients = rows.row(k) - rows.row(k + n);
    row.target = 0.0;
    row.kind = ConstraintRow::Kind::equality;
    row.description = names[k] + " equality " + site_a.label + " = " + site_b.label;
    program.rows.push_back(std::move(row));
  }
}

LinearSystem assemble(DesignProgram& program) {
  if (program.rows.empty()) throw std::invalid_argument("assemble: empty program");
  LinearSystem sys;
  const Eigen::Index n = program.geometry.pixel_count();

  double coeff_scale = 0.0;
  for (const auto& row : program.rows)
    coeff_scale = std::max(coeff_scale, row.coefficients.lpNorm<Eigen::Infinity>());
  const double zero_tol = 1e-14 * std::max(coeff_scale, 1.0);

  for (size_t k = 0; k < program.rows.size(); ++k) {
    const auto& row = program.rows[k];
    if (row.coefficients.size() != n)
      throw std::invalid_argument("assemble: row length does not match pixel count");
    if (row.coefficients.lpNorm<Eigen::Infinity>() <= zero_tol) {
      if (std::abs(row.target) > 0.0)
        throw InfeasibleError("constraint '" + row.description +
                              "' has zero coefficients but nonzero target");
      sys.dropped_rows.push_back(int(k));
      program.warnings.push_back("dropped degenerate row: " + row.description);
      continue;
    }
    sys.kept_rows.push_back(int(k));
  }
  if (sys.kept_rows.empty()) throw std::invalid_argument("assemble: all rows degenerate");

  sys.A.resize(Eigen::Index(sys.kept_rows.size()), n);
  sys.b.resize(Eigen::Index(sys.kept_rows.size()));
  for (size_t k = 0; k < sys.kept_rows.size(); ++k) {
    sys.A.row(Eigen::Index(k)) = program.rows[sys.kept_rows[k]].coefficients;
    sys.b[Eigen::Index(k)] = program.rows[sys.kept_rows[k]].target;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.A.transpose());
  qr.setThreshold(1e-10);
  sys.rank = int(qr.rank());
  return sys;
}

}  // namespace maglat
