#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "maglat/errors.hpp"
#include "maglat/fieldcore.hpp"
#include "maglat/geometry.hpp"

namespace maglat {

/// Desired trap location and orientation. Position in reduced units (x, y, h);
/// Euler angles fix the gradient-tensor target: the Ioffe axis is
/// nu = {sin(theta) sin(psi), sin(theta) cos(psi), cos(theta)} and phi
/// orients the two transverse principal axes about nu.
struct TrapSite {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double phi = 0.0, theta = 0.0, psi = 0.0;
  std::string label;

  Eigen::Vector3d ioffe_axis() const {
    return {std::sin(theta) * std::sin(psi), std::sin(theta) * std::cos(psi), std::cos(theta)};
  }
  void validate() const {
    if (!(position.z() > 0.0)) throw std::invalid_argument("TrapSite: height must be positive");
  }
};

struct ConstraintRow {
  enum class Kind { gradient, field, curvature, equality };
  Eigen::VectorXd coefficients;  // length N, reduced units per pixel
  double target = 0.0;           // b_k, reduced units (common prefactor C factored out)
  Kind kind = Kind::gradient;
  std::string description;
};

/// A constraint program over one unit cell: the rows of A m = C b plus the
/// sites they came from.
struct DesignProgram {
  LatticeGeometry geometry;
  double cutoff = 0.0;  // mode cutoff used for row assembly
  std::vector<TrapSite> sites;
  std::vector<ConstraintRow> rows;
  std::vector<std::string> warnings;

  static DesignProgram create(const LatticeGeometry& geometry);
  static DesignProgram create(const LatticeGeometry& geometry, double cutoff);
};

/// Assembled linear system after degenerate-row policy and rank detection.
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  int rank = 0;
  std::vector<int> kept_rows;      // indices into program.rows
  std::vector<int> dropped_rows;   // all-zero rows with zero target
};

// Gradient-tensor direction for Euler angles: R diag(1,-1,0) R^T with the
// rotation convention pinned so that (phi=pi/4, theta=pi/2) reproduces
// [[0,0,cos psi],[0,0,-sin psi],[cos psi,-sin psi,0]] and the identity angles
// give diag(1,-1,0). Traceless, symmetric, eigenvalues {1,-1,0}, null
// eigenvector along the Ioffe axis.
Eigen::Matrix3d gradient_target(double phi, double theta, double psi);

// Appends the 5 independent rows (xx, xy, xz, yy, yz) fixing v(site) =
// C * target in reduced units; registers the site. Throws on non-traceless
// or non-symmetric targets and on duplicate sites.
void add_gradient_constraints(DesignProgram& program, const TrapSite& site,
                              const Eigen::Matrix3d& target);

// Appends one row fixing u_component(point) = C * target.
void add_field_constraint(DesignProgram& program, const Eigen::Vector3d& point, int component,
                          double target);

// Appends rows enforcing equality of the selected derivative components
// between two sites (b = 0). selector: 1 -> u (3 rows), 2 -> v (5 rows).
void add_equality_constraints(DesignProgram& program, const TrapSite& site_a,
                              const TrapSite& site_b, int derivative_order);

// Degenerate-row policy + rank detection. Throws InfeasibleError if a row has
// all-zero coefficients but nonzero target.
LinearSystem assemble(DesignProgram& program);

}  // namespace maglat
