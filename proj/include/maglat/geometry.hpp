#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "maglat/units.hpp"

namespace maglat {

/// Bravais unit cell in reduced units (lengths in the lattice period d).
/// a1 = {1, 0}, a2 = {cos(zeta), sin(zeta)}; the cell is divided into an
/// n1 x n2 grid of identical parallelogram pixels in the (a1, a2) basis.
struct LatticeGeometry {
  double zeta = 0.5 * kPi;  // lattice angle [rad]
  int n1 = 0;               // pixels along a1
  int n2 = 0;               // pixels along a2

  Eigen::Vector2d a1() const { return {1.0, 0.0}; }
  Eigen::Vector2d a2() const { return {std::cos(zeta), std::sin(zeta)}; }
  double cell_area() const { return std::sin(zeta); }

  // Reciprocal vectors, a_i . b_j = 2*pi*delta_ij  [units of 2*pi/d].
  Eigen::Vector2d b1() const {
    const Eigen::Vector2d v2 = a2();
    return kTwoPi / cell_area() * Eigen::Vector2d(v2.y(), -v2.x());
  }
  Eigen::Vector2d b2() const {
    const Eigen::Vector2d v1 = a1();
    return kTwoPi / cell_area() * Eigen::Vector2d(-v1.y(), v1.x());
  }

  // Wavevector of mode (p, q).
  Eigen::Vector2d wavevector(int p, int q) const { return p * b1() + q * b2(); }

  int pixel_count() const { return n1 * n2; }

  // Cartesian position of fractional pixel coordinates (s along a1, t along a2).
  Eigen::Vector2d cell_point(double s, double t) const { return s * a1() + t * a2(); }

  // Fractional coordinates of a Cartesian in-plane point.
  Eigen::Vector2d fractional(const Eigen::Vector2d& xy) const {
    Eigen::Matrix2d m;
    m.col(0) = a1();
    m.col(1) = a2();
    return m.inverse() * xy;
  }

  void validate() const {
    if (!(zeta > 0.0 && zeta < kPi))
      throw std::invalid_argument("LatticeGeometry: zeta must lie in (0, pi)");
    if (n1 <= 0 || n2 <= 0)
      throw std::invalid_argument("LatticeGeometry: pixel grid must be positive");
    if (!(cell_area() > 0.0))
      throw std::invalid_argument("LatticeGeometry: degenerate unit cell");
  }
};

}  // namespace maglat
