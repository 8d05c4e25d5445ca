#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "maglat/geometry.hpp"
#include "maglat/units.hpp"

namespace maglat {

/// Pixel magnetization map over one unit cell, row-major in the (a1, a2)
/// pixel basis: values[i + n1*j] covers s in [i/n1, (i+1)/n1), t in [j/n2, (j+1)/n2).
struct MagnetizationPattern {
  LatticeGeometry geometry;
  Eigen::VectorXd values;  // m_alpha in [0, 1]

  bool binary(double tol = 0.0) const;
  double mean() const { return values.size() ? values.mean() : 0.0; }

  double& at(int i, int j) { return values[i + geometry.n1 * j]; }
  double at(int i, int j) const { return values[i + geometry.n1 * j]; }

  void validate() const;

  static MagnetizationPattern uniform(const LatticeGeometry& g, double value = 1.0);
};

/// Finite magnetized region: a simple polygon in the film plane with a
/// constant scaled magnetization. Vertices in meters (or any consistent unit).
struct FiniteDomain {
  std::vector<Eigen::Vector2d> polygon;
  double magnetization = 1.0;

  void validate() const;
};

// Pattern file format: a plain-text header
//   d <m>  zeta <rad>  n1 <int>  n2 <int>  Mz <A/m>  delta <m>
// followed by n2 lines of n1 space-separated pixel values.
struct PatternFile {
  MagnetizationPattern pattern;
  PhysicalParams physical;
};

void write_pattern_file(std::ostream& os, const PatternFile& pf);
void write_pattern_file(const std::string& path, const PatternFile& pf);
PatternFile read_pattern_file(std::istream& is);
PatternFile read_pattern_file(const std::string& path);

}  // namespace maglat
