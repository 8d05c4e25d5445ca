#include "maglat/pattern.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace maglat {

bool MagnetizationPattern::binary(double tol) const {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double m = values[i];
    if (std::abs(m) > tol && std::abs(m - 1.0) > tol) return false;
  }
  return true;
}

void MagnetizationPattern::validate() const {
  geometry.validate();
  if (values.size() != geometry.pixel_count())
    throw std::invalid_argument("MagnetizationPattern: value count does not match grid");
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (!(values[i] >= 0.0 && values[i] <= 1.0))
      throw std::invalid_argument("MagnetizationPattern: pixel value outside [0, 1]");
}

MagnetizationPattern MagnetizationPattern::uniform(const LatticeGeometry& g, double value) {
  MagnetizationPattern p;
  p.geometry = g;
  p.values = Eigen::VectorXd::Constant(g.pixel_count(), value);
  return p;
}

namespace {

// Signed area (shoelace); zero for degenerate polygons.
double signed_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

bool segments_intersect(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        const Eigen::Vector2d& c, const Eigen::Vector2d& d) {
  auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return u.x() * v.y() - u.y() * v.x();
  };
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

void FiniteDomain::validate() const {
  if (polygon.size() < 3)
    throw std::invalid_argument("FiniteDomain: polygon needs at least 3 vertices");
  if (!(magnetization >= 0.0 && magnetization <= 1.0))
    throw std::invalid_argument("FiniteDomain: magnetization outside [0, 1]");
  if (std::abs(signed_area(polygon)) <= 0.0)
    throw std::invalid_argument("FiniteDomain: degenerate polygon");
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      // Skip edges sharing a vertex.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
        throw std::invalid_argument("FiniteDomain: polygon is self-intersecting");
    }
}

void write_pattern_file(std::ostream& os, const PatternFile& pf) {
  pf.pattern.validate();
  pf.physical.validate();
  const auto& g = pf.pattern.geometry;
  os << std::setprecision(17);
  os << "d " << pf.physical.d << " zeta " << g.zeta << " n1 " << g.n1 << " n2 " << g.n2 << " Mz "
     << pf.physical.Mz << " delta " << pf.physical.delta << "\n";
  for (int j = 0; j < g.n2; ++j) {
    for (int i = 0; i < g.n1; ++i) {
      if (i) os << ' ';
      os << pf.pattern.at(i, j);
    }
    os << '\n';
  }
}

void write_pattern_file(const std::string& path, const PatternFile& pf) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open pattern file for writing: " + path);
  write_pattern_file(os, pf);
}

PatternFile read_pattern_file(std::istream& is) {
  PatternFile pf;
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("pattern file: missing header");
  std::istringstream hs(header);
  std::string key;
  double d = 0, zeta = 0, Mz = 0, delta = 0;
  int n1 = 0, n2 = 0;
  while (hs >> key) {
    if (key == "d") hs >> d;
    else if (key == "zeta") hs >> zeta;
    else if (key == "n1") hs >> n1;
    else if (key == "n2") hs >> n2;
    else if (key == "Mz") hs >> Mz;
    else if (key == "delta") hs >> delta;
    else throw std::runtime_error("pattern file: unknown header key '" + key + "'");
  }
  pf.physical.d = d;
  pf.physical.Mz = Mz;
  pf.physical.delta = delta;
  pf.pattern.geometry.zeta = zeta;
  pf.pattern.geometry.n1 = n1;
  pf.pattern.geometry.n2 = n2;
  pf.pattern.geometry.validate();
  pf.pattern.values.resize(pf.pattern.geometry.pixel_count());
  for (int j = 0; j < n2; ++j)
    for (int i = 0; i < n1; ++i)
      if (!(is >> pf.pattern.at(i, j)))
        throw std::runtime_error("pattern file: truncated pixel data");
  pf.pattern.validate();
  return pf;
}

PatternFile read_pattern_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open pattern file: " + path);
  return read_pattern_file(is);
}

}  // namespace maglat
