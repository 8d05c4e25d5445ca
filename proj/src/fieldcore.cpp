#include "maglat/fieldcore.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace maglat {

double kernel_value(double x, double y, double z) {
  if (!(z > 0.0)) throw std::domain_error("kernel_value: defined for z > 0 only");
  const double r2 = x * x + y * y + z * z;
  return z / (kTwoPi * r2 * std::sqrt(r2));
}

namespace {

// Solid angle of the triangle (A, B, C) seen from the origin, signed by the
// orientation of the vertex triple (Van Oosterom & Strackee).
double triangle_solid_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const Eigen::Vector3d& c) {
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double numer = a.dot(b.cross(c));
  const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  return 2.0 * std::atan2(numer, denom);
}

}  // namespace

double polygon_potential(const FiniteDomain& domain, const Eigen::Vector3d& r) {
  domain.validate();
  if (!(r.z() > 0.0)) throw std::domain_error("polygon_potential: defined for z > 0 only");
  // Fan triangulation; signed per-triangle angles handle non-convex shapes.
  const auto& poly = domain.polygon;
  const Eigen::Vector3d v0 = Eigen::Vector3d(poly[0].x(), poly[0].y(), 0.0) - r;
  double omega = 0.0;
  for (size_t i = 1; i + 1 < poly.size(); ++i) {
    const Eigen::Vector3d v1 = Eigen::Vector3d(poly[i].x(), poly[i].y(), 0.0) - r;
    const Eigen::Vector3d v2 = Eigen::Vector3d(poly[i + 1].x(), poly[i + 1].y(), 0.0) - r;
    omega += triangle_solid_angle(v0, v1, v2);
  }
  return domain.magnetization * std::abs(omega) / kTwoPi;
}

PotentialValue periodic_potential(const FourierSpectrum& spectrum, const Eigen::Vector3d& r) {
  if (!(r.z() > 0.0)) throw std::domain_error("periodic_potential: defined for z > 0 only");
  const auto modes = spectrum.modes_for_height(r.z());
  PotentialValue out;
  double acc = 0.0;
  for (const auto& m : modes) {
    const std::complex<double> term =
        m.amp * std::exp(std::complex<double>(-m.knorm * r.z(), m.kx * r.x() + m.ky * r.y()));
    acc += term.real();
  }
  out.value = acc;
  out.truncation_bound = std::exp(-r.z() * spectrum.cutoff());
  out.modes_used = int(modes.size());
  return out;
}

FieldExpansion field_expansion(const FourierSpectrum& spectrum, const Eigen::Vector3d& r,
                               int order) {
  if (!(r.z() > 0.0)) throw std::domain_error("field_expansion: defined for z > 0 only");
  if (order < 1 || order > 3) throw std::invalid_argument("field_expansion: order must be 1..3");
  FieldExpansion fe;
  fe.point = r;
  fe.order = order;
  double wsym[3][3][3] = {};  // canonical i <= j <= k entries
  const auto modes = spectrum.modes_for_height(r.z());
  for (const auto& m : modes) {
    if (m.p == 0 && m.q == 0) continue;  // constant term has no derivatives
    const std::complex<double> term =
        m.amp * std::exp(std::complex<double>(-m.knorm * r.z(), m.kx * r.x() + m.ky * r.y()));
    // One derivative pulls down a factor f_i per axis.
    const std::complex<double> f[3] = {{0.0, m.kx}, {0.0, m.ky}, {-m.knorm, 0.0}};
    for (int i = 0; i < 3; ++i) {
      fe.u[i] += (term * f[i]).real();
      if (order < 2) continue;
      for (int j = i; j < 3; ++j) {
        const double vij = (term * f[i] * f[j]).real();
        fe.v(i, j) += vij;
        if (j != i) fe.v(j, i) += vij;
        if (order < 3) continue;
        for (int k = j; k < 3; ++k) wsym[i][j][k] += (term * f[i] * f[j] * f[k]).real();
      }
    }
  }
  if (order >= 3) {
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        for (int k = j; k < 3; ++k) {
          const double wijk = wsym[i][j][k];
          fe.w[i](j, k) = fe.w[i](k, j) = wijk;
          fe.w[j](i, k) = fe.w[j](k, i) = wijk;
          fe.w[k](i, j) = fe.w[k](j, i) = wijk;
        }
  }
  return fe;
}

void FieldSource::add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                                   std::vector<Eigen::Vector3d>& accum) const {
  if (accum.size() != size_t(g1) * size_t(g2))
    throw std::invalid_argument("add_plane_fields: accumulator size mismatch");
  for (int b = 0; b < g2; ++b)
    for (int a = 0; a < g1; ++a) {
      const Eigen::Vector2d xy = cell.cell_point(double(a) / g1, double(b) / g2);
      accum[size_t(b) * g1 + a] += field({xy.x(), xy.y(), z});
    }
}

void SpectrumField::add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                                     std::vector<Eigen::Vector3d>& accum) const {
  if (accum.size() != size_t(g1) * size_t(g2))
    throw std::invalid_argument("add_plane_fields: accumulator size mismatch");
  const auto& g = spectrum_.geometry();
  if (std::abs(cell.zeta - g.zeta) > 1e-12) {
    FieldSource::add_plane_fields(cell, g1, g2, z, accum);
    return;
  }
  const auto modes = spectrum_.modes_for_height(z);
  int pmin = 0, pmax = 0;
  for (const auto& m : modes) {
    pmin = std::min(pmin, m.p);
    pmax = std::max(pmax, m.p);
  }
  const int np = pmax - pmin + 1;

  // Stage 1: sum over q for every (p, b); k.r = 2 pi (p a/g1 + q b/g2).
  std::vector<std::complex<double>> s(size_t(np) * g2 * 3, 0.0);
  for (const auto& m : modes) {
    if (m.p == 0 && m.q == 0) continue;  // constant potential, no field
    const std::complex<double> damp = std::exp(std::complex<double>(-m.knorm * z, 0.0));
    // B = -grad Psi: components carry -(i kx), -(i ky), +knorm.
    const std::complex<double> cx = -m.amp * damp * std::complex<double>(0.0, m.kx);
    const std::complex<double> cy = -m.amp * damp * std::complex<double>(0.0, m.ky);
    const std::complex<double> cz = m.amp * damp * m.knorm;
    const std::complex<double> wq = std::exp(std::complex<double>(0.0, kTwoPi * m.q / g2));
    std::complex<double> ph = 1.0;
    std::complex<double>* row = &s[size_t(m.p - pmin) * g2 * 3];
    for (int b = 0; b < g2; ++b) {
      row[3 * b] += cx * ph;
      row[3 * b + 1] += cy * ph;
      row[3 * b + 2] += cz * ph;
      ph *= wq;
    }
  }

  // Stage 2: sum over p with a phase recurrence in a.
  std::vector<std::complex<double>> wp(np), php(np);
  for (int p = pmin; p <= pmax; ++p)
    wp[size_t(p - pmin)] = std::exp(std::complex<double>(0.0, kTwoPi * p / g1));
  for (int b = 0; b < g2; ++b) {
    std::fill(php.begin(), php.end(), std::complex<double>(1.0, 0.0));
    for (int a = 0; a < g1; ++a) {
      Eigen::Vector3d acc = Eigen::Vector3d::Zero();
      for (int ip = 0; ip < np; ++ip) {
        const std::complex<double> ph = php[size_t(ip)];
        const std::complex<double>* sv = &s[(size_t(ip) * g2 + b) * 3];
        acc.x() += (sv[0] * ph).real();
        acc.y() += (sv[1] * ph).real();
        acc.z() += (sv[2] * ph).real();
        php[size_t(ip)] *= wp[size_t(ip)];
      }
      accum[size_t(b) * g1 + a] += acc;
    }
  }
}

Eigen::MatrixXd basis_derivative_rows(const LatticeGeometry& geometry, double cutoff,
                                      const std::vector<Eigen::Vector3d>& points,
                                      const std::vector<DerivativeSelector>& which) {
  if (points.size() != which.size())
    throw std::invalid_argument("basis_derivative_rows: points/selectors size mismatch");
  const int n1 = geometry.n1, n2 = geometry.n2;
  const Eigen::Index n_pix = geometry.pixel_count();
  Eigen::MatrixXd rows(points.size(), n_pix);
  rows.setZero();

  std::vector<std::complex<double>> e1(n1), e2(n2);
  Eigen::VectorXd acc(n_pix);
  for (size_t row = 0; row < points.size(); ++row) {
    const Eigen::Vector3d& r = points[row];
    if (!(r.z() > 0.0)) throw std::domain_error("basis_derivative_rows: points must have z > 0");
    const auto& sel = which[row];
    if (sel.order < 0 || sel.order > 3)
      throw std::invalid_argument("basis_derivative_rows: derivative order must be 0..3");

    acc.setZero();
    for (const auto& m : enumerate_modes(geometry, cutoff, r.z())) {
      // Coefficient multiplying the pixel DFT for this mode: derivative
      // factors x plane-wave at r x damping x form factor / N.
      std::complex<double> c =
          std::exp(std::complex<double>(-m.knorm * r.z(), m.kx * r.x() + m.ky * r.y()));
      const std::complex<double> f[3] = {{0.0, m.kx}, {0.0, m.ky}, {-m.knorm, 0.0}};
      for (int o = 0; o < sel.order; ++o) c *= f[sel.axes[o]];
      c *= pixel_form_factor(geometry, m.p, m.q) / double(n_pix);
      if (std::abs(c) == 0.0) continue;

      const std::complex<double> w1 = std::exp(std::complex<double>(0.0, -kTwoPi * m.p / n1));
      const std::complex<double> w2 = std::exp(std::complex<double>(0.0, -kTwoPi * m.q / n2));
      e1[0] = c;
      for (int i = 1; i < n1; ++i) e1[i] = e1[i - 1] * w1;
      e2[0] = 1.0;
      for (int j = 1; j < n2; ++j) e2[j] = e2[j - 1] * w2;
      for (int j = 0; j < n2; ++j) {
        const std::complex<double> cj = e2[j];
        double* out = acc.data() + Eigen::Index(j) * n1;
        for (int i = 0; i < n1; ++i) out[i] += (e1[i] * cj).real();
      }
    }
    rows.row(Eigen::Index(row)) = acc.transpose();
  }
  return rows;
}

}  // namespace maglat
