#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "maglat/pattern.hpp"
#include "maglat/spectrum.hpp"

namespace maglat {

/// Local derivatives of the scalar magnetic potential Psi at a point, in
/// reduced units (Psi in (1/2)mu0*delta*Mz, lengths in d) unless noted.
/// u = grad Psi (so the pattern field is B = -u), v = grad grad Psi,
/// w[i](j,k) = d^3 Psi / dr_i dr_j dr_k. v is traceless and w is fully
/// symmetric with vanishing contracted trace (Laplace equation).
struct FieldExpansion {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d u = Eigen::Vector3d::Zero();
  Eigen::Matrix3d v = Eigen::Matrix3d::Zero();
  std::array<Eigen::Matrix3d, 3> w = {Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                      Eigen::Matrix3d::Zero()};
  int order = 3;
  bool reduced_units = true;

  // w contracted with a vector: sum_k w[.,.,k] c_k (symmetric 3x3).
  Eigen::Matrix3d w_dot(const Eigen::Vector3d& c) const {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i) m += w[i] * c[i];
    return m;
  }
};

/// Scalar value plus the documented truncation bound of the mode sum.
struct PotentialValue {
  double value = 0.0;
  double truncation_bound = 0.0;  // exp(-z * cutoff)
  int modes_used = 0;
};

// Green's function of the film plane, G(x,y,z) = z / (2 pi (x^2+y^2+z^2)^(3/2)).
// Requires z > 0; throws std::domain_error otherwise.
double kernel_value(double x, double y, double z);

// Potential of a unit-magnetized polygonal domain at r (z > 0): the solid
// angle subtended by the polygon divided by 2*pi. Exact closed form via
// per-triangle solid angles; value in (0, 1).
double polygon_potential(const FiniteDomain& domain, const Eigen::Vector3d& r);

// Fourier-propagated potential of a periodic pattern at r (z > 0), in units
// of (1/2)mu0*delta*Mz.
PotentialValue periodic_potential(const FourierSpectrum& spectrum, const Eigen::Vector3d& r);

// Analytic derivatives of the mode sum at r (z > 0), up to `order` in 1..3.
FieldExpansion field_expansion(const FourierSpectrum& spectrum, const Eigen::Vector3d& r,
                               int order = 3);

/// Derivative selector for constraint-row assembly: derivative of Psi of
/// given order with multi-index `axes` (e.g. {0,2} = d^2 Psi / dx dz).
/// order 0 selects Psi itself.
struct DerivativeSelector {
  int order = 0;
  std::array<int, 3> axes = {0, 0, 0};

  static DerivativeSelector psi() { return {0, {0, 0, 0}}; }
  static DerivativeSelector u(int i) { return {1, {i, 0, 0}}; }
  static DerivativeSelector v(int i, int j) { return {2, {i, j, 0}}; }
  static DerivativeSelector w(int i, int j, int k) { return {3, {i, j, k}}; }
};

// Per-pixel coefficient rows: row.dot(m) equals the selected derivative of
// the reduced potential of pattern m at the point. One row per (point,
// selector) pair, assembled through the pixel -> spectrum -> derivative chain
// with the same mode policy as field_expansion.
Eigen::MatrixXd basis_derivative_rows(const LatticeGeometry& geometry, double cutoff,
                                      const std::vector<Eigen::Vector3d>& points,
                                      const std::vector<DerivativeSelector>& which);

/// Abstract field provider in reduced units; implemented by periodic
/// spectra, the analytic two-wave family, the Z-wire and superpositions.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual FieldExpansion expansion(const Eigen::Vector3d& r, int order) const = 0;

  // Magnetic field of the source, B = -grad Psi.
  Eigen::Vector3d field(const Eigen::Vector3d& r) const { return -expansion(r, 1).u; }

  // Adds B over a g1 x g2 fractional grid of one unit cell at height z into
  // `accum` (row-major, accum[a + g1*b] at cell point (a/g1, b/g2)). The
  // default evaluates point by point; grid-aware sources override it.
  virtual void add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                                std::vector<Eigen::Vector3d>& accum) const;
};

class SpectrumField final : public FieldSource {
 public:
  explicit SpectrumField(FourierSpectrum spectrum) : spectrum_(std::move(spectrum)) {}
  FieldExpansion expansion(const Eigen::Vector3d& r, int order) const override {
    return field_expansion(spectrum_, r, order);
  }
  // Separable mode-sum evaluation over the whole grid; reduces the cost per
  // plane from modes x points to roughly modes x g2 + points x p-range.
  void add_plane_fields(const LatticeGeometry& cell, int g1, int g2, double z,
                        std::vector<Eigen::Vector3d>& accum) const override;
  const FourierSpectrum& spectrum() const { return spectrum_; }

 private:
  FourierSpectrum spectrum_;
};

}  // namespace maglat
