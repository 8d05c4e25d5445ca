#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <utility>
#include <vector>

#include "maglat/geometry.hpp"
#include "maglat/pattern.hpp"

namespace maglat {

/// One retained Fourier mode of a periodic pattern. Wavevectors are in
/// reduced units 1/d (so the fundamental norms are of order 2*pi).
struct Mode {
  int p = 0, q = 0;
  double kx = 0.0, ky = 0.0, knorm = 0.0;
  std::complex<double> amp;
};

/// Analytic Fourier series of a unit-cell pattern. Piecewise-constant pixel
/// patterns are stored through their pixel DFT plus the exact parallelogram
/// form factor, which stays valid beyond the grid Nyquist index; hand-built
/// spectra (test oracles, two-wave fields) store an explicit mode map.
///
/// `cutoff` is the maximum retained ||k|| in reduced units 1/d. Evaluators
/// additionally drop modes whose damping factor exp(-||k|| z) falls below
/// `kDampingEps` at the evaluation height.
class FourierSpectrum {
 public:
  static constexpr double kDampingEps = 1e-14;

  FourierSpectrum() = default;

  // Exact analytic spectrum of a piecewise-constant pixel pattern.
  static FourierSpectrum of_pattern(const MagnetizationPattern& pattern);
  static FourierSpectrum of_pattern(const MagnetizationPattern& pattern, double cutoff);

  // Spectrum from an explicit (p, q) -> amplitude map. The map must be
  // Hermitian: amp(-p,-q) = conj(amp(p,q)).
  static FourierSpectrum explicit_modes(const LatticeGeometry& geometry,
                                        std::map<std::pair<int, int>, std::complex<double>> modes,
                                        double cutoff);

  const LatticeGeometry& geometry() const { return geometry_; }
  double cutoff() const { return cutoff_; }
  void set_cutoff(double c) { cutoff_ = c; }

  // Coefficient of mode (p, q); exact for all integers for pattern-backed spectra.
  std::complex<double> coefficient(int p, int q) const;

  double mean() const { return coefficient(0, 0).real(); }

  // All modes contributing at height z: ||k|| <= min(cutoff, log(1/eps)/z),
  // amplitude attached. The (0,0) mode is always first.
  std::vector<Mode> modes_for_height(double z) const;

  // Grid Nyquist bound: largest mode norm representable on an n1 x n2 grid.
  static double nyquist_cutoff(const LatticeGeometry& g);

  // Mode norm bound from damping alone.
  static double damping_bound(double z) {
    return z > 0.0 ? -std::log(kDampingEps) / z : std::numeric_limits<double>::infinity();
  }

 private:
  LatticeGeometry geometry_;
  Eigen::MatrixXcd dft_;  // unnormalized pixel DFT, n1 x n2; empty if explicit
  std::map<std::pair<int, int>, std::complex<double>> explicit_;
  bool is_explicit_ = false;
  double cutoff_ = 0.0;
};

// Geometry-level mode enumeration shared by spectrum evaluation and
// constraint-row assembly (identical mode sets keep the two paths consistent
// to machine precision). Includes (0,0); no amplitudes attached.
std::vector<Mode> enumerate_modes(const LatticeGeometry& g, double cutoff, double z);

// Exact pixel form factor: integral of exp(-i k.x) over one parallelogram
// pixel at the cell origin, normalized by the cell area.
std::complex<double> pixel_form_factor(const LatticeGeometry& g, int p, int q);

}  // namespace maglat
