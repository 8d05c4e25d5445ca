#include "maglat/spectrum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maglat {

namespace {

// sin(x)/x with the removable singularity filled in.
double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

}  // namespace

std::complex<double> pixel_form_factor(const LatticeGeometry& g, int p, int q) {
  // Integral over one pixel in fractional coordinates: the parallelogram
  // pixel maps to s in [0,1/n1), t in [0,1/n2) and k.(s a1 + t a2) =
  // 2 pi (p s + q t), so the integral factorizes into two 1D pieces.
  const double xp = kPi * p / g.n1;
  const double xq = kPi * q / g.n2;
  const std::complex<double> phase = std::exp(std::complex<double>(0.0, -(xp + xq)));
  return phase * (sinc(xp) * sinc(xq));
}

FourierSpectrum FourierSpectrum::of_pattern(const MagnetizationPattern& pattern) {
  return of_pattern(pattern, nyquist_cutoff(pattern.geometry));
}

FourierSpectrum FourierSpectrum::of_pattern(const MagnetizationPattern& pattern, double cutoff) {
  pattern.validate();
  const auto& g = pattern.geometry;
  FourierSpectrum s;
  s.geometry_ = g;
  s.cutoff_ = cutoff;

  // Two-pass separable DFT of the pixel values (unnormalized).
  Eigen::MatrixXcd half(g.n1, g.n2);  // half(p, j) = sum_i m(i,j) e^{-2pi i p i/n1}
  for (int p = 0; p < g.n1; ++p) {
    const std::complex<double> wp = std::exp(std::complex<double>(0.0, -kTwoPi * p / g.n1));
    for (int j = 0; j < g.n2; ++j) {
      std::complex<double> acc = 0.0, ph = 1.0;
      for (int i = 0; i < g.n1; ++i) {
        acc += pattern.at(i, j) * ph;
        ph *= wp;
      }
      half(p, j) = acc;
    }
  }
  s.dft_.resize(g.n1, g.n2);
  for (int q = 0; q < g.n2; ++q) {
    const std::complex<double> wq = std::exp(std::complex<double>(0.0, -kTwoPi * q / g.n2));
    for (int p = 0; p < g.n1; ++p) {
      std::complex<double> acc = 0.0, ph = 1.0;
      for (int j = 0; j < g.n2; ++j) {
        acc += half(p, j) * ph;
        ph *= wq;
      }
      s.dft_(p, q) = acc;
    }
  }
  return s;
}

FourierSpectrum FourierSpectrum::explicit_modes(
    const LatticeGeometry& geometry, std::map<std::pair<int, int>, std::complex<double>> modes,
    double cutoff) {
  geometry.validate();
  for (const auto& [pq, amp] : modes) {
    const auto it = modes.find({-pq.first, -pq.second});
    if (it == modes.end() || std::abs(it->second - std::conj(amp)) > 1e-12 * (1.0 + std::abs(amp)))
      throw std::invalid_argument("FourierSpectrum: explicit mode map is not Hermitian");
  }
  FourierSpectrum s;
  s.geometry_ = geometry;
  s.explicit_ = std::move(modes);
  s.is_explicit_ = true;
  s.cutoff_ = cutoff;
  return s;
}

std::complex<double> FourierSpectrum::coefficient(int p, int q) const {
  if (is_explicit_) {
    const auto it = explicit_.find({p, q});
    return it == explicit_.end() ? std::complex<double>(0.0) : it->second;
  }
  if (dft_.size() == 0) return 0.0;
  const auto& g = geometry_;
  return dft_(wrap(p, g.n1), wrap(q, g.n2)) / double(g.pixel_count()) * pixel_form_factor(g, p, q);
}

double FourierSpectrum::nyquist_cutoff(const LatticeGeometry& g) {
  double m = 0.0;
  for (int sp : {-1, 1})
    for (int sq : {-1, 1})
      m = std::max(m, g.wavevector(sp * (g.n1 / 2), sq * (g.n2 / 2)).norm());
  return m;
}

std::vector<Mode> enumerate_modes(const LatticeGeometry& g, double cutoff, double z) {
  if (z <= 0.0) throw std::domain_error("mode enumeration requires z > 0");
  const double bound = std::min(cutoff, FourierSpectrum::damping_bound(z));
  std::vector<Mode> modes;
  Mode zero;
  modes.push_back(zero);
  if (!(bound > 0.0)) return modes;
  // |p| = |k.a1|/2pi <= ||k||/2pi since |a1| = |a2| = 1.
  const int pmax = int(std::floor(bound / kTwoPi + 1e-12));
  for (int p = -pmax; p <= pmax; ++p)
    for (int q = -pmax; q <= pmax; ++q) {
      if (p == 0 && q == 0) continue;
      const Eigen::Vector2d k = g.wavevector(p, q);
      const double kn = k.norm();
      if (kn > bound) continue;
      modes.push_back({p, q, k.x(), k.y(), kn, 0.0});
    }
  return modes;
}

std::vector<Mode> FourierSpectrum::modes_for_height(double z) const {
  std::vector<Mode> modes;
  if (is_explicit_) {
    const double bound = std::min(cutoff_, damping_bound(z));
    Mode zero;
    zero.amp = coefficient(0, 0);
    modes.push_back(zero);
    for (const auto& [pq, amp] : explicit_) {
      if (pq.first == 0 && pq.second == 0) continue;
      const Eigen::Vector2d k = geometry_.wavevector(pq.first, pq.second);
      if (k.norm() > bound) continue;
      modes.push_back({pq.first, pq.second, k.x(), k.y(), k.norm(), amp});
    }
    return modes;
  }
  modes = enumerate_modes(geometry_, cutoff_, z);
  for (auto& m : modes) m.amp = coefficient(m.p, m.q);
  return modes;
}

}  // namespace maglat
