#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psgkit::dsp {

// One-sided power spectral density, bins at k * df for k = 0..n/2.
struct Spectrum {
  double df = 0.0;
  std::vector<double> density;  // μV²/Hz

  double freq(std::size_t k) const noexcept { return static_cast<double>(k) * df; }
};

// Welch estimate with a single full-length segment: the window mean is
// removed, a periodic Hann taper applied, and the squared DFT scaled to a
// density (1 / (fs * sum(w^2)), doubled for interior bins).
Spectrum hann_periodogram(std::span<const double> x, double fs_hz);

// Frequency band [low, high]. When `closed_low` is false the low edge is
// excluded so shared edges belong to the lower band.
struct Band {
  double low_hz;
  double high_hz;
  bool closed_low = false;

  bool contains(double f) const noexcept {
    return (closed_low ? f >= low_hz : f > low_hz) && f <= high_hz;
  }
};

// Trapezoidal integral of the density over the bins inside `band`.
double band_power(const Spectrum& s, const Band& band);

// Index of the largest-density bin inside `band`, or npos if the band holds no
// bins or the spectrum is identically zero there.
std::size_t peak_bin(const Spectrum& s, const Band& band);

}  // namespace psgkit::dsp
