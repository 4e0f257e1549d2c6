#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace psgkit::dsp {

// Normalized biquad, a0 == 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Cascade of second-order sections (overall gain folded into the first).
class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<Biquad> sections);

  const std::vector<Biquad>& sections() const noexcept { return sections_; }
  bool empty() const noexcept { return sections_.empty(); }

  // Impulse-response decay length, see settle_length().
  std::size_t settle() const noexcept { return settle_; }

  // Complex frequency response at `freq_hz` for sampling rate `fs_hz`.
  std::complex<double> response(double freq_hz, double fs_hz) const;

  // Appends another cascade (series connection).
  SosFilter then(const SosFilter& next) const;

 private:
  std::vector<Biquad> sections_;
  std::size_t settle_ = 0;
};

// Digital Butterworth designs via the bilinear transform with pre-warping.
// `order` is the analog prototype order; a band-pass has 2*order poles.
SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz);
SosFilter butterworth_highpass(int order, double cutoff_hz, double fs_hz);
SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz);

// Second-order IIR notch with quality factor q (-3 dB width = f0 / q).
SosFilter iir_notch(double f0_hz, double q, double fs_hz);

// Causal filtering from zero initial state.
std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x);

// Number of samples after which the cascade's impulse response stays below
// `rel_tol` times its peak (capped at `max_len`).
std::size_t settle_length(std::span<const Biquad> sections, double rel_tol = 1e-13,
                          std::size_t max_len = 1u << 20);

// Default odd-reflection pad length: three times the cascade order.
std::size_t default_padlen(const SosFilter& filter) noexcept;

// Zero-phase forward-backward filtering. The input is extended by odd
// reflection of `padlen` samples (clamped to n-1) and then by a zero guard
// long enough for the impulse response to decay, so filtering the reversed
// signal and reversing the result agrees with filtering the original.
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x,
                             std::size_t padlen);
std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x);

}  // namespace psgkit::dsp
