#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psgkit::dsp {

// Rational resampling by up/down with a Kaiser-windowed sinc (beta = 5,
// half-length 10 * max(up, down) taps per side), like scipy's resample_poly.
// Each polyphase branch is normalized to unit DC gain and the input is
// extended by even reflection, so constant signals are preserved exactly.
// Output length is round(n * up / down); output sample m is aligned with
// input time m * down / up.
class PolyphaseResampler {
 public:
  PolyphaseResampler(std::size_t up, std::size_t down);

  std::size_t up() const noexcept { return up_; }
  std::size_t down() const noexcept { return down_; }
  std::size_t output_length(std::size_t n) const noexcept;

  std::vector<double> apply(std::span<const double> x) const;

 private:
  std::size_t up_;
  std::size_t down_;
  std::size_t half_len_;
  std::vector<double> taps_;  // length 2 * half_len_ + 1, scaled by up_
};

// Expresses source/target rates as a reduced up/down pair. Rates must be
// multiples of 1/1000 Hz; otherwise throws ResampleError.
std::pair<std::size_t, std::size_t> rational_ratio(double source_hz, double target_hz);

}  // namespace psgkit::dsp
