#include "psgkit/dsp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "psgkit/errors.hpp"

namespace psgkit::dsp {

namespace {

constexpr double kKaiserBeta = 5.0;
constexpr std::size_t kHalfLenFactor = 10;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Even (mirror) reflection index into [0, n).
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n) - 2;
  long long k = i % period;
  if (k < 0) k += period;
  if (k >= static_cast<long long>(n)) k = period - k;
  return static_cast<std::size_t>(k);
}

}  // namespace

PolyphaseResampler::PolyphaseResampler(std::size_t up, std::size_t down)
    : up_(up), down_(down) {
  if (up == 0 || down == 0) throw ResampleError("resampling factors must be positive");
  const std::size_t g = std::gcd(up, down);
  up_ /= g;
  down_ /= g;
  const std::size_t max_rate = std::max(up_, down_);
  half_len_ = kHalfLenFactor * max_rate;
  const std::size_t len = 2 * half_len_ + 1;
  const double cutoff = 1.0 / static_cast<double>(max_rate);  // fraction of Nyquist
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  taps_.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    const double m = static_cast<double>(k) - static_cast<double>(half_len_);
    const double r = m / static_cast<double>(half_len_);
    const double w = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                     i0_beta;
    taps_[k] = cutoff * sinc(cutoff * m) * w;
  }
  // Normalize every polyphase branch to sum to one.
  for (std::size_t phase = 0; phase < up_; ++phase) {
    double sum = 0.0;
    for (std::size_t k = phase; k < len; k += up_) sum += taps_[k];
    if (sum != 0.0) {
      for (std::size_t k = phase; k < len; k += up_) taps_[k] /= sum;
    }
  }
}

std::size_t PolyphaseResampler::output_length(std::size_t n) const noexcept {
  const auto num = static_cast<long double>(n) * up_;
  return static_cast<std::size_t>(std::llround(num / down_));
}

std::vector<double> PolyphaseResampler::apply(std::span<const double> x) const {
  const std::size_t n = x.size();
  const std::size_t out_len = output_length(n);
  std::vector<double> y(out_len, 0.0);
  if (n == 0) return y;

  const long long up = static_cast<long long>(up_);
  const long long half = static_cast<long long>(half_len_);
  const long long len = static_cast<long long>(taps_.size());

  for (std::size_t m = 0; m < out_len; ++m) {
    // position in the up-sampled grid; tap k multiplies u[pos + half - k]
    const long long pos = static_cast<long long>(m) * static_cast<long long>(down_);
    const long long top = pos + half;
    // first k with (top - k) divisible by up
    long long k0 = top % up;
    double acc = 0.0;
    for (long long k = k0; k < len; k += up) {
      const long long src = (top - k) / up;
      acc += taps_[static_cast<std::size_t>(k)] * x[reflect_index(src, n)];
    }
    y[m] = acc;
  }
  return y;
}

std::pair<std::size_t, std::size_t> rational_ratio(double source_hz, double target_hz) {
  if (!(source_hz > 0.0) || !(target_hz > 0.0)) {
    throw ResampleError("sampling rates must be positive");
  }
  const double s = source_hz * 1000.0;
  const double t = target_hz * 1000.0;
  const double sr = std::round(s);
  const double tr = std::round(t);
  if (std::abs(s - sr) > 1e-6 || std::abs(t - tr) > 1e-6) {
    throw ResampleError("cannot form a rational resampling ratio for " +
                        std::to_string(source_hz) + " -> " + std::to_string(target_hz) + " Hz");
  }
  auto up = static_cast<std::size_t>(tr);
  auto down = static_cast<std::size_t>(sr);
  const std::size_t g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (std::max(up, down) > 100000) {
    throw ResampleError("resampling ratio " + std::to_string(up) + "/" + std::to_string(down) +
                        " too large");
  }
  return {up, down};
}

}  // namespace psgkit::dsp
