#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace psgkit::testing {

std::vector<double> naive_psd(std::span<const double> x, double fs) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  double wss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    wss += w[i] * w[i];
  }
  std::vector<double> psd(n / 2 + 1);
  for (std::size_t k = 0; k < psd.size(); ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double ang = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * i % n) /
                              static_cast<long double>(n);
      const long double v = (x[i] - mean) * w[i];
      re += v * std::cos(ang);
      im += v * std::sin(ang);
    }
    double p = static_cast<double>(re * re + im * im) / (fs * wss);
    const bool nyquist = (n % 2 == 0) && k == n / 2;
    if (k != 0 && !nyquist) p *= 2.0;
    psd[k] = p;
  }
  return psd;
}

double naive_band_power(std::span<const double> psd, double df, double lo, double hi,
                        bool closed_low) {
  double total = 0.0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = static_cast<double>(k) * df;
    const bool in = (closed_low ? f >= lo : f > lo) && f <= hi;
    if (!in) continue;
    if (have_prev) total += 0.5 * (prev + psd[k]) * df;
    prev = psd[k];
    have_prev = true;
  }
  return total;
}

double naive_mav(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v < 0 ? -v : v;
  return s / static_cast<double>(x.size());
}

std::vector<double> white_noise(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
    out[i] = sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return out;
}

Epoch random_epoch(std::uint64_t seed, double sigma) {
  Epoch ep;
  const auto noise = white_noise(kChannelCount * kSamplesPerEpoch, sigma, seed);
  for (Channel c : kMontage) {
    auto dst = ep.channel(c);
    std::copy_n(noise.begin() + static_cast<std::ptrdiff_t>(index_of(c) * kSamplesPerEpoch),
                kSamplesPerEpoch, dst.begin());
  }
  return ep;
}

std::vector<double> sine(std::size_t n, double fs, double f, double amp, double phase) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
  }
  return out;
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace psgkit::testing
