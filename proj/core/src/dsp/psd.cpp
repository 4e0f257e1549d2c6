#include "psgkit/dsp/psd.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "psgkit/errors.hpp"

namespace psgkit::dsp {

namespace {

// Precomputed Hann window and DFT twiddles for one length.
struct DftPlan {
  std::size_t n = 0;
  std::vector<double> window;
  double window_energy = 0.0;
  std::vector<double> cos_table;  // cos(2*pi*j/n), j in [0, n)
  std::vector<double> sin_table;

  explicit DftPlan(std::size_t len) : n(len), window(len), cos_table(len), sin_table(len) {
    for (std::size_t i = 0; i < n; ++i) {
      // periodic Hann
      window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                       static_cast<double>(n));
      window_energy += window[i] * window[i];
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
      cos_table[i] = std::cos(a);
      sin_table[i] = std::sin(a);
    }
  }
};

const DftPlan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<DftPlan>> plans;
  std::lock_guard lock(mu);
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<DftPlan>(n);
  return *slot;
}

}  // namespace

Spectrum hann_periodogram(std::span<const double> x, double fs_hz) {
  const std::size_t n = x.size();
  if (n < 2) throw WindowError("periodogram needs at least 2 samples");
  if (!(fs_hz > 0.0)) throw WindowError("sampling rate must be positive");
  const DftPlan& plan = plan_for(n);

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);

  std::vector<double> tapered(n);
  for (std::size_t i = 0; i < n; ++i) tapered[i] = (x[i] - mean) * plan.window[i];

  const std::size_t nbins = n / 2 + 1;
  Spectrum s;
  s.df = fs_hz / static_cast<double>(n);
  s.density.resize(nbins);
  const double scale = 1.0 / (fs_hz * plan.window_energy);
  for (std::size_t k = 0; k < nbins; ++k) {
    double re = 0.0;
    double im = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      re += tapered[i] * plan.cos_table[idx];
      im -= tapered[i] * plan.sin_table[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    double p = (re * re + im * im) * scale;
    const bool nyquist = (n % 2 == 0) && (k == n / 2);
    if (k != 0 && !nyquist) p *= 2.0;
    s.density[k] = p;
  }
  return s;
}

double band_power(const Spectrum& s, const Band& band) {
  double total = 0.0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < s.density.size(); ++k) {
    if (!band.contains(s.freq(k))) {
      have_prev = false;
      continue;
    }
    if (have_prev) total += 0.5 * (prev + s.density[k]) * s.df;
    prev = s.density[k];
    have_prev = true;
  }
  return total;
}

std::size_t peak_bin(const Spectrum& s, const Band& band) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_v = 0.0;
  for (std::size_t k = 0; k < s.density.size(); ++k) {
    if (!band.contains(s.freq(k))) continue;
    if (s.density[k] > best_v) {
      best_v = s.density[k];
      best = k;
    }
  }
  return best;
}

}  // namespace psgkit::dsp
