#include "psgkit/dsp/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "psgkit/errors.hpp"

namespace psgkit::dsp {

namespace {

using cplx = std::complex<double>;

struct Zpk {
  std::vector<cplx> zeros;
  std::vector<cplx> poles;
  double gain = 1.0;
};

std::vector<cplx> butter_prototype_poles(int order) {
  std::vector<cplx> poles;
  poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.push_back(std::polar(1.0, theta));
  }
  return poles;
}

double prewarp(double freq_hz, double fs_hz) {
  return 2.0 * fs_hz * std::tan(std::numbers::pi * freq_hz / fs_hz);
}

void check_design(int order, double fs_hz) {
  if (order < 1) throw ConfigError("filter order must be >= 1");
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
}

void check_edge(double f, double fs_hz) {
  if (!(f > 0.0) || !(f < fs_hz / 2.0)) {
    throw ConfigError("filter edge " + std::to_string(f) + " Hz outside (0, Nyquist) for fs " +
                      std::to_string(fs_hz));
  }
}

// Analog zpk -> digital zpk. Zeros at infinity map to z = -1.
Zpk bilinear(const Zpk& analog, double fs_hz) {
  const double fs2 = 2.0 * fs_hz;
  Zpk d;
  cplx num = 1.0;
  cplx den = 1.0;
  for (const cplx& z : analog.zeros) {
    d.zeros.push_back((fs2 + z) / (fs2 - z));
    num *= fs2 - z;
  }
  for (const cplx& p : analog.poles) {
    d.poles.push_back((fs2 + p) / (fs2 - p));
    den *= fs2 - p;
  }
  while (d.zeros.size() < d.poles.size()) d.zeros.emplace_back(-1.0, 0.0);
  d.gain = analog.gain * (num / den).real();
  return d;
}

// Splits a list of roots into conjugate pairs and leftover real roots.
void pair_roots(const std::vector<cplx>& roots, std::vector<std::pair<cplx, cplx>>& pairs,
                std::vector<double>& reals) {
  constexpr double tol = 1e-12;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(roots[i].imag()) <= tol * std::max(1.0, std::abs(roots[i]))) {
      reals.push_back(roots[i].real());
      used[i] = true;
      continue;
    }
    // find its conjugate
    std::size_t best = roots.size();
    double best_d = 0.0;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      const double dist = std::abs(roots[j] - std::conj(roots[i]));
      if (best == roots.size() || dist < best_d) {
        best = j;
        best_d = dist;
      }
    }
    if (best == roots.size()) throw ConfigError("unpaired complex root in filter design");
    pairs.emplace_back(roots[i], roots[best]);
    used[i] = used[best] = true;
  }
}

SosFilter zpk_to_sos(const Zpk& d) {
  std::vector<std::pair<cplx, cplx>> pole_pairs;
  std::vector<double> pole_reals;
  pair_roots(d.poles, pole_pairs, pole_reals);

  // Zeros of Butterworth designs are all real (+1 / -1); group by value so
  // each section of a band-pass receives one zero at +1 and one at -1.
  std::vector<double> zpos, zneg, zother;
  for (const cplx& z : d.zeros) {
    if (std::abs(z - cplx(1.0, 0.0)) < 1e-9) {
      zpos.push_back(1.0);
    } else if (std::abs(z - cplx(-1.0, 0.0)) < 1e-9) {
      zneg.push_back(-1.0);
    } else {
      zother.push_back(z.real());
    }
  }
  std::vector<double> zeros;
  while (!zpos.empty() || !zneg.empty()) {
    if (!zpos.empty()) { zeros.push_back(zpos.back()); zpos.pop_back(); }
    if (!zneg.empty()) { zeros.push_back(zneg.back()); zneg.pop_back(); }
  }
  zeros.insert(zeros.end(), zother.begin(), zother.end());

  std::vector<Biquad> sections;
  std::size_t zi = 0;
  auto take_zero = [&]() -> std::optional<double> {
    if (zi < zeros.size()) return zeros[zi++];
    return std::nullopt;
  };

  for (const auto& [p1, p2] : pole_pairs) {
    Biquad s;
    s.a1 = -(p1 + p2).real();
    s.a2 = (p1 * p2).real();
    const auto z1 = take_zero();
    const auto z2 = take_zero();
    const double za = z1.value_or(0.0);
    const double zb = z2.value_or(0.0);
    s.b0 = 1.0;
    s.b1 = -((z1 ? za : 0.0) + (z2 ? zb : 0.0));
    s.b2 = (z1 && z2) ? za * zb : 0.0;
    sections.push_back(s);
  }
  for (std::size_t i = 0; i < pole_reals.size(); i += 2) {
    Biquad s;
    if (i + 1 < pole_reals.size()) {
      s.a1 = -(pole_reals[i] + pole_reals[i + 1]);
      s.a2 = pole_reals[i] * pole_reals[i + 1];
      const auto z1 = take_zero();
      const auto z2 = take_zero();
      s.b1 = -(z1.value_or(0.0) + z2.value_or(0.0));
      s.b2 = (z1 && z2) ? *z1 * *z2 : 0.0;
    } else {
      s.a1 = -pole_reals[i];
      s.a2 = 0.0;
      const auto z1 = take_zero();
      s.b1 = z1 ? -*z1 : 0.0;
      s.b2 = 0.0;
    }
    sections.push_back(s);
  }
  if (sections.empty()) sections.emplace_back();
  sections.front().b0 *= d.gain;
  sections.front().b1 *= d.gain;
  sections.front().b2 *= d.gain;
  return SosFilter(std::move(sections));
}

}  // namespace

SosFilter::SosFilter(std::vector<Biquad> sections)
    : sections_(std::move(sections)), settle_(settle_length(sections_)) {}

std::complex<double> SosFilter::response(double freq_hz, double fs_hz) const {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  const cplx zinv = std::polar(1.0, -w);
  const cplx zinv2 = zinv * zinv;
  cplx h = 1.0;
  for (const Biquad& s : sections_) {
    h *= (s.b0 + s.b1 * zinv + s.b2 * zinv2) / (1.0 + s.a1 * zinv + s.a2 * zinv2);
  }
  return h;
}

SosFilter SosFilter::then(const SosFilter& next) const {
  std::vector<Biquad> all = sections_;
  all.insert(all.end(), next.sections_.begin(), next.sections_.end());
  return SosFilter(std::move(all));
}

SosFilter butterworth_lowpass(int order, double cutoff_hz, double fs_hz) {
  check_design(order, fs_hz);
  check_edge(cutoff_hz, fs_hz);
  const double wc = prewarp(cutoff_hz, fs_hz);
  Zpk a;
  for (const cplx& p : butter_prototype_poles(order)) a.poles.push_back(wc * p);
  a.gain = std::pow(wc, order);
  return zpk_to_sos(bilinear(a, fs_hz));
}

SosFilter butterworth_highpass(int order, double cutoff_hz, double fs_hz) {
  check_design(order, fs_hz);
  check_edge(cutoff_hz, fs_hz);
  const double wc = prewarp(cutoff_hz, fs_hz);
  Zpk a;
  cplx prod_neg_p = 1.0;
  for (const cplx& p : butter_prototype_poles(order)) {
    a.poles.push_back(wc / p);
    a.zeros.emplace_back(0.0, 0.0);
    prod_neg_p *= -p;
  }
  a.gain = (1.0 / prod_neg_p).real();
  return zpk_to_sos(bilinear(a, fs_hz));
}

SosFilter butterworth_bandpass(int order, double low_hz, double high_hz, double fs_hz) {
  check_design(order, fs_hz);
  check_edge(low_hz, fs_hz);
  check_edge(high_hz, fs_hz);
  if (!(low_hz < high_hz)) throw ConfigError("band-pass low edge must be below high edge");
  const double w1 = prewarp(low_hz, fs_hz);
  const double w2 = prewarp(high_hz, fs_hz);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;
  Zpk a;
  for (const cplx& p : butter_prototype_poles(order)) {
    const cplx half = p * bw / 2.0;
    const cplx root = std::sqrt(half * half - w0sq);
    a.poles.push_back(half + root);
    a.poles.push_back(half - root);
    a.zeros.emplace_back(0.0, 0.0);
  }
  a.gain = std::pow(bw, order);
  return zpk_to_sos(bilinear(a, fs_hz));
}

SosFilter iir_notch(double f0_hz, double q, double fs_hz) {
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  check_edge(f0_hz, fs_hz);
  if (!(q > 0.0)) throw ConfigError("notch quality factor must be positive");
  const double w0 = 2.0 * std::numbers::pi * f0_hz / fs_hz;
  const double bw = w0 / q;
  const double beta = std::tan(bw / 2.0);
  const double gain = 1.0 / (1.0 + beta);
  Biquad s;
  s.b0 = gain;
  s.b1 = -2.0 * gain * std::cos(w0);
  s.b2 = gain;
  s.a1 = -2.0 * gain * std::cos(w0);
  s.a2 = 2.0 * gain - 1.0;
  return SosFilter({s});
}

std::vector<double> sosfilt(const SosFilter& filter, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const Biquad& s : filter.sections()) {
    // transposed direct form II
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::size_t settle_length(std::span<const Biquad> sections, double rel_tol, std::size_t max_len) {
  // Run an impulse through the cascade incrementally.
  struct State { double z1 = 0.0, z2 = 0.0; };
  std::vector<State> st(sections.size());
  double peak = 0.0;
  std::size_t last_big = 0;
  std::size_t quiet_run = 0;
  for (std::size_t n = 0; n < max_len; ++n) {
    double v = (n == 0) ? 1.0 : 0.0;
    for (std::size_t k = 0; k < st.size(); ++k) {
      const Biquad& s = sections[k];
      const double out = s.b0 * v + st[k].z1;
      st[k].z1 = s.b1 * v - s.a1 * out + st[k].z2;
      st[k].z2 = s.b2 * v - s.a2 * out;
      v = out;
    }
    const double a = std::abs(v);
    peak = std::max(peak, a);
    if (a > rel_tol * peak) {
      last_big = n;
      quiet_run = 0;
    } else if (++quiet_run > 4096 && n > 8 * (last_big + 1)) {
      break;
    }
  }
  return last_big + 1;
}

std::size_t default_padlen(const SosFilter& filter) noexcept {
  return 3 * (2 * filter.sections().size() + 1);
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x,
                             std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min(padlen, n - 1);
  const std::size_t guard = filter.settle();

  const std::size_t total = 2 * guard + 2 * pad + n;
  std::vector<double> ext(total, 0.0);
  const std::size_t start = guard + pad;
  // odd reflection about the end samples
  for (std::size_t i = 0; i < pad; ++i) {
    ext[start - 1 - i] = 2.0 * x[0] - x[i + 1];
    ext[start + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(start));

  std::vector<double> y = sosfilt(filter, ext);
  std::reverse(y.begin(), y.end());
  y = sosfilt(filter, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(start),
          y.begin() + static_cast<std::ptrdiff_t>(start + n)};
}

std::vector<double> filtfilt(const SosFilter& filter, std::span<const double> x) {
  return filtfilt(filter, x, default_padlen(filter));
}

}  // namespace psgkit::dsp
