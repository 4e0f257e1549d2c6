#include "psgkit/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "psgkit/errors.hpp"
#include "psgkit/rng.hpp"

namespace psgkit::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kNoiseTones = 32;
constexpr double kBlinkWidth = 0.3;
constexpr double kRemRise = 0.15;

struct NoiseBand {
  double lo;
  double hi;
};

NoiseBand noise_band(const Component& c) {
  if (c.freq_hi_hz > 0.0) return {c.frequency_hz, c.freq_hi_hz};
  if (c.kind == Waveform::Artifact) {
    return kind_of(c.channel) == ChannelKind::EMG ? NoiseBand{15.0, 40.0} : NoiseBand{1.0, 30.0};
  }
  return {0.5, 30.0};
}

double tukey(double x, double alpha) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (x < alpha / 2.0) return 0.5 * (1.0 + std::cos(kTwoPi / alpha * (x - alpha / 2.0)));
  if (x > 1.0 - alpha / 2.0) return 0.5 * (1.0 + std::cos(kTwoPi / alpha * (x - 1.0 + alpha / 2.0)));
  return 1.0;
}

double raised_bump(double tau, double width) {
  if (tau < 0.0 || tau >= width) return 0.0;
  return 0.5 * (1.0 - std::cos(kTwoPi * tau / width));
}

}  // namespace

std::string_view to_string(Waveform w) noexcept {
  switch (w) {
    case Waveform::Sine: return "sine";
    case Waveform::SpindleBurst: return "spindle-burst";
    case Waveform::KComplex: return "k-complex";
    case Waveform::SlowWave: return "slow-wave";
    case Waveform::Blink: return "blink";
    case Waveform::SEM: return "sem";
    case Waveform::REM: return "rem";
    case Waveform::Noise: return "noise";
    case Waveform::Artifact: return "artifact";
  }
  return "?";
}

Waveform parse_waveform(std::string_view s) {
  for (Waveform w : {Waveform::Sine, Waveform::SpindleBurst, Waveform::KComplex, Waveform::SlowWave,
                     Waveform::Blink, Waveform::SEM, Waveform::REM, Waveform::Noise,
                     Waveform::Artifact}) {
    if (to_string(w) == s) return w;
  }
  throw SpecError("unknown waveform kind \"" + std::string(s) + "\"");
}

void validate(const EpochSpec& spec) {
  for (const Component& c : spec.components) {
    const double end = c.t_start_s + c.duration_s;
    if (!(c.t_start_s >= 0.0) || !(c.duration_s > 0.0) || end > kEpochSeconds + 1e-9) {
      throw SpecError(std::string(to_string(c.kind)) + " on " + std::string(label(c.channel)) +
                      " spans [" + std::to_string(c.t_start_s) + ", " + std::to_string(end) +
                      ") s, outside the 30-s epoch");
    }
    if (!std::isfinite(c.amplitude_uv)) throw SpecError("amplitude must be finite");
    const bool needs_freq = c.kind == Waveform::Sine || c.kind == Waveform::SpindleBurst ||
                            c.kind == Waveform::SlowWave || c.kind == Waveform::Blink;
    if (needs_freq && !(c.frequency_hz > 0.0)) {
      throw SpecError(std::string(to_string(c.kind)) + " needs a positive frequency");
    }
    if (c.kind == Waveform::Noise || c.kind == Waveform::Artifact) {
      const NoiseBand b = noise_band(c);
      if (!(b.lo > 0.0 && b.lo < b.hi)) throw SpecError("noise band must satisfy 0 < lo < hi");
    }
  }
}

void add_component(std::span<double> out, double fs_hz, double offset_s, const Component& c,
                   std::uint64_t seed, std::uint64_t salt) {
  const double A = c.amplitude_uv;
  const double f = c.frequency_hz;
  const double d = c.duration_s;

  // Noise tone table (only built for noise kinds).
  std::array<double, kNoiseTones> tone_f{};
  std::array<double, kNoiseTones> tone_ph{};
  double tone_a = 0.0;
  if (c.kind == Waveform::Noise || c.kind == Waveform::Artifact) {
    const NoiseBand b = noise_band(c);
    Rng rng(seed, salt);
    for (std::size_t k = 0; k < kNoiseTones; ++k) {
      tone_f[k] = rng.uniform(b.lo, b.hi);
      tone_ph[k] = rng.uniform(0.0, kTwoPi);
    }
    tone_a = A * std::sqrt(2.0 / static_cast<double>(kNoiseTones));
  }

  // Sample range overlapping [t_start, t_start + d).
  const double first = std::ceil((c.t_start_s - offset_s) * fs_hz - 1e-9);
  const double last = std::ceil((c.t_start_s + d - offset_s) * fs_hz - 1e-9);
  const auto i0 = static_cast<long long>(std::max(0.0, first));
  const auto i1 = static_cast<long long>(std::min(static_cast<double>(out.size()), std::max(0.0, last)));

  for (long long i = i0; i < i1; ++i) {
    const double tau = offset_s + static_cast<double>(i) / fs_hz - c.t_start_s;
    if (tau < 0.0 || tau >= d) continue;
    double v = 0.0;
    switch (c.kind) {
      case Waveform::Sine:
        v = A * std::sin(kTwoPi * f * tau + c.phase_rad);
        break;
      case Waveform::SpindleBurst:
        v = A * std::sin(kTwoPi * f * tau) * tukey(tau / d, 0.25);
        break;
      case Waveform::KComplex:
        v = -A * std::sin(kTwoPi * tau / d);
        break;
      case Waveform::SlowWave:
        v = -A * std::sin(kTwoPi * f * tau);
        break;
      case Waveform::Blink: {
        const double period = 1.0 / f;
        const double width = std::min(kBlinkWidth, 0.9 * period);
        const double k = std::floor(tau / period);
        const double local = tau - k * period;
        // only whole bumps
        if ((k * period) + width <= d + 1e-12) v = A * raised_bump(local, width);
        break;
      }
      case Waveform::SEM:
        v = A * raised_bump(tau, d);
        break;
      case Waveform::REM: {
        const double rise = std::min(kRemRise, d / 3.0);
        if (tau < rise) {
          v = A * 0.5 * (1.0 - std::cos(std::numbers::pi * tau / rise));
        } else {
          v = A * 0.5 * (1.0 + std::cos(std::numbers::pi * (tau - rise) / (d - rise)));
        }
        break;
      }
      case Waveform::Noise:
      case Waveform::Artifact:
        for (std::size_t k = 0; k < kNoiseTones; ++k) {
          v += std::sin(kTwoPi * tone_f[k] * tau + tone_ph[k]);
        }
        v *= tone_a;
        break;
    }
    out[static_cast<std::size_t>(i)] += v;
  }
}

Epoch synthesize_epoch(const EpochSpec& spec, std::size_t index) {
  validate(spec);
  Epoch ep(index);
  for (std::size_t k = 0; k < spec.components.size(); ++k) {
    const Component& c = spec.components[k];
    add_component(ep.channel(c.channel), kTargetRateHz, 0.0, c, spec.seed, k);
  }
  return ep;
}

Recording synthesize_recording(const std::vector<EpochSpec>& epochs, double fs_hz,
                               const std::string& subject_id) {
  if (!(fs_hz > 0.0)) throw SpecError("sampling rate must be positive");
  const auto total = static_cast<std::size_t>(
      std::llround(static_cast<double>(epochs.size()) * kEpochSeconds * fs_hz));
  Recording rec;
  rec.subject_id = subject_id;
  rec.source_rate_hz = fs_hz;
  for (Channel c : kMontage) {
    rec[c].channel = c;
    rec[c].sample_rate_hz = fs_hz;
    rec[c].samples.assign(total, 0.0);
  }
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    validate(epochs[e]);
    const double epoch_start = static_cast<double>(e) * kEpochSeconds;
    const auto first = static_cast<std::size_t>(std::llround(epoch_start * fs_hz));
    const auto last = std::min(total, static_cast<std::size_t>(
                                          std::llround((epoch_start + kEpochSeconds) * fs_hz)));
    for (std::size_t k = 0; k < epochs[e].components.size(); ++k) {
      const Component& comp = epochs[e].components[k];
      auto& buf = rec[comp.channel].samples;
      std::span<double> window(buf.data() + first, last - first);
      const double offset = static_cast<double>(first) / fs_hz - epoch_start;
      add_component(window, fs_hz, offset, comp, epochs[e].seed, k);
    }
  }
  return rec;
}

}  // namespace psgkit::synth
