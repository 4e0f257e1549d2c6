#include "psgkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "psgkit/dsp/filters.hpp"
#include "psgkit/dsp/psd.hpp"

namespace psgkit::features {

namespace {

constexpr double kFs = kTargetRateHz;
constexpr std::size_t kSec = kTargetRateHz;
constexpr std::size_t kSeconds = kEpochSeconds;
constexpr double kHalfEpoch = kEpochSeconds / 2.0;

// Designs are cached: the settle-length computation is not free and the same
// handful of filters is applied to every epoch.
enum class Design { Bandpass, Lowpass };

const dsp::SosFilter& cached_filter(Design d, double lo, double hi) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, dsp::SosFilter> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_tuple(static_cast<int>(d), lo, hi);
  auto it = cache.find(key);
  if (it == cache.end()) {
    dsp::SosFilter f = d == Design::Bandpass ? dsp::butterworth_bandpass(4, lo, hi, kFs)
                                             : dsp::butterworth_lowpass(4, hi, kFs);
    it = cache.emplace(key, std::move(f)).first;
  }
  return it->second;
}

std::vector<double> bandpass(std::span<const double> x, double lo, double hi) {
  return dsp::filtfilt(cached_filter(Design::Bandpass, lo, hi), x);
}

std::vector<double> lowpass(std::span<const double> x, double hi) {
  return dsp::filtfilt(cached_filter(Design::Lowpass, 0.0, hi), x);
}

std::span<const double> second_of(std::span<const double> x, std::size_t s) {
  return x.subspan(s * kSec, kSec);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double mav(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s / static_cast<double>(x.size());
}

const dsp::Band kTotalBand{0.3, 30.0, true};
const dsp::Band kAlphaBand{8.0, 13.0, false};
const dsp::Band kBetaBand{13.0, 30.0, false};

// Maximal same-sign runs of a signal; zero counts as positive.
struct HalfWave {
  std::size_t start;
  std::size_t end;  // exclusive
  double extremum;  // signed
};

std::vector<HalfWave> half_waves(std::span<const double> y) {
  std::vector<HalfWave> out;
  if (y.empty()) return out;
  std::size_t start = 0;
  bool pos = y[0] >= 0.0;
  double ext = y[0];
  for (std::size_t i = 1; i <= y.size(); ++i) {
    const bool at_end = i == y.size();
    const bool p = !at_end && y[i] >= 0.0;
    if (at_end || p != pos) {
      out.push_back({start, i, ext});
      if (at_end) break;
      start = i;
      pos = p;
      ext = y[i];
    } else if (std::abs(y[i]) > std::abs(ext)) {
      ext = y[i];
    }
  }
  return out;
}

// Negative-then-positive half-wave pairs within the duration/amplitude limits.
struct Biphasic {
  std::size_t start, end;
  double p2p;
};

std::vector<Biphasic> biphasic_waves(std::span<const double> y, double min_s, double max_s,
                                     double min_p2p, double max_p2p, double isolation) {
  std::vector<Biphasic> out;
  const auto hw = half_waves(y);
  for (std::size_t k = 0; k + 1 < hw.size(); ++k) {
    const HalfWave& neg = hw[k];
    const HalfWave& pos = hw[k + 1];
    if (!(neg.extremum < 0.0 && pos.extremum > 0.0)) continue;
    const double dur = static_cast<double>(pos.end - neg.start) / kFs;
    const double p2p = pos.extremum - neg.extremum;
    if (dur < min_s || dur > max_s || p2p < min_p2p || p2p >= max_p2p) continue;
    if (isolation > 0.0) {
      const double own = std::max(-neg.extremum, pos.extremum);
      const bool left_ok = k == 0 || std::abs(hw[k - 1].extremum) < isolation * own;
      const bool right_ok = k + 2 >= hw.size() || std::abs(hw[k + 2].extremum) < isolation * own;
      if (!left_ok || !right_ok) continue;
    }
    out.push_back({neg.start, pos.end, p2p});
  }
  return out;
}

// Sample mask of SWA-covered half-waves.
std::vector<bool> swa_mask(const Epoch& epoch, const DetectorConfig& cfg) {
  const auto y = bandpass(epoch.channel(Channel::F4M1), cfg.swa_low_hz, cfg.swa_high_hz);
  const auto hw = half_waves(y);
  std::vector<bool> mask(y.size(), false);
  for (std::size_t k = 0; k < hw.size(); ++k) {
    auto pair_ok = [&](std::size_t j) {
      return (hw[j].extremum < 0.0) != (hw[k].extremum < 0.0) &&
             std::abs(hw[j].extremum) + std::abs(hw[k].extremum) > cfg.swa_min_p2p_uv;
    };
    const bool covered = (k > 0 && pair_ok(k - 1)) || (k + 1 < hw.size() && pair_ok(k + 1));
    if (covered) std::fill(mask.begin() + static_cast<std::ptrdiff_t>(hw[k].start),
                           mask.begin() + static_cast<std::ptrdiff_t>(hw[k].end), true);
  }
  return mask;
}

std::vector<dsp::Spectrum> per_second_spectra(std::span<const double> x) {
  std::vector<dsp::Spectrum> out;
  out.reserve(kSeconds);
  for (std::size_t s = 0; s < kSeconds; ++s) out.push_back(dsp::hann_periodogram(second_of(x, s), kFs));
  return out;
}

std::vector<double> arousal_onsets(const std::vector<dsp::Spectrum>& c4, const std::vector<bool>& artifact,
                                   const DetectorConfig& cfg) {
  std::vector<bool> crit(kSeconds, false);
  for (std::size_t s = 0; s < kSeconds; ++s) {
    const double total = dsp::band_power(c4[s], kTotalBand);
    const double ab = dsp::band_power(c4[s], kAlphaBand) + dsp::band_power(c4[s], kBetaBand);
    crit[s] = !artifact[s] && total > 0.0 && ab >= cfg.arousal_power_ratio * total;
  }
  const auto min_run = static_cast<std::size_t>(std::ceil(cfg.arousal_min_s));
  const auto quiet = static_cast<std::size_t>(std::ceil(cfg.arousal_quiet_s));
  std::vector<double> onsets;
  std::size_t s = 0;
  while (s < kSeconds) {
    if (!crit[s]) {
      ++s;
      continue;
    }
    std::size_t e = s;
    while (e < kSeconds && crit[e]) ++e;
    if (e - s >= min_run && s >= quiet) onsets.push_back(static_cast<double>(s));
    s = e;
  }
  return onsets;
}

std::vector<bool> artifact_flags(const Epoch& epoch, const DetectorConfig& cfg) {
  std::vector<bool> flags(kSeconds, false);
  const auto limit = static_cast<double>(kSec) * cfg.artifact_sample_fraction;
  for (std::size_t s = 0; s < kSeconds; ++s) {
    bool bad = mav(second_of(epoch.channel(Channel::Chin), s)) > cfg.artifact_chin_mav_uv;
    for (Channel c : {Channel::F4M1, Channel::C4M1, Channel::O2M1}) {
      if (bad) break;
      const auto w = second_of(epoch.channel(c), s);
      const auto n = std::count_if(w.begin(), w.end(), [&](double v) { return std::abs(v) > cfg.artifact_uv; });
      bad = static_cast<double>(n) > limit;
    }
    flags[s] = bad;
  }
  return flags;
}

std::vector<TransientEvent> own_transients(const Epoch& epoch, const ArtifactResult& art,
                                           const DetectorConfig& cfg) {
  const std::vector<double>& onsets = art.arousal_onsets_s;
  std::vector<TransientEvent> out;

  // Spindles: RMS envelope of the sigma band on C4-M1.
  {
    const auto y = bandpass(epoch.channel(Channel::C4M1), cfg.spindle_low_hz, cfg.spindle_high_hz);
    const std::size_t n = y.size();
    const auto half = static_cast<std::size_t>(std::lround(cfg.spindle_rms_window_s * kFs / 2.0));
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + y[i] * y[i];
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i >= half ? i - half : 0;
      const std::size_t b = std::min(n, i + half + 1);
      env[i] = std::sqrt(std::max(0.0, prefix[b] - prefix[a]) / static_cast<double>(b - a));
    }
    const double thr = std::max(cfg.spindle_min_envelope_uv, cfg.spindle_median_factor * median(env));
    const auto min_len = static_cast<std::size_t>(std::lround(cfg.spindle_min_duration_s * kFs));
    std::size_t i = 0;
    while (i < n) {
      if (env[i] <= thr) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < n && env[j] > thr) ++j;
      if (j - i >= min_len) {
        const auto [lo, hi] = std::minmax_element(y.begin() + static_cast<std::ptrdiff_t>(i),
                                                  y.begin() + static_cast<std::ptrdiff_t>(j));
        out.push_back({TransientKind::Spindle, Channel::C4M1, static_cast<double>(i) / kFs,
                       static_cast<double>(j) / kFs, *hi - *lo, false, false});
      }
      i = j;
    }
  }

  // K-complexes on low-passed F4-M1.
  {
    const auto y = lowpass(epoch.channel(Channel::F4M1), cfg.kc_lowpass_hz);
    for (const Biphasic& b : biphasic_waves(y, cfg.kc_min_duration_s, cfg.kc_max_duration_s,
                                            cfg.kc_min_p2p_uv, INFINITY, cfg.isolation_ratio)) {
      TransientEvent ev{TransientKind::KComplex, Channel::F4M1, static_cast<double>(b.start) / kFs,
                        static_cast<double>(b.end) / kFs, b.p2p, false, false};
      for (double t : onsets) {
        if (t >= ev.t_start_s - cfg.kc_arousal_window_s && t <= ev.t_end_s + cfg.kc_arousal_window_s) {
          ev.arousal_associated = true;
        }
      }
      out.push_back(ev);
    }
  }

  // Vertex sharp waves: smaller, shorter biphasic waves on C4-M1.
  {
    const auto y = lowpass(epoch.channel(Channel::C4M1), cfg.vertex_lowpass_hz);
    for (const Biphasic& b : biphasic_waves(y, cfg.vertex_min_duration_s, cfg.vertex_max_duration_s,
                                            cfg.vertex_min_p2p_uv, cfg.kc_min_p2p_uv, 0.0)) {
      out.push_back({TransientKind::VertexSharp, Channel::C4M1, static_cast<double>(b.start) / kFs,
                     static_cast<double>(b.end) / kFs, b.p2p, false, false});
    }
  }

  // Drop anything touching an artifact second or its neighbours: filtered
  // artifact bursts readily mimic spindles and K-complexes.
  std::erase_if(out, [&](const TransientEvent& e) {
    const auto lo = static_cast<long>(std::floor(e.t_start_s)) - 1;
    const auto hi = static_cast<long>(std::ceil(e.t_end_s));
    for (long s = std::max(0L, lo); s <= std::min<long>(kSeconds - 1, hi); ++s) {
      if (art.artifact_seconds[static_cast<std::size_t>(s)]) return true;
    }
    return false;
  });

  std::stable_sort(out.begin(), out.end(),
                   [](const TransientEvent& a, const TransientEvent& b) { return a.t_start_s < b.t_start_s; });
  return out;
}

ArtifactResult artifact_with_spectra(const Epoch& epoch, const std::vector<dsp::Spectrum>& c4,
                                     const DetectorConfig& cfg) {
  ArtifactResult r;
  r.artifact_seconds = artifact_flags(epoch, cfg);
  const auto bad = std::count(r.artifact_seconds.begin(), r.artifact_seconds.end(), true);
  r.artifact_fraction = static_cast<double>(bad) / kSeconds;
  r.arousal_onsets_s = arousal_onsets(c4, r.artifact_seconds, cfg);
  r.arousal_present = !r.arousal_onsets_s.empty();
  return r;
}

}  // namespace

std::string_view to_string(TransientKind k) noexcept {
  switch (k) {
    case TransientKind::Spindle: return "spindle";
    case TransientKind::KComplex: return "k_complex";
    case TransientKind::VertexSharp: return "vertex_sharp";
  }
  return "?";
}

std::string_view to_string(EyeKind k) noexcept {
  switch (k) {
    case EyeKind::Blink: return "blink";
    case EyeKind::SEM: return "SEM";
    case EyeKind::REM: return "REM";
  }
  return "?";
}

std::size_t EpochFeatures::count(TransientKind k, bool include_preceding) const noexcept {
  return static_cast<std::size_t>(std::count_if(transients.begin(), transients.end(), [&](const TransientEvent& e) {
    return e.kind == k && (include_preceding || !e.in_preceding_epoch);
  }));
}

std::size_t EpochFeatures::count(EyeKind k) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(eye_events.begin(), eye_events.end(), [&](const EyeEvent& e) { return e.kind == k; }));
}

std::size_t EpochFeatures::eye_seconds(EyeKind k) const noexcept {
  std::array<bool, kSeconds> hit{};
  for (const EyeEvent& e : eye_events) {
    if (e.kind != k) continue;
    const auto a = static_cast<std::size_t>(std::max(0.0, std::floor(e.t_start_s)));
    const auto b = static_cast<std::size_t>(std::min<double>(kSeconds, std::ceil(e.t_end_s)));
    for (std::size_t s = a; s < b; ++s) hit[s] = true;
  }
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
}

bool EpochFeatures::n2_onset_evidence() const noexcept {
  return std::any_of(transients.begin(), transients.end(), [](const TransientEvent& e) {
    const bool qualifies = e.kind == TransientKind::Spindle ||
                           (e.kind == TransientKind::KComplex && !e.arousal_associated);
    const bool placed = e.in_preceding_epoch ? e.t_start_s >= kHalfEpoch : e.t_start_s < kHalfEpoch;
    return qualifies && placed;
  });
}

bool EpochFeatures::has_sleep_transient() const noexcept {
  return count(TransientKind::Spindle) + count(TransientKind::KComplex) > 0;
}

std::vector<bool> alpha_seconds(const Epoch& epoch, const DetectorConfig& cfg) {
  std::vector<bool> out(kSeconds, false);
  const auto o2 = epoch.channel(Channel::O2M1);
  for (std::size_t s = 0; s < kSeconds; ++s) {
    const auto spec = dsp::hann_periodogram(second_of(o2, s), kFs);
    const double total = dsp::band_power(spec, kTotalBand);
    out[s] = total > 0.0 && dsp::band_power(spec, kAlphaBand) >= cfg.alpha_power_ratio * total;
  }
  return out;
}

double alpha_fraction(const Epoch& epoch, const DetectorConfig& cfg) {
  const auto flags = alpha_seconds(epoch, cfg);
  return static_cast<double>(std::count(flags.begin(), flags.end(), true)) / kSeconds;
}

double swa_fraction(const Epoch& epoch, const DetectorConfig& cfg) {
  const auto mask = swa_mask(epoch, cfg);
  const auto covered = std::count(mask.begin(), mask.end(), true);
  return std::min(1.0, static_cast<double>(covered) / static_cast<double>(mask.size()));
}

std::vector<TransientEvent> detect_transients(const Epoch& epoch, const Epoch* prev, const DetectorConfig& cfg) {
  const auto c4 = per_second_spectra(epoch.channel(Channel::C4M1));
  auto events = own_transients(epoch, artifact_with_spectra(epoch, c4, cfg), cfg);
  if (prev != nullptr) {
    const auto pc4 = per_second_spectra(prev->channel(Channel::C4M1));
    for (TransientEvent ev : own_transients(*prev, artifact_with_spectra(*prev, pc4, cfg), cfg)) {
      if (ev.t_start_s < kHalfEpoch || ev.kind == TransientKind::VertexSharp) continue;
      ev.in_preceding_epoch = true;
      events.push_back(ev);
    }
  }
  return events;
}

std::vector<EyeEvent> detect_eye_events(const Epoch& epoch, const DetectorConfig& cfg) {
  const auto loc = epoch.channel(Channel::LOC);
  const auto roc = epoch.channel(Channel::ROC);
  const std::size_t n = loc.size();
  const double bl = median(std::vector<double>(loc.begin(), loc.end()));
  const double br = median(std::vector<double>(roc.begin(), roc.end()));
  std::vector<double> dl(n), dr(n);
  for (std::size_t i = 0; i < n; ++i) {
    dl[i] = loc[i] - bl;
    dr[i] = roc[i] - br;
  }

  // Supra-threshold runs, widened to the dominant channel's baseline crossings.
  struct Window {
    std::size_t a, b;
  };
  std::vector<Window> windows;
  constexpr std::size_t kMergeGap = kSec / 10;
  std::size_t i = 0;
  while (i < n) {
    if (std::max(std::abs(dl[i]), std::abs(dr[i])) <= cfg.eye_deflection_uv) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double peak_l = 0.0, peak_r = 0.0;
    while (j < n && std::max(std::abs(dl[j]), std::abs(dr[j])) > cfg.eye_deflection_uv) {
      peak_l = std::max(peak_l, std::abs(dl[j]));
      peak_r = std::max(peak_r, std::abs(dr[j]));
      ++j;
    }
    const std::vector<double>& d = peak_l >= peak_r ? dl : dr;
    const bool positive = d[i] > 0.0;
    auto same_side = [&](std::size_t k) { return positive ? d[k] > 0.0 : d[k] < 0.0; };
    std::size_t a = i, b = j;
    while (a > 0 && same_side(a - 1)) --a;
    while (b < n && same_side(b)) ++b;
    // Windows separated by a few samples are the lobes of one movement (the
    // high-pass leaves opposite-polarity lobes on either side of a slow one).
    if (!windows.empty() && a <= windows.back().b + kMergeGap) {
      windows.back().b = std::max(windows.back().b, b);
    } else {
      windows.push_back({a, b});
    }
    i = j;
  }

  std::vector<EyeEvent> candidates;
  for (const Window& w : windows) {
    const std::size_t len = w.b - w.a;
    double ml = 0.0, mr = 0.0;
    for (std::size_t k = w.a; k < w.b; ++k) {
      ml += dl[k];
      mr += dr[k];
    }
    ml /= static_cast<double>(len);
    mr /= static_cast<double>(len);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    double peak = 0.0;
    std::size_t peak_at = w.a;
    for (std::size_t k = w.a; k < w.b; ++k) {
      sxy += (dl[k] - ml) * (dr[k] - mr);
      sxx += (dl[k] - ml) * (dl[k] - ml);
      syy += (dr[k] - mr) * (dr[k] - mr);
      const double m = std::max(std::abs(dl[k]), std::abs(dr[k]));
      if (m > peak) {
        peak = m;
        peak_at = k;
      }
    }
    const double corr = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
    EyeEvent ev;
    ev.t_start_s = static_cast<double>(w.a) / kFs;
    ev.t_end_s = static_cast<double>(w.b) / kFs;
    ev.correlation = corr;
    ev.initial_deflection_ms = static_cast<double>(peak_at - w.a) * 1000.0 / kFs;
    ev.amplitude_uv = peak;
    if (corr < -cfg.eye_correlation) {
      ev.kind = ev.initial_deflection_ms > cfg.sem_min_deflection_ms ? EyeKind::SEM : EyeKind::REM;
      candidates.push_back(ev);
    } else if (corr > cfg.eye_correlation) {
      ev.kind = EyeKind::Blink;
      candidates.push_back(ev);
    }
  }

  // Blinks must repeat at blink_min_hz..blink_max_hz.
  const double min_gap = 1.0 / cfg.blink_max_hz;
  const double max_gap = 1.0 / cfg.blink_min_hz;
  std::vector<EyeEvent> out;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const EyeEvent& ev = candidates[k];
    if (ev.kind != EyeKind::Blink) {
      out.push_back(ev);
      continue;
    }
    bool repeated = false;
    for (std::size_t m = 0; m < candidates.size() && !repeated; ++m) {
      if (m == k || candidates[m].kind != EyeKind::Blink) continue;
      const double gap = std::abs(candidates[m].t_start_s - ev.t_start_s);
      repeated = gap >= min_gap - 1e-9 && gap <= max_gap + 1e-9;
    }
    if (repeated) out.push_back(ev);
  }
  return out;
}

ChinTone chin_tone(const Epoch& epoch, const DetectorConfig& cfg) {
  std::vector<double> mavs(kSeconds);
  const auto chin = epoch.channel(Channel::Chin);
  for (std::size_t s = 0; s < kSeconds; ++s) mavs[s] = mav(second_of(chin, s));
  ChinTone t;
  t.mav_median_uv = median(mavs);
  t.low = t.mav_median_uv <= cfg.chin_low_uv;
  return t;
}

ArtifactResult detect_artifact(const Epoch& epoch, const DetectorConfig& cfg) {
  return artifact_with_spectra(epoch, per_second_spectra(epoch.channel(Channel::C4M1)), cfg);
}

EpochFeatures extract_epoch_features(const Epoch& epoch, const Epoch* prev, const DetectorConfig& cfg,
                                     double wake_baseline_hz) {
  EpochFeatures f;
  f.epoch_index = epoch.index();

  const auto c4 = per_second_spectra(epoch.channel(Channel::C4M1));
  const ArtifactResult art = artifact_with_spectra(epoch, c4, cfg);
  f.artifact_fraction = art.artifact_fraction;
  f.arousal_present = art.arousal_present;
  f.arousal_onsets_s = art.arousal_onsets_s;

  const auto alpha = alpha_seconds(epoch, cfg);
  f.alpha_fraction = static_cast<double>(std::count(alpha.begin(), alpha.end(), true)) / kSeconds;

  const auto swa = swa_mask(epoch, cfg);
  f.swa_fraction = static_cast<double>(std::count(swa.begin(), swa.end(), true)) / static_cast<double>(swa.size());

  f.transients = own_transients(epoch, art, cfg);
  if (prev != nullptr) {
    for (TransientEvent ev : detect_transients(*prev, nullptr, cfg)) {
      if (ev.t_start_s < kHalfEpoch || ev.kind == TransientKind::VertexSharp) continue;
      ev.in_preceding_epoch = true;
      f.transients.push_back(ev);
    }
  }
  f.eye_events = detect_eye_events(epoch, cfg);

  const ChinTone tone = chin_tone(epoch, cfg);
  f.chin_mav_median_uv = tone.mav_median_uv;
  f.chin_tone_low = tone.low;

  // LAMF seconds and dominant frequency, both from C4-M1.
  const auto c4x = epoch.channel(Channel::C4M1);
  std::size_t lamf = 0;
  std::vector<double> dominant;
  for (std::size_t s = 0; s < kSeconds; ++s) {
    if (art.artifact_seconds[s]) continue;
    const std::size_t k = dsp::peak_bin(c4[s], kTotalBand);
    if (k == static_cast<std::size_t>(-1)) continue;
    const double peak_hz = c4[s].freq(k);
    dominant.push_back(peak_hz);
    const auto covered = std::count(swa.begin() + static_cast<std::ptrdiff_t>(s * kSec),
                                    swa.begin() + static_cast<std::ptrdiff_t>((s + 1) * kSec), true);
    if (alpha[s] || 2 * static_cast<std::size_t>(covered) >= kSec) continue;
    const auto w = second_of(c4x, s);
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    if (peak_hz >= cfg.lamf_low_hz && peak_hz <= cfg.lamf_high_hz && *hi - *lo < cfg.lamf_max_p2p_uv) ++lamf;
  }
  f.lamf_fraction = static_cast<double>(lamf) / kSeconds;
  f.dominant_hz = median(dominant);
  f.theta_slowing = f.dominant_hz >= cfg.theta_low_hz && f.dominant_hz <= cfg.theta_high_hz &&
                    (wake_baseline_hz <= 0.0 || f.dominant_hz <= wake_baseline_hz - cfg.slowing_min_hz);
  return f;
}

std::vector<EpochFeatures> extract_recording_features(const std::vector<Epoch>& epochs, const DetectorConfig& cfg,
                                                      double wake_baseline_hz) {
  std::vector<EpochFeatures> out;
  out.reserve(epochs.size());
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    out.push_back(extract_epoch_features(epochs[i], i > 0 ? &epochs[i - 1] : nullptr, cfg, wake_baseline_hz));
  }
  return out;
}

}  // namespace psgkit::features
