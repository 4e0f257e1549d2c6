#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "psgkit/signal.hpp"

namespace psgkit::features {

// Detector thresholds. Defaults are the reference behavior; every one is
// exposed because the scoring manual defines the events only qualitatively.
struct DetectorConfig {
  // alpha rhythm (O2-M1)
  double alpha_power_ratio = 0.5;

  // spindles (C4-M1)
  double spindle_low_hz = 11.0;
  double spindle_high_hz = 16.0;
  double spindle_rms_window_s = 0.25;
  double spindle_min_envelope_uv = 10.0;
  double spindle_median_factor = 2.0;
  double spindle_min_duration_s = 0.5;

  // K-complexes (F4-M1) and vertex sharp waves (C4-M1)
  double kc_lowpass_hz = 4.0;
  double kc_min_duration_s = 0.5;
  double kc_max_duration_s = 2.0;
  double kc_min_p2p_uv = 75.0;
  double kc_arousal_window_s = 1.0;
  double vertex_lowpass_hz = 8.0;
  double vertex_min_duration_s = 0.1;
  double vertex_max_duration_s = 0.5;
  double vertex_min_p2p_uv = 40.0;
  // A biphasic wave is a transient only if the half-waves on either side stay
  // below this fraction of its own extremes (otherwise it belongs to a train).
  double isolation_ratio = 0.5;

  // slow wave activity (F4-M1)
  double swa_low_hz = 0.5;
  double swa_high_hz = 2.0;
  double swa_min_p2p_uv = 75.0;

  // eye movements (LOC/ROC)
  double eye_deflection_uv = 25.0;
  double eye_correlation = 0.5;
  double sem_min_deflection_ms = 500.0;
  double blink_min_hz = 0.5;
  double blink_max_hz = 2.0;

  // chin
  double chin_low_uv = 5.0;

  // artifact and arousal
  double artifact_uv = 50.0;
  double artifact_sample_fraction = 0.25;
  double artifact_chin_mav_uv = 30.0;
  double arousal_power_ratio = 0.6;
  double arousal_min_s = 3.0;
  double arousal_quiet_s = 10.0;

  // LAMF and theta slowing
  double lamf_low_hz = 2.0;
  double lamf_high_hz = 7.0;
  double lamf_max_p2p_uv = 75.0;
  double theta_low_hz = 4.0;
  double theta_high_hz = 7.0;
  double slowing_min_hz = 1.0;
};

enum class TransientKind { Spindle, KComplex, VertexSharp };
std::string_view to_string(TransientKind k) noexcept;

struct TransientEvent {
  TransientKind kind = TransientKind::Spindle;
  Channel channel = Channel::C4M1;
  double t_start_s = 0.0;  // relative to the epoch the event was found in
  double t_end_s = 0.0;
  double peak_to_peak_uv = 0.0;
  bool arousal_associated = false;
  bool in_preceding_epoch = false;  // found in the preceding epoch's last half
};

enum class EyeKind { Blink, SEM, REM };
std::string_view to_string(EyeKind k) noexcept;

struct EyeEvent {
  EyeKind kind = EyeKind::Blink;
  double t_start_s = 0.0;
  double t_end_s = 0.0;
  double correlation = 0.0;  // LOC vs ROC over the event window
  double initial_deflection_ms = 0.0;
  double amplitude_uv = 0.0;  // largest deviation from baseline
};

struct ArtifactResult {
  double artifact_fraction = 0.0;
  bool arousal_present = false;
  std::vector<double> arousal_onsets_s;
  std::vector<bool> artifact_seconds;  // 30 entries
};

struct ChinTone {
  double mav_median_uv = 0.0;
  bool low = true;
};

struct EpochFeatures {
  std::size_t epoch_index = 0;
  double alpha_fraction = 0.0;
  double lamf_fraction = 0.0;
  double dominant_hz = 0.0;  // median per-second C4-M1 peak frequency
  bool theta_slowing = false;
  std::vector<TransientEvent> transients;
  double swa_fraction = 0.0;
  std::vector<EyeEvent> eye_events;
  double chin_mav_median_uv = 0.0;
  bool chin_tone_low = true;
  double artifact_fraction = 0.0;
  bool arousal_present = false;
  std::vector<double> arousal_onsets_s;

  std::size_t count(TransientKind k, bool include_preceding = false) const noexcept;
  std::size_t count(EyeKind k) const noexcept;
  // Seconds (0..30) touched by eye events of kind k.
  std::size_t eye_seconds(EyeKind k) const noexcept;
  // Spindle or non-arousal K-complex in this epoch's first half or the
  // preceding epoch's last half.
  bool n2_onset_evidence() const noexcept;
  // Any spindle or K-complex in this epoch.
  bool has_sleep_transient() const noexcept;
};

double alpha_fraction(const Epoch& epoch, const DetectorConfig& cfg = {});

// Per-second flags: O2-M1 alpha power >= ratio * total 0.3-30 Hz power.
std::vector<bool> alpha_seconds(const Epoch& epoch, const DetectorConfig& cfg = {});

double swa_fraction(const Epoch& epoch, const DetectorConfig& cfg = {});

// Transients in `epoch`, plus (when `prev` is given) those found in the last
// 15 s of the preceding epoch, flagged in_preceding_epoch. K-complexes are
// marked arousal-associated when an arousal onset lies within the window.
std::vector<TransientEvent> detect_transients(const Epoch& epoch, const Epoch* prev = nullptr,
                                              const DetectorConfig& cfg = {});

std::vector<EyeEvent> detect_eye_events(const Epoch& epoch, const DetectorConfig& cfg = {});

ChinTone chin_tone(const Epoch& epoch, const DetectorConfig& cfg = {});

ArtifactResult detect_artifact(const Epoch& epoch, const DetectorConfig& cfg = {});

// All of the above. `wake_baseline_hz`, when positive, is the subject's
// waking dominant frequency used by the theta-slowing test.
EpochFeatures extract_epoch_features(const Epoch& epoch, const Epoch* prev = nullptr,
                                     const DetectorConfig& cfg = {}, double wake_baseline_hz = 0.0);

std::vector<EpochFeatures> extract_recording_features(const std::vector<Epoch>& epochs,
                                                      const DetectorConfig& cfg = {},
                                                      double wake_baseline_hz = 0.0);

}  // namespace psgkit::features
