#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psgkit/dsp/filters.hpp"
#include "psgkit/signal.hpp"

namespace psgkit::io {

// Signal conditioning parameters. Defaults reproduce the reference pipeline:
// 4th-order zero-phase Butterworth band-passes, a Q=20 mains notch, 100 Hz output.
struct ConditioningConfig {
  double eeg_eog_low_hz = 0.3;
  double eeg_eog_high_hz = 35.0;
  double emg_low_hz = 10.0;
  double emg_high_hz = 100.0;
  int filter_order = 4;
  double notch_hz = 50.0;  // 60 for North American recordings
  double notch_q = 20.0;
  int target_rate_hz = kTargetRateHz;

  // Throws ConfigError when a band is inverted or the notch lies outside
  // (0, Nyquist) of `source_rate_hz`.
  void validate(double source_rate_hz) const;
};

// Maps source channel names to montage labels, e.g. {"EEG C4-A1": "C4-M1"}.
struct ChannelManifest {
  std::map<std::string, std::string> source_to_label;
  // Needed for CSV input, which carries no rate; ignored for JSON sidecars.
  std::optional<double> sample_rate_hz;

  static ChannelManifest identity();
  static ChannelManifest from_json_file(const std::filesystem::path& path);
};

// Reads a recording from either container:
//  * a JSON sidecar (`.json`) of the form
//      {"subject_id": "...", "sample_rate_hz": 256,
//       "channels": {"<source name>": "<file.f32>", ...}}
//    with one little-endian float32 file per channel, relative to the sidecar;
//  * a CSV (`.csv`) whose header row names the source channels, one sample
//    row per line; the rate comes from the manifest.
// Channels of unequal length are truncated to the shortest.
Recording load_recording(const std::filesystem::path& path, const ChannelManifest& manifest);

// Writes `rec` as a JSON sidecar plus float32 channel files into `dir`,
// using the montage labels as source names. Returns the sidecar path.
std::filesystem::path write_recording(const Recording& rec, const std::filesystem::path& dir);

// Band-pass by channel kind, then notch, both forward-backward.
ChannelSignal condition_channel(const ChannelSignal& signal, const ConditioningConfig& cfg);

// Rational polyphase resampling (Kaiser-windowed sinc, even-reflection edges).
ChannelSignal resample_signal(const ChannelSignal& signal, int target_hz);

// condition_channel followed by resample_signal for all six channels.
Recording condition_recording(const Recording& rec, const ConditioningConfig& cfg);

// Cuts a 100 Hz recording into non-overlapping 30-s epochs; a trailing
// partial window is dropped.
std::vector<Epoch> segment_epochs(const Recording& rec);

// Inverse of segment_epochs for whole-epoch recordings.
Recording concatenate_epochs(const std::vector<Epoch>& epochs, const std::string& subject_id);

}  // namespace psgkit::io
