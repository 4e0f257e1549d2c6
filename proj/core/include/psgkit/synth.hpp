#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psgkit/signal.hpp"

namespace psgkit::synth {

enum class Waveform {
  Sine,          // A sin(2 pi f t + phase)
  SpindleBurst,  // sine under a Tukey(0.25) envelope
  KComplex,      // one negative-first cycle lasting `duration`; p-p = 2A
  SlowWave,      // negative-first sine train at f; p-p = 2A
  Blink,         // train of 0.3-s raised-cosine bumps repeating at f
  SEM,           // one raised-cosine excursion over `duration`, peak at duration/2
  REM,           // 0.15-s rise to A, raised-cosine return over the rest
  Noise,         // deterministic multi-sine in [f, freq_hi] with RMS = A
  Artifact,      // like Noise, broadband defaults per channel kind
};

std::string_view to_string(Waveform w) noexcept;
Waveform parse_waveform(std::string_view s);  // throws SpecError

// One additive waveform placed on a channel. Times are seconds relative to
// the epoch start; amplitudes are μV.
struct Component {
  Channel channel = Channel::F4M1;
  Waveform kind = Waveform::Sine;
  double t_start_s = 0.0;
  double duration_s = kEpochSeconds;
  double frequency_hz = 10.0;
  double amplitude_uv = 0.0;
  double freq_hi_hz = 0.0;  // Noise/Artifact upper edge; 0 selects the default
  double phase_rad = 0.0;   // Sine only
};

struct EpochSpec {
  std::vector<Component> components;
  std::uint64_t seed = 0;
};

// Throws SpecError if a component leaves [0, 30) s or has bad parameters.
void validate(const EpochSpec& spec);

// Sums the components per channel at 100 Hz. Deterministic in (spec, seed).
Epoch synthesize_epoch(const EpochSpec& spec, std::size_t index = 0);

// Evaluates one component into `out` (a channel buffer sampled at fs_hz whose
// first sample is at time `offset_s` relative to the component's epoch).
// `salt` differentiates noise realizations.
void add_component(std::span<double> out, double fs_hz, double offset_s, const Component& c,
                   std::uint64_t seed, std::uint64_t salt);

// Renders a sequence of epoch specs contiguously at an arbitrary rate.
Recording synthesize_recording(const std::vector<EpochSpec>& epochs, double fs_hz,
                               const std::string& subject_id);

}  // namespace psgkit::synth
