#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "psgkit/dsp/psd.hpp"
#include "psgkit/signal.hpp"

namespace psgkit::descriptors {

enum class BandName { Delta, Theta, Alpha, Beta };

struct BandDef {
  BandName name;
  double low_hz;
  double high_hz;

  // Shared edges go to the lower band: only delta includes its low edge.
  dsp::Band band() const noexcept { return {low_hz, high_hz, name == BandName::Delta}; }
};

inline constexpr std::array<BandDef, 4> kBands = {{
    {BandName::Delta, 0.3, 4.0},
    {BandName::Theta, 4.0, 8.0},
    {BandName::Alpha, 8.0, 13.0},
    {BandName::Beta, 13.0, 30.0},
}};

inline constexpr std::size_t kWindowSamples = kTargetRateHz;  // 1 s at 100 Hz
inline constexpr std::size_t kSeconds = kEpochSeconds;
inline constexpr double kPowerEpsilon = 1e-10;  // μV², added before log10
inline constexpr double kPowerFloorDb = -100.0;

// Linear band power (μV²) of a 1-s window. Throws WindowError unless the
// window holds exactly 100 samples.
double band_power(std::span<const double> window, const BandDef& band);

// 10 log10(power + eps), clamped at the -100 dB floor.
double band_power_db(std::span<const double> window, const BandDef& band);

// Mean absolute value; throws WindowError on an empty window.
double mav(std::span<const double> window);

// Round half away from zero to one decimal.
double round1(double v) noexcept;

// [delta, theta, alpha, beta] in dB followed by MAV in μV.
using BandRow = std::array<double, 5>;

inline constexpr std::size_t kBandChannels = 5;  // F4-M1, C4-M1, O2-M1, LOC, ROC

struct DescriptorFrame {
  std::array<bool, kChannelCount> present{};
  std::array<std::array<BandRow, kSeconds>, kBandChannels> rows{};
  std::array<double, kSeconds> chin_mav{};

  friend bool operator==(const DescriptorFrame&, const DescriptorFrame&) = default;
};

// Unrounded per-second descriptors for all six channels.
DescriptorFrame epoch_descriptors_raw(const Epoch& epoch);

// Same, rounded to one decimal.
DescriptorFrame epoch_descriptors(const Epoch& epoch);

DescriptorFrame rounded(const DescriptorFrame& frame);

// Phase-1 target JSON (single line). Keys in montage order; absent channels
// omitted; every number printed with exactly one fractional digit.
std::string serialize_phase1_target(const DescriptorFrame& frame);

// Parses a Phase-1 target; throws FormatError on schema violations.
DescriptorFrame parse_phase1_target(std::string_view text);

}  // namespace psgkit::descriptors
