#include "psgkit/descriptors.hpp"

#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"

namespace psgkit::descriptors {

namespace {

void check_window(std::span<const double> window) {
  if (window.size() != kWindowSamples) {
    throw WindowError("band power needs a " + std::to_string(kWindowSamples) +
                      "-sample window, got " + std::to_string(window.size()));
  }
}

void append_number(std::string& out, double v) {
  v = round1(v);
  if (v == 0.0) v = 0.0;  // drop the sign of -0.0
  fmt::format_to(std::back_inserter(out), "{:.1f}", v);
}

}  // namespace

double band_power(std::span<const double> window, const BandDef& band) {
  check_window(window);
  const dsp::Spectrum s = dsp::hann_periodogram(window, kTargetRateHz);
  return dsp::band_power(s, band.band());
}

double band_power_db(std::span<const double> window, const BandDef& band) {
  const double p = band_power(window, band);
  return std::max(kPowerFloorDb, 10.0 * std::log10(p + kPowerEpsilon));
}

double mav(std::span<const double> window) {
  if (window.empty()) throw WindowError("MAV of an empty window");
  double sum = 0.0;
  for (double v : window) sum += std::abs(v);
  return sum / static_cast<double>(window.size());
}

double round1(double v) noexcept { return std::round(v * 10.0) / 10.0; }

DescriptorFrame epoch_descriptors_raw(const Epoch& epoch) {
  DescriptorFrame frame;
  frame.present.fill(true);
  for (std::size_t ci = 0; ci < kBandChannels; ++ci) {
    const auto samples = epoch.channel(kMontage[ci]);
    for (std::size_t s = 0; s < kSeconds; ++s) {
      const auto window = samples.subspan(s * kWindowSamples, kWindowSamples);
      const dsp::Spectrum spec = dsp::hann_periodogram(window, kTargetRateHz);
      BandRow& row = frame.rows[ci][s];
      for (std::size_t b = 0; b < kBands.size(); ++b) {
        const double p = dsp::band_power(spec, kBands[b].band());
        row[b] = std::max(kPowerFloorDb, 10.0 * std::log10(p + kPowerEpsilon));
      }
      row[4] = mav(window);
    }
  }
  const auto chin = epoch.channel(Channel::Chin);
  for (std::size_t s = 0; s < kSeconds; ++s) {
    frame.chin_mav[s] = mav(chin.subspan(s * kWindowSamples, kWindowSamples));
  }
  return frame;
}

DescriptorFrame rounded(const DescriptorFrame& frame) {
  DescriptorFrame out = frame;
  for (auto& channel : out.rows) {
    for (auto& row : channel) {
      for (double& v : row) v = round1(v);
    }
  }
  for (double& v : out.chin_mav) v = round1(v);
  return out;
}

DescriptorFrame epoch_descriptors(const Epoch& epoch) { return rounded(epoch_descriptors_raw(epoch)); }

std::string serialize_phase1_target(const DescriptorFrame& frame) {
  std::string out = "{";
  bool first_channel = true;
  for (std::size_t ci = 0; ci < kChannelCount; ++ci) {
    if (!frame.present[ci]) continue;
    if (!first_channel) out += ',';
    first_channel = false;
    out += '"';
    out += label(kMontage[ci]);
    out += "\":[";
    for (std::size_t s = 0; s < kSeconds; ++s) {
      if (s) out += ',';
      out += '[';
      if (kMontage[ci] == Channel::Chin) {
        append_number(out, frame.chin_mav[s]);
      } else {
        const BandRow& row = frame.rows[ci][s];
        for (std::size_t k = 0; k < row.size(); ++k) {
          if (k) out += ',';
          append_number(out, row[k]);
        }
      }
      out += ']';
    }
    out += ']';
  }
  out += '}';
  return out;
}

DescriptorFrame parse_phase1_target(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("phase-1 target is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("phase-1 target must be a JSON object");
  DescriptorFrame frame;
  for (const auto& [key, value] : j.items()) {
    const auto ch = channel_from_label(key);
    if (!ch) throw FormatError("unknown channel key \"" + key + "\"");
    const std::size_t ci = index_of(*ch);
    const std::size_t width = (*ch == Channel::Chin) ? 1 : 5;
    if (!value.is_array() || value.size() != kSeconds) {
      throw FormatError(key + ": expected 30 rows");
    }
    for (std::size_t s = 0; s < kSeconds; ++s) {
      const auto& row = value[s];
      if (!row.is_array() || row.size() != width) {
        throw FormatError(key + ": row " + std::to_string(s) + " must hold " +
                          std::to_string(width) + " values");
      }
      for (std::size_t k = 0; k < width; ++k) {
        if (!row[k].is_number()) throw FormatError(key + ": non-numeric value");
        const double v = row[k].get<double>();
        if (*ch == Channel::Chin) {
          frame.chin_mav[s] = v;
        } else {
          frame.rows[ci][s][k] = v;
        }
      }
    }
    frame.present[ci] = true;
  }
  return frame;
}

}  // namespace psgkit::descriptors
