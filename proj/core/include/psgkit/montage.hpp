#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace psgkit {

// The six-channel adult staging montage, in display/storage order.
enum class Channel : std::uint8_t { F4M1 = 0, C4M1, O2M1, LOC, ROC, Chin };

enum class ChannelKind : std::uint8_t { EEG, EOG, EMG };

inline constexpr std::size_t kChannelCount = 6;

inline constexpr std::array<Channel, kChannelCount> kMontage = {
    Channel::F4M1, Channel::C4M1, Channel::O2M1,
    Channel::LOC,  Channel::ROC,  Channel::Chin};

inline constexpr int kTargetRateHz = 100;
inline constexpr int kEpochSeconds = 30;
inline constexpr std::size_t kSamplesPerEpoch = kTargetRateHz * kEpochSeconds;

constexpr std::size_t index_of(Channel c) noexcept { return static_cast<std::size_t>(c); }

constexpr std::string_view label(Channel c) noexcept {
  switch (c) {
    case Channel::F4M1: return "F4-M1";
    case Channel::C4M1: return "C4-M1";
    case Channel::O2M1: return "O2-M1";
    case Channel::LOC: return "LOC";
    case Channel::ROC: return "ROC";
    case Channel::Chin: return "Chin";
  }
  return "?";
}

constexpr ChannelKind kind_of(Channel c) noexcept {
  switch (c) {
    case Channel::F4M1:
    case Channel::C4M1:
    case Channel::O2M1: return ChannelKind::EEG;
    case Channel::LOC:
    case Channel::ROC: return ChannelKind::EOG;
    case Channel::Chin: return ChannelKind::EMG;
  }
  return ChannelKind::EEG;
}

constexpr std::optional<Channel> channel_from_label(std::string_view s) noexcept {
  for (Channel c : kMontage) {
    if (label(c) == s) return c;
  }
  return std::nullopt;
}

constexpr std::string_view kind_name(ChannelKind k) noexcept {
  switch (k) {
    case ChannelKind::EEG: return "EEG";
    case ChannelKind::EOG: return "EOG";
    case ChannelKind::EMG: return "EMG";
  }
  return "?";
}

}  // namespace psgkit
