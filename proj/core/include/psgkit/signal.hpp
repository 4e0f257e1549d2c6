#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psgkit/montage.hpp"

namespace psgkit {

// One montage channel: samples in μV at a fixed rate.
struct ChannelSignal {
  Channel channel = Channel::F4M1;
  std::vector<double> samples;
  double sample_rate_hz = kTargetRateHz;

  ChannelKind kind() const noexcept { return kind_of(channel); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// A subject's six-channel recording. channels[i] always holds kMontage[i].
struct Recording {
  std::string subject_id;
  std::array<ChannelSignal, kChannelCount> channels;
  double source_rate_hz = kTargetRateHz;

  const ChannelSignal& operator[](Channel c) const { return channels[index_of(c)]; }
  ChannelSignal& operator[](Channel c) { return channels[index_of(c)]; }

  std::size_t samples_per_channel() const noexcept { return channels[0].samples.size(); }
  double duration_s() const noexcept { return channels[0].duration_s(); }
};

// A 30-s, 100 Hz, six-channel window. Storage is channel-major, 6 x 3000.
class Epoch {
 public:
  Epoch() : data_(kChannelCount * kSamplesPerEpoch, 0.0) {}
  explicit Epoch(std::size_t index) : Epoch() { index_ = index; }

  std::size_t index() const noexcept { return index_; }
  void set_index(std::size_t i) noexcept { index_ = i; }
  double start_s() const noexcept { return static_cast<double>(index_) * kEpochSeconds; }

  std::span<const double> channel(Channel c) const {
    return {data_.data() + index_of(c) * kSamplesPerEpoch, kSamplesPerEpoch};
  }
  std::span<double> channel(Channel c) {
    return {data_.data() + index_of(c) * kSamplesPerEpoch, kSamplesPerEpoch};
  }

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Epoch&, const Epoch&) = default;

 private:
  std::size_t index_ = 0;
  std::vector<double> data_;
};

}  // namespace psgkit
