#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psgkit/signal.hpp"

namespace psgkit::render {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
  friend auto operator<=>(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kBlack{0, 0, 0};

struct RenderConfig {
  int width = 448;
  int height = 224;
  // Montage order: yellow, green, red, cyan, magenta, blue.
  std::array<Rgb, kChannelCount> colors = {{{255, 255, 0},
                                            {0, 255, 0},
                                            {255, 0, 0},
                                            {0, 255, 255},
                                            {255, 0, 255},
                                            {0, 0, 255}}};
  double eeg_eog_scale_uv = 50.0;  // ± half-lane
  double chin_scale_uv = 40.0;
  bool grid = true;
  Rgb grid_1s{64, 64, 64};    // 25% luminance
  Rgb grid_5s{128, 128, 128}; // 50%
  bool antialias = false;

  double scale_for(Channel c) const noexcept {
    return c == Channel::Chin ? chin_scale_uv : eeg_eog_scale_uv;
  }
};

struct EpochImage {
  int width = 0;
  int height = 0;
  std::size_t epoch_index = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb at(int x, int y) const {
    const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }

  friend bool operator==(const EpochImage&, const EpochImage&) = default;
};

// Lane i spans rows [lane_top(i), lane_top(i+1)); lane_top(6) == height.
int lane_top(int lane, int height) noexcept;

// Continuous y coordinate of `value_uv` on `channel`'s lane (not clipped).
double trace_y(Channel channel, double value_uv, const RenderConfig& cfg) noexcept;

// Pixel row for a continuous y coordinate.
int row_of(double y) noexcept;

// x position of the 1-s grid line at second t (1..29).
int grid_x(int t, int width) noexcept;

EpochImage render_epoch(const Epoch& epoch, const RenderConfig& cfg = {});

// Renders prev/cur/next. Throws SequenceError unless the indices are
// consecutive and the center is not the recording's first epoch.
std::array<EpochImage, 3> render_triplet(const Epoch& prev, const Epoch& cur, const Epoch& next,
                                         const RenderConfig& cfg = {});

// 8-bit RGB PNG without timestamps, so encoding is byte-stable.
std::vector<std::uint8_t> encode_png(const EpochImage& image);
void write_png(const EpochImage& image, const std::filesystem::path& path);

// `<subject>_<epoch:05>.png`
std::string image_filename(const std::string& subject_id, std::size_t epoch_index);

}  // namespace psgkit::render
