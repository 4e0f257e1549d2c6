#include "psgkit/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <fstream>

#include <fmt/format.h>
#include <png.h>

#include "psgkit/errors.hpp"

namespace psgkit::render {

namespace {

constexpr int kLanes = static_cast<int>(kChannelCount);

void put(EpochImage& img, int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) + static_cast<std::size_t>(x)) * 3;
  img.rgb[i] = c.r;
  img.rgb[i + 1] = c.g;
  img.rgb[i + 2] = c.b;
}

void blend(EpochImage& img, int x, int y, Rgb c, double alpha) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  const Rgb under = img.at(x, y);
  auto mix = [alpha](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround(alpha * b + (1.0 - alpha) * a));
  };
  put(img, x, y, {mix(under.r, c.r), mix(under.g, c.g), mix(under.b, c.b)});
}

void draw_grid(EpochImage& img, const RenderConfig& cfg) {
  for (int t = 1; t < kEpochSeconds; ++t) {
    const int x = grid_x(t, img.width);
    const Rgb c = (t % 5 == 0) ? cfg.grid_5s : cfg.grid_1s;
    for (int y = 0; y < img.height; ++y) put(img, x, y, c);
  }
}

void draw_trace(EpochImage& img, Channel ch, std::span<const double> samples, const RenderConfig& cfg) {
  const Rgb color = cfg.colors[index_of(ch)];
  const std::size_t n = samples.size();
  const auto w = static_cast<std::size_t>(img.width);
  double prev_last = 0.0;
  bool have_prev = false;
  for (std::size_t x = 0; x < w; ++x) {
    // Samples whose time falls inside column x.
    const std::size_t i0 = (x * n + w - 1) / w;
    const std::size_t i1 = std::min(n, ((x + 1) * n + w - 1) / w);
    if (i0 >= i1) continue;
    double lo = trace_y(ch, samples[i0], cfg);
    double hi = lo;
    for (std::size_t i = i0 + 1; i < i1; ++i) {
      const double y = trace_y(ch, samples[i], cfg);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
    if (have_prev) {
      lo = std::min(lo, prev_last);
      hi = std::max(hi, prev_last);
    }
    prev_last = trace_y(ch, samples[i1 - 1], cfg);
    have_prev = true;

    const int r0 = row_of(lo);
    const int r1 = row_of(hi);
    const int col = static_cast<int>(x);
    if (!cfg.antialias) {
      for (int r = std::max(r0, 0); r <= std::min(r1, img.height - 1); ++r) put(img, col, r, color);
      continue;
    }
    // Fractional coverage on the end rows, full intensity in between.
    for (int r = std::max(r0, 0); r <= std::min(r1, img.height - 1); ++r) {
      double cover = 1.0;
      if (r0 != r1) {
        if (r == r0) cover = static_cast<double>(r0 + 1) - lo;
        if (r == r1) cover = hi - static_cast<double>(r1);
      }
      blend(img, col, r, color, std::clamp(cover, 0.25, 1.0));
    }
  }
}

}  // namespace

int lane_top(int lane, int height) noexcept {
  return static_cast<int>(std::lround(static_cast<double>(lane) * height / kLanes));
}

double trace_y(Channel channel, double value_uv, const RenderConfig& cfg) noexcept {
  const double lane_h = static_cast<double>(cfg.height) / kLanes;
  const double center = (static_cast<double>(index_of(channel)) + 0.5) * lane_h;
  return center - value_uv / cfg.scale_for(channel) * (lane_h / 2.0);
}

int row_of(double y) noexcept { return static_cast<int>(std::floor(y)); }

int grid_x(int t, int width) noexcept {
  return static_cast<int>(std::lround(static_cast<double>(t) * width / kEpochSeconds));
}

EpochImage render_epoch(const Epoch& epoch, const RenderConfig& cfg) {
  if (cfg.width <= 0 || cfg.height <= 0) throw ConfigError("image dimensions must be positive");
  EpochImage img;
  img.width = cfg.width;
  img.height = cfg.height;
  img.epoch_index = epoch.index();
  img.rgb.assign(static_cast<std::size_t>(cfg.width) * static_cast<std::size_t>(cfg.height) * 3, 0);
  if (cfg.grid) draw_grid(img, cfg);
  for (Channel c : kMontage) draw_trace(img, c, epoch.channel(c), cfg);
  return img;
}

std::array<EpochImage, 3> render_triplet(const Epoch& prev, const Epoch& cur, const Epoch& next,
                                         const RenderConfig& cfg) {
  if (cur.index() == 0) throw SequenceError("the first epoch cannot be a triplet center");
  if (prev.index() + 1 != cur.index() || cur.index() + 1 != next.index()) {
    throw SequenceError(fmt::format("triplet indices {}, {}, {} are not consecutive", prev.index(),
                                    cur.index(), next.index()));
  }
  return {render_epoch(prev, cfg), render_epoch(cur, cfg), render_epoch(next, cfg)};
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const EpochImage& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const EpochImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write on " + path.string());
}

std::string image_filename(const std::string& subject_id, std::size_t epoch_index) {
  return fmt::format("{}_{:05}.png", subject_id, epoch_index);
}

}  // namespace psgkit::render
