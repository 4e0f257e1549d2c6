#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace psgkit::service {

struct ServiceOptions {
  std::filesystem::path session_path;
  std::filesystem::path store_path;
  std::optional<std::filesystem::path> ui_dir;  // static files for the browser UI
};

// HTTP backend for expert rating sessions:
//   GET  /api/session/next?rater=<id>   next unrated sample or {"complete": true}
//   GET  /api/image/<sample_id>/<0|1|2> triplet PNGs
//   POST /api/rating                    201 stored, 422 invalid, 409 duplicate
//   GET  /api/summary                   per-dimension histograms and means
//   GET  /api/rubric                    rubric definitions
class RatingService {
 public:
  explicit RatingService(const ServiceOptions& options);
  ~RatingService();
  RatingService(const RatingService&) = delete;
  RatingService& operator=(const RatingService&) = delete;

  // Binds and serves until stop(); returns false if the bind fails.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it (or -1); call serve() after.
  int bind_any_port(const std::string& host);
  bool serve();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace psgkit::service
