#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "psgkit/stage.hpp"

namespace psgkit::ratings {

inline constexpr int kMinScore = 0;
inline constexpr int kMaxScore = 5;
inline constexpr std::size_t kDimensions = 3;

// One epoch queued for expert review: its triplet images and model output.
struct SessionSample {
  std::string sample_id;
  std::string subject_id;
  std::size_t epoch_index = 0;
  std::array<std::string, 3> images;  // prev, cur, next; relative to the session file
  Stage stage = Stage::W;
  std::vector<RuleId> rules;
  std::string rationale;

  friend bool operator==(const SessionSample&, const SessionSample&) = default;
};

struct Session {
  std::vector<SessionSample> samples;

  const SessionSample* find(const std::string& sample_id) const;
};

std::string session_json(const Session& s);
void write_session(const std::filesystem::path& path, const Session& s);
Session load_session(const std::filesystem::path& path);  // throws FormatError / IoError

struct Rating {
  std::string sample_id;
  std::string rater;
  std::array<int, kDimensions> scores{};
  std::string timestamp;  // UTC, ISO 8601

  friend bool operator==(const Rating&, const Rating&) = default;
};

std::string rating_json(const Rating& r);  // {sample_id, rater, dim1, dim2, dim3, timestamp}

// Outcome of checking a submitted body against the session.
struct Submission {
  std::optional<Rating> rating;
  std::string error;
};

// Body {sample_id, rater, scores: [d1, d2, d3]}; every score an integer in
// 0..5 and the sample known to the session. Timestamp is filled in here.
Submission parse_submission(const std::string& body, const Session& session);

std::string utc_timestamp();

// Append-only JSONL store. Appends are serialized; readers get an immutable
// snapshot and never block writers for long.
class RatingStore {
 public:
  explicit RatingStore(std::filesystem::path path);  // loads existing records; ParseError on bad lines

  enum class AppendResult { Stored, Duplicate };
  AppendResult append(const Rating& r);

  std::shared_ptr<const std::vector<Rating>> snapshot() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::shared_ptr<const std::vector<Rating>> records_;
};

// First session sample the rater has not scored, in session order.
const SessionSample* next_unrated(const Session& session, const std::vector<Rating>& ratings,
                                  const std::string& rater);

struct DimensionSummary {
  std::string key;
  std::string name;
  std::array<std::size_t, kMaxScore + 1> histogram{};
  std::size_t n = 0;
  double mean = 0.0;  // 0 when n == 0
};

struct Summary {
  std::size_t total_samples = 0;
  std::size_t ratings = 0;
  std::size_t rated_samples = 0;  // samples with at least one rating
  std::array<DimensionSummary, kDimensions> dimensions;
};

// Pure fold over the store.
Summary summarize(const Session& session, const std::vector<Rating>& ratings);
std::string summary_json(const Summary& s);

// Rubric resource (names and anchored score descriptions per dimension).
std::string rubric_json();

}  // namespace psgkit::ratings
