#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psgkit/descriptors.hpp"
#include "psgkit/rule_engine.hpp"
#include "psgkit/stage.hpp"

namespace psgkit::corpus {

// fine: stage + rules + rationale; coarse: stage + rules only.
enum class Track { Fine, Coarse };
std::string_view to_string(Track t) noexcept;
Track parse_track(std::string_view s);  // throws TrackError

// One expert-style annotation of an epoch, in the interchange record shape.
struct AnnotationRecord {
  std::string subject_id;
  std::size_t epoch_index = 0;
  Stage sleep_stage = Stage::W;
  std::vector<RuleId> applicable_rules;
  std::optional<std::string> reasoning_text;  // present iff fine

  Track track() const noexcept { return reasoning_text ? Track::Fine : Track::Coarse; }
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Fine records from staging decisions (rationale kept) or coarse ones (dropped).
// Fallback decisions carry no rule and are skipped.
std::vector<AnnotationRecord> annotations_from_decisions(const std::string& subject_id,
                                                         const std::vector<rules::StageDecision>& decisions,
                                                         Track track);

std::string annotation_json(const AnnotationRecord& r);
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);
// Throws ParseError (1-based line) on malformed JSON, unknown stage or rule,
// empty rule list or missing fields.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl);

struct TrainingSample {
  int phase = 1;
  std::string subject_id;
  std::size_t epoch_index = 0;
  std::optional<Track> track;  // phase 2 only
  std::string system_prompt;
  std::string prompt_sha256;
  std::vector<std::string> image_paths;  // 1 (phase 1) or prev/cur/next (phase 2)
  std::string target;                    // single-line JSON
};

// Prompt text assembled from the bundled resources.
std::string phase1_prompt();
std::string phase2_prompt(Track track);

TrainingSample build_phase1_sample(const Epoch& epoch, const descriptors::DescriptorFrame& frame,
                                   const std::string& subject_id, const std::string& image_path);

// Throws TrackError when a fine sample is requested for a coarse annotation.
TrainingSample build_phase2_sample(const std::array<std::string, 3>& triplet_images,
                                   const AnnotationRecord& annotation, Track track);

std::string phase2_target(const AnnotationRecord& annotation, Track track);

// One JSON object per line: phase, subject_id, epoch_index, [track],
// prompt_sha256, system_prompt, images, target.
std::string sample_json(const TrainingSample& s);

}  // namespace psgkit::corpus
