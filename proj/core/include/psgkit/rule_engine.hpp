#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psgkit/features.hpp"
#include "psgkit/stage.hpp"

namespace psgkit::rules {

// Everything the scorer carries from one epoch to the next.
struct ScorerState {
  std::optional<Stage> prev_stage;  // immediately preceding epoch; empty if first or unresolved MBM.2
  std::optional<Stage> last_stage;  // most recent epoch not dominated by artifact
  bool prev_was_movement = false;   // preceding epoch was an MBM epoch
  bool n2_context_active = false;   // non-arousal KC/spindle seen, no arousal since
  bool n3_context_active = false;   // N3 seen, no arousal or W/N1/R since
  bool r_context_active = false;    // preceding scored epoch was definite or continued R
  bool alpha_generator = false;

  // Throws StateError when the flags contradict each other or last_stage.
  void validate() const;
};

struct StageDecision {
  std::size_t epoch_index = 0;
  Stage stage = Stage::W;
  std::vector<RuleId> rules;  // empty only for a fallback decision
  std::string rationale;
  bool boundary = false;           // first or last epoch of the recording
  bool fallback = false;           // no rule matched; stage carried over
  bool pending_successor = false;  // MBM.2 not yet resolved against the next epoch
};

// True when the epoch, on its own, meets W.1, W.2 or W.3 and is not
// dominated by artifact.
bool w_scoreable(const features::EpochFeatures& f);

// Alpha generator if any of the first `window` epochs has alpha > 50%.
bool detect_alpha_generator(const std::vector<features::EpochFeatures>& seq, std::size_t window = 20);

// One epoch under fixed rule precedence. `next_hint` is W when the following
// epoch is W-scoreable (used by MBM.1) or, for MBM.2, the following epoch's
// resolved stage if already known. Throws StateError on an inconsistent state.
StageDecision classify_epoch(const features::EpochFeatures& f, const ScorerState& state,
                             std::optional<Stage> next_hint = std::nullopt);

// State after `decision` was made for an epoch with features `f`.
ScorerState advance(const ScorerState& state, const StageDecision& decision, const features::EpochFeatures& f);

struct StagingOptions {
  std::optional<bool> alpha_generator;  // overrides detection
  bool rationale = true;
};

// Forward pass with state threading, then backward resolution of MBM.2
// chains. Throws SequenceError for fewer than three epochs.
std::vector<StageDecision> stage_recording(const std::vector<features::EpochFeatures>& seq,
                                           const StagingOptions& options = {});

// Fixed-order templated paragraph: observations, identified features, rule
// citation, exclusion of the runner-up stage, conclusion.
std::string render_rationale(const StageDecision& decision, const features::EpochFeatures& f);

// `epoch_index,stage,rules,boundary_flag`, rules joined with ';'.
std::string hypnogram_csv(const std::vector<StageDecision>& decisions);
void write_hypnogram(const std::filesystem::path& path, const std::vector<StageDecision>& decisions);
std::vector<StageDecision> read_hypnogram(const std::filesystem::path& path);  // throws ParseError

// One {"epoch_index","reasoning_text","applicable_rules","sleep_stage"} object per line.
std::string rationale_jsonl(const std::vector<StageDecision>& decisions);

}  // namespace psgkit::rules
