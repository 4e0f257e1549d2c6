#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psgkit/corpus.hpp"
#include "psgkit/stage.hpp"

namespace psgkit::rft {

// Natural-log token probabilities of one response under one context.
struct TokenLogProbs {
  std::vector<double> values;

  // Throws DomainError when empty, non-finite or positive.
  void validate() const;
};

struct ParsedResponse {
  Stage sleep_stage = Stage::W;
  std::vector<RuleId> applicable_rules;  // sorted, duplicates removed
  std::optional<std::string> reasoning_text;
};

// A parse failure is a value: unparseable candidates are filtered, not fatal.
struct ParseResult {
  std::optional<ParsedResponse> parsed;
  std::string failure;

  explicit operator bool() const noexcept { return parsed.has_value(); }
};

// Takes the first balanced {...} span that parses as a JSON object, so
// surrounding prose and ``` fences are tolerated. Requires sleep_stage in
// the five labels and applicable_rules within the fifteen identifiers.
ParseResult parse_response(std::string_view text);

// True when every letter is Latin script. Digits, punctuation, symbols and a
// few Greek letters used as scientific symbols (μ, α, β, θ, δ, σ, ...) pass.
// Malformed UTF-8 fails.
bool english_only(std::string_view utf8);

struct CandidateResponse {
  std::string epoch_id;
  std::string raw_text;
  TokenLogProbs logprobs_full;
  TokenLogProbs logprobs_textonly;
};

// Parseable, same stage, same rule set, English-only reasoning.
bool validate_candidate(const CandidateResponse& candidate, const corpus::AnnotationRecord& gold);

// exp(-mean(lp)). Throws DomainError on an invalid stream.
double perplexity(const TokenLogProbs& lp);

// PPL(full) - PPL(text-only). Throws AlignmentError on unequal lengths.
double ppl_gain(const CandidateResponse& candidate);

// Index of the valid candidate with minimum gain; ties go to lower PPL(full),
// then to the earlier index. Empty when no candidate is valid.
std::optional<std::size_t> select_best(const std::vector<CandidateResponse>& candidates,
                                       const corpus::AnnotationRecord& gold);

// `<subject>_<epoch:05>`; parse splits at the last underscore.
std::string epoch_id(const std::string& subject_id, std::size_t epoch_index);
std::optional<std::pair<std::string, std::size_t>> parse_epoch_id(std::string_view id);

// JSONL of {epoch_id, raw_text, logprobs_full, logprobs_textonly}; throws
// ParseError with the line number.
std::vector<CandidateResponse> parse_candidates(std::string_view jsonl);
std::vector<CandidateResponse> load_candidates(const std::filesystem::path& path);

struct SelectionSummary {
  std::size_t epochs = 0;           // distinct epoch ids with a gold record
  std::size_t candidates = 0;
  std::size_t valid_candidates = 0;
  std::size_t selected = 0;
  std::size_t missing_gold = 0;     // candidate epochs without a gold record
};

// Groups candidates by epoch, selects per epoch and returns fine-track
// records (gold stage/rules, selected reasoning) in gold order.
std::vector<corpus::AnnotationRecord> select_rationales(const std::vector<CandidateResponse>& candidates,
                                                        const std::vector<corpus::AnnotationRecord>& gold,
                                                        SelectionSummary* summary = nullptr);

}  // namespace psgkit::rft
