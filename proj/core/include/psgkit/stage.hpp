#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psgkit {

enum class Stage : std::uint8_t { W = 0, N1, N2, N3, R };

inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<Stage, kStageCount> kStages = {Stage::W, Stage::N1, Stage::N2,
                                                          Stage::N3, Stage::R};

constexpr std::size_t index_of(Stage s) noexcept { return static_cast<std::size_t>(s); }

constexpr std::string_view to_string(Stage s) noexcept {
  constexpr std::array<std::string_view, kStageCount> names = {"W", "N1", "N2", "N3", "R"};
  return names[index_of(s)];
}

constexpr std::optional<Stage> parse_stage(std::string_view s) noexcept {
  for (Stage st : kStages) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

// The fifteen operationalized adult scoring rules.
enum class RuleId : std::uint8_t {
  W1 = 0, W2, W3,
  N1_1, N1_2,
  N2_1, N2_2, N2_3, N2_4,
  N3_1,
  R1, R2, R3,
  MBM1, MBM2,
};

inline constexpr std::size_t kRuleCount = 15;
inline constexpr std::array<RuleId, kRuleCount> kRules = {
    RuleId::W1,   RuleId::W2,   RuleId::W3,   RuleId::N1_1, RuleId::N1_2,
    RuleId::N2_1, RuleId::N2_2, RuleId::N2_3, RuleId::N2_4, RuleId::N3_1,
    RuleId::R1,   RuleId::R2,   RuleId::R3,   RuleId::MBM1, RuleId::MBM2};

constexpr std::size_t index_of(RuleId r) noexcept { return static_cast<std::size_t>(r); }

constexpr std::string_view to_string(RuleId r) noexcept {
  constexpr std::array<std::string_view, kRuleCount> names = {
      "W.1",  "W.2",  "W.3",  "N1.1", "N1.2", "N2.1", "N2.2", "N2.3",
      "N2.4", "N3.1", "R.1",  "R.2",  "R.3",  "MBM.1", "MBM.2"};
  return names[index_of(r)];
}

constexpr std::optional<RuleId> parse_rule(std::string_view s) noexcept {
  for (RuleId r : kRules) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

enum class RuleType : std::uint8_t { Onset, Continuation, Termination, Scoring };

constexpr RuleType rule_type(RuleId r) noexcept {
  switch (r) {
    case RuleId::N2_2:
    case RuleId::N2_3:
    case RuleId::R2: return RuleType::Continuation;
    case RuleId::N2_4:
    case RuleId::R3: return RuleType::Termination;
    case RuleId::MBM1:
    case RuleId::MBM2: return RuleType::Scoring;
    default: return RuleType::Onset;
  }
}

// Bitmask over kStages of the stages a rule may be cited for.
using StageSet = std::uint8_t;

constexpr StageSet stage_bit(Stage s) noexcept { return static_cast<StageSet>(1u << index_of(s)); }
inline constexpr StageSet kAnyStage = 0x1f;

constexpr StageSet assigned_stages(RuleId r) noexcept {
  switch (r) {
    case RuleId::W1:
    case RuleId::W2:
    case RuleId::W3:
    case RuleId::MBM1: return stage_bit(Stage::W);
    case RuleId::N1_1:
    case RuleId::N1_2: return stage_bit(Stage::N1);
    case RuleId::N2_1:
    case RuleId::N2_2:
    case RuleId::N2_3: return stage_bit(Stage::N2);
    case RuleId::N2_4:
      return stage_bit(Stage::W) | stage_bit(Stage::N1) | stage_bit(Stage::N3) |
             stage_bit(Stage::R);
    case RuleId::N3_1: return stage_bit(Stage::N3);
    case RuleId::R1:
    case RuleId::R2: return stage_bit(Stage::R);
    case RuleId::R3:
      return stage_bit(Stage::W) | stage_bit(Stage::N1) | stage_bit(Stage::N2) |
             stage_bit(Stage::N3);
    case RuleId::MBM2: return kAnyStage;  // same as the following epoch
  }
  return 0;
}

constexpr bool compatible(RuleId r, Stage s) noexcept {
  return (assigned_stages(r) & stage_bit(s)) != 0;
}

// Criterion text for a rule, from the bundled rule catalog resource.
std::string_view rule_criterion(RuleId r);

std::string join_rules(const std::vector<RuleId>& rules, std::string_view sep = ";");

// Parses a separator-delimited rule list; throws psgkit::Error on unknown ids.
std::vector<RuleId> split_rules(std::string_view text, char sep = ';');

}  // namespace psgkit
