#include "psgkit/rule_engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"

namespace psgkit::rules {

using features::EpochFeatures;
using features::EyeKind;
using features::TransientKind;

namespace {

constexpr double kMajority = 0.5;
constexpr double kSwaThreshold = 0.2;
constexpr std::size_t kEyeEventCount = 8;  // W.2/W.3 alternative to >50% coverage
constexpr double kMovementAlpha = 0.1;     // "alpha present for part of the epoch"
constexpr std::size_t kSeconds = kEpochSeconds;

bool majority_eye(const EpochFeatures& f, EyeKind k) {
  return 2 * f.eye_seconds(k) > kSeconds || f.count(k) >= kEyeEventCount;
}

bool movement(const EpochFeatures& f) { return f.artifact_fraction > kMajority; }
bool lamf(const EpochFeatures& f) { return f.lamf_fraction > kMajority; }
bool own_kc_or_spindle(const EpochFeatures& f) { return f.has_sleep_transient(); }

std::vector<RuleId> wake_rules(const EpochFeatures& f) {
  std::vector<RuleId> out;
  if (f.alpha_fraction > kMajority) out.push_back(RuleId::W1);
  if (majority_eye(f, EyeKind::Blink)) out.push_back(RuleId::W2);
  if (majority_eye(f, EyeKind::REM) && !f.chin_tone_low) out.push_back(RuleId::W3);
  return out;
}

bool contains(const std::vector<RuleId>& v, RuleId r) { return std::find(v.begin(), v.end(), r) != v.end(); }

StageDecision decide(const EpochFeatures& f, Stage s, std::vector<RuleId> rules) {
  StageDecision d;
  d.epoch_index = f.epoch_index;
  d.stage = s;
  d.rules = std::move(rules);
  return d;
}

// --- rationale pieces -------------------------------------------------------

std::string pct(double fraction) { return fmt::format("{:.0f}%", fraction * 100.0); }

std::string plural(std::size_t n, std::string_view one, std::string_view many) {
  return fmt::format("{} {}", n, n == 1 ? one : many);
}

std::string transient_list(const EpochFeatures& f, TransientKind k, bool preceding) {
  std::vector<std::string> parts;
  for (const auto& e : f.transients) {
    if (e.kind != k || e.in_preceding_epoch != preceding) continue;
    parts.push_back(fmt::format("{:.1f}-{:.1f} s ({:.0f} μV peak-to-peak{})", e.t_start_s, e.t_end_s,
                                e.peak_to_peak_uv, e.arousal_associated ? ", arousal-associated" : ""));
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

std::string observations(const EpochFeatures& f, Stage stage) {
  std::string out;
  auto add = [&](const std::string& s) {
    if (!out.empty()) out += ' ';
    out += s;
  };

  if (f.alpha_fraction > 0.0) {
    add(fmt::format("O2-M1 shows alpha rhythm (8-13 Hz) in {} of the epoch.", pct(f.alpha_fraction)));
  } else {
    add("O2-M1 shows no sustained alpha rhythm.");
  }

  std::string c4 = f.lamf_fraction > 0.0
                       ? fmt::format("C4-M1 shows low-amplitude mixed-frequency activity in {} of the epoch",
                                     pct(f.lamf_fraction))
                       : std::string("C4-M1 shows no low-amplitude mixed-frequency background");
  if (f.dominant_hz > 0.0) c4 += fmt::format(", dominant frequency {:.1f} Hz", f.dominant_hz);
  add(c4 + ".");
  if (f.count(TransientKind::Spindle))
    add(fmt::format("C4-M1 contains {} at {}.", plural(f.count(TransientKind::Spindle), "sleep spindle", "sleep spindles"),
                    transient_list(f, TransientKind::Spindle, false)));
  if (f.count(TransientKind::VertexSharp))
    add(fmt::format("C4-M1 contains {} at {}.",
                    plural(f.count(TransientKind::VertexSharp), "vertex sharp wave", "vertex sharp waves"),
                    transient_list(f, TransientKind::VertexSharp, false)));
  if (f.count(TransientKind::KComplex))
    add(fmt::format("F4-M1 contains {} at {}.", plural(f.count(TransientKind::KComplex), "K complex", "K complexes"),
                    transient_list(f, TransientKind::KComplex, false)));
  if (f.swa_fraction > 0.0 || stage == Stage::N3) {
    add(fmt::format("F4-M1 shows slow wave activity (0.5-2 Hz, >75 μV peak-to-peak) over {} of the epoch.",
                    pct(f.swa_fraction)));
  }
  const std::size_t prev_sp = f.count(TransientKind::Spindle, true) - f.count(TransientKind::Spindle);
  const std::size_t prev_kc = f.count(TransientKind::KComplex, true) - f.count(TransientKind::KComplex);
  if (prev_sp) add(fmt::format("The last half of the preceding epoch contains a sleep spindle at {}.",
                               transient_list(f, TransientKind::Spindle, true)));
  if (prev_kc) add(fmt::format("The last half of the preceding epoch contains a K complex at {}.",
                               transient_list(f, TransientKind::KComplex, true)));

  std::vector<std::string> eyes;
  for (EyeKind k : {EyeKind::Blink, EyeKind::REM, EyeKind::SEM}) {
    const std::size_t n = f.count(k);
    if (!n) continue;
    const auto first = std::find_if(f.eye_events.begin(), f.eye_events.end(),
                                    [&](const features::EyeEvent& e) { return e.kind == k; });
    switch (k) {
      case EyeKind::Blink:
        eyes.push_back(fmt::format("{} (in-phase, from {:.1f} s)", plural(n, "conjugate blink", "conjugate blinks"),
                                   first->t_start_s));
        break;
      case EyeKind::REM:
        eyes.push_back(fmt::format("{} (out-of-phase, sharp initial deflection, from {:.1f} s)",
                                   plural(n, "rapid eye movement", "rapid eye movements"), first->t_start_s));
        break;
      case EyeKind::SEM:
        eyes.push_back(fmt::format("{} (out-of-phase, initial deflection {:.0f} ms, from {:.1f} s)",
                                   plural(n, "slow eye movement", "slow eye movements"), first->initial_deflection_ms,
                                   first->t_start_s));
        break;
    }
  }
  if (eyes.empty()) {
    add("LOC and ROC show no distinct eye movements.");
  } else {
    std::string s = "LOC and ROC show ";
    for (std::size_t i = 0; i < eyes.size(); ++i) s += (i ? (i + 1 == eyes.size() ? " and " : ", ") : "") + eyes[i];
    add(s + ".");
  }

  add(fmt::format("Chin EMG median amplitude is {:.1f} μV ({} tone).", f.chin_mav_median_uv,
                  f.chin_tone_low ? "low" : "normal or high"));
  if (f.artifact_fraction > 0.0)
    add(fmt::format("Movement or muscle artifact obscures {} of the epoch.", pct(f.artifact_fraction)));
  for (double t : f.arousal_onsets_s) add(fmt::format("An arousal (alpha/beta shift on C4-M1) begins at {:.0f} s.", t));
  return out;
}

std::string identified(const EpochFeatures& f) {
  std::vector<std::string> names;
  if (f.alpha_fraction > kMajority) names.push_back("dominant alpha rhythm");
  if (lamf(f)) names.push_back("predominant LAMF activity");
  if (f.theta_slowing) names.push_back("theta-range slowing");
  if (f.count(TransientKind::Spindle, true)) names.push_back("sleep spindles");
  if (f.count(TransientKind::KComplex, true)) names.push_back("K complexes");
  if (f.count(TransientKind::VertexSharp)) names.push_back("vertex sharp waves");
  if (f.swa_fraction >= kSwaThreshold) names.push_back("slow wave activity of at least 20%");
  if (f.count(EyeKind::Blink)) names.push_back("blinks");
  if (f.count(EyeKind::REM)) names.push_back("REMs");
  if (f.count(EyeKind::SEM)) names.push_back("SEMs");
  names.push_back(f.chin_tone_low ? "low chin tone" : "normal chin tone");
  if (f.arousal_present) names.push_back("arousal");
  if (movement(f)) names.push_back("major body movement");
  std::string out = "Identified features: ";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out + ".";
}

std::string rule_reason(RuleId r, const EpochFeatures& f, Stage stage) {
  switch (r) {
    case RuleId::W1:
      return fmt::format("Rule W.1 applies: alpha rhythm occupies {} of the epoch, above 50%.", pct(f.alpha_fraction));
    case RuleId::W2:
      return fmt::format("Rule W.2 applies: conjugate blinks at 0.5-2 Hz recur through the epoch ({}).",
                         plural(f.count(EyeKind::Blink), "event", "events"));
    case RuleId::W3:
      return fmt::format("Rule W.3 applies: rapid eye movements recur through the epoch ({}) with normal or high chin tone.",
                         plural(f.count(EyeKind::REM), "event", "events"));
    case RuleId::N1_1:
      return fmt::format("Rule N1.1 applies: for an alpha generator, alpha is attenuated ({}) and replaced by LAMF activity in {} of the epoch.",
                         pct(f.alpha_fraction), pct(f.lamf_fraction));
    case RuleId::N1_2: {
      std::vector<std::string> why;
      if (f.theta_slowing) why.push_back(fmt::format("EEG slowing into the theta range ({:.1f} Hz)", f.dominant_hz));
      if (f.count(TransientKind::VertexSharp)) why.push_back("vertex sharp waves");
      if (f.count(EyeKind::SEM)) why.push_back("slow eye movements");
      std::string s;
      for (std::size_t i = 0; i < why.size(); ++i) s += (i ? ", " : "") + why[i];
      return "Rule N1.2 applies: for a non-alpha generator, the epoch shows " + s + ".";
    }
    case RuleId::N2_1:
      return "Rule N2.1 applies: a sleep spindle or a K complex without arousal occurs in the first half of the epoch "
             "or the last half of the preceding epoch, and N3 criteria are not met.";
    case RuleId::N2_2:
      return "Rule N2.2 applies: LAMF activity without K complexes or spindles continues N2 established by an earlier "
             "non-arousal K complex or spindle with no intervening arousal.";
    case RuleId::N2_3:
      return "Rule N2.3 applies: the epoch follows N3, no longer meets N3 criteria, has no intervening arousal and "
             "meets neither W nor R criteria.";
    case RuleId::N2_4:
      if (stage == Stage::N1) {
        return f.arousal_present
                   ? "Rule N2.4 applies: N2 ends because an arousal is followed by LAMF activity, reverting to N1."
                   : "Rule N2.4 applies: N2 ends because a major body movement is followed by slow eye movements, reverting to N1.";
      }
      return fmt::format("Rule N2.4 applies: N2 ends with the transition to stage {}.", to_string(stage));
    case RuleId::N3_1:
      return fmt::format("Rule N3.1 applies: slow wave activity (>75 μV) covers {} of the epoch, meeting the 20% threshold.",
                         pct(f.swa_fraction));
    case RuleId::R1:
      return "Rule R.1 applies: LAMF activity without K complexes or spindles, low chin tone and rapid eye movements "
             "together define definite R.";
    case RuleId::R2:
      return "Rule R.2 applies: the epoch is contiguous with definite R and keeps LAMF activity and low chin tone "
             "without K complexes, spindles or an intervening arousal.";
    case RuleId::R3:
      if (stage == Stage::N1) {
        return f.arousal_present && f.count(EyeKind::SEM)
                   ? "Rule R.3 applies: R ends because an arousal is followed by slow eye movements, scored as N1."
                   : "Rule R.3 applies: R ends because chin tone rises above the R level with N1-like LAMF activity.";
      }
      return fmt::format("Rule R.3 applies: R ends with the transition to stage {}.", to_string(stage));
    case RuleId::MBM1:
      return fmt::format("Rule MBM.1 applies: artifact obscures {} of the epoch, and alpha rhythm or an adjacent "
                         "W epoch supports scoring W.",
                         pct(f.artifact_fraction));
    case RuleId::MBM2:
      return fmt::format("Rule MBM.2 applies: artifact obscures {} of the epoch without MBM.1 support, so the epoch "
                         "takes the stage of the epoch that follows it.",
                         pct(f.artifact_fraction));
  }
  return {};
}

std::string exclusion(const StageDecision& d, const EpochFeatures& f) {
  switch (d.stage) {
    case Stage::W:
      return fmt::format("N1 is excluded because wake activity dominates: alpha {} and {}.", pct(f.alpha_fraction),
                         plural(f.count(EyeKind::Blink) + f.count(EyeKind::REM), "wake eye movement", "wake eye movements"));
    case Stage::N1:
      if (f.alpha_fraction > 0.0)
        return fmt::format("W is excluded because alpha rhythm covers only {} of the epoch and no blink or REM "
                           "pattern with high chin tone dominates.",
                           pct(f.alpha_fraction));
      return "N2 is excluded because no K complex without arousal or sleep spindle establishes or continues N2.";
    case Stage::N2:
      if (f.swa_fraction > 0.0)
        return fmt::format("N3 is excluded because slow wave activity covers only {} of the epoch, below 20%.",
                           pct(f.swa_fraction));
      return "N1 is excluded because spindle or K complex evidence, or N2 continuity without arousal, establishes N2.";
    case Stage::N3:
      return fmt::format("N2 is excluded because slow wave activity at {} meets the N3 threshold, which takes "
                         "precedence over spindles and K complexes.",
                         pct(f.swa_fraction));
    case Stage::R:
      return "N1 is excluded because REMs or R continuity with low chin tone and no spindles or K complexes define R.";
  }
  return {};
}

}  // namespace

void ScorerState::validate() const {
  if (n2_context_active && n3_context_active) throw StateError("N2 and post-N3 contexts cannot both be active");
  if (r_context_active && last_stage != Stage::R) throw StateError("R context requires the last scored stage to be R");
  if ((n2_context_active || n3_context_active || r_context_active) && !last_stage) {
    throw StateError("context flags set before any epoch was scored");
  }
  if (n3_context_active && last_stage != Stage::N3 && last_stage != Stage::N2)
    throw StateError("post-N3 context requires N3 or N2 as the last scored stage");
}

bool w_scoreable(const EpochFeatures& f) { return !movement(f) && !wake_rules(f).empty(); }

bool detect_alpha_generator(const std::vector<EpochFeatures>& seq, std::size_t window) {
  const std::size_t n = std::min(window, seq.size());
  return std::any_of(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(n),
                     [](const EpochFeatures& f) { return f.alpha_fraction > kMajority; });
}

StageDecision classify_epoch(const EpochFeatures& f, const ScorerState& state, std::optional<Stage> next_hint) {
  state.validate();

  // (1) major body movement
  if (movement(f)) {
    if (f.alpha_fraction >= kMovementAlpha || state.prev_stage == Stage::W || next_hint == Stage::W) {
      return decide(f, Stage::W, {RuleId::MBM1});
    }
    StageDecision d = decide(f, next_hint.value_or(state.last_stage.value_or(Stage::W)), {RuleId::MBM2});
    d.pending_successor = !next_hint.has_value();
    return d;
  }

  const auto last = state.last_stage;
  auto with_exit = [&](StageDecision d) {
    if (last && *last != d.stage) {
      if (*last == Stage::N2 && !contains(d.rules, RuleId::N2_4)) d.rules.push_back(RuleId::N2_4);
      if (*last == Stage::R && !contains(d.rules, RuleId::R3)) d.rules.push_back(RuleId::R3);
    }
    return d;
  };

  // (2) wake
  if (auto w = wake_rules(f); !w.empty()) return with_exit(decide(f, Stage::W, std::move(w)));

  // (3) N3
  if (f.swa_fraction >= kSwaThreshold) return with_exit(decide(f, Stage::N3, {RuleId::N3_1}));

  // (4) R
  const bool r_eeg = lamf(f) && !own_kc_or_spindle(f) && f.chin_tone_low;
  if (r_eeg && f.count(EyeKind::REM) > 0) return with_exit(decide(f, Stage::R, {RuleId::R1}));
  if (r_eeg && state.r_context_active && !f.arousal_present) return with_exit(decide(f, Stage::R, {RuleId::R2}));

  // (5) N2 onset, then the exits from R and N2 that revert to N1, then N2 continuation
  if (f.n2_onset_evidence()) return with_exit(decide(f, Stage::N2, {RuleId::N2_1}));
  if (last == Stage::R &&
      ((!f.chin_tone_low && lamf(f)) || (f.arousal_present && f.count(EyeKind::SEM) > 0))) {
    return decide(f, Stage::N1, {RuleId::R3});
  }
  if (last == Stage::N2 && ((f.arousal_present && lamf(f)) || (state.prev_was_movement && f.count(EyeKind::SEM) > 0))) {
    return decide(f, Stage::N1, {RuleId::N2_4});
  }
  if (lamf(f) && !own_kc_or_spindle(f) && state.n2_context_active && !f.arousal_present) {
    return decide(f, Stage::N2, {RuleId::N2_2});
  }
  if (state.n3_context_active && !f.arousal_present) return with_exit(decide(f, Stage::N2, {RuleId::N2_3}));

  // (6) N1
  if (state.alpha_generator && f.alpha_fraction <= kMajority && lamf(f)) {
    return with_exit(decide(f, Stage::N1, {RuleId::N1_1}));
  }
  if (!state.alpha_generator &&
      (f.theta_slowing || f.count(TransientKind::VertexSharp) > 0 || f.count(EyeKind::SEM) > 0)) {
    return with_exit(decide(f, Stage::N1, {RuleId::N1_2}));
  }

  // (7) no rule matched: carry the stage
  StageDecision d = decide(f, last.value_or(Stage::W), {});
  d.fallback = true;
  return d;
}

ScorerState advance(const ScorerState& state, const StageDecision& d, const EpochFeatures& f) {
  ScorerState next = state;
  if (contains(d.rules, RuleId::MBM1) || contains(d.rules, RuleId::MBM2)) {
    next.prev_was_movement = true;
    next.prev_stage = d.pending_successor ? std::nullopt : std::optional<Stage>(d.stage);
    if (f.arousal_present) {
      next.n2_context_active = false;
      next.n3_context_active = false;
      next.r_context_active = false;
    }
    return next;
  }
  next.prev_was_movement = false;
  next.prev_stage = d.stage;
  next.last_stage = d.stage;
  next.r_context_active = contains(d.rules, RuleId::R1) || contains(d.rules, RuleId::R2);
  switch (d.stage) {
    case Stage::N3:
      next.n3_context_active = true;
      next.n2_context_active = false;
      break;
    case Stage::N2:
      if (contains(d.rules, RuleId::N2_1) && !f.arousal_present) {
        next.n2_context_active = true;
        next.n3_context_active = false;
      }
      break;
    default:
      next.n2_context_active = false;
      next.n3_context_active = false;
      break;
  }
  if (f.arousal_present) {
    next.n2_context_active = false;
    next.n3_context_active = false;
  }
  return next;
}

std::vector<StageDecision> stage_recording(const std::vector<EpochFeatures>& seq, const StagingOptions& options) {
  if (seq.size() < 3) throw SequenceError(fmt::format("staging needs at least 3 epochs, got {}", seq.size()));
  ScorerState state;
  state.alpha_generator = options.alpha_generator.value_or(detect_alpha_generator(seq));

  std::vector<StageDecision> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const bool next_w = i + 1 < seq.size() && w_scoreable(seq[i + 1]);
    StageDecision d = classify_epoch(seq[i], state, next_w ? std::optional<Stage>(Stage::W) : std::nullopt);
    // A W hint only speaks for MBM.1; MBM.2 must wait for the successor's actual stage.
    if (contains(d.rules, RuleId::MBM2)) d.pending_successor = true;
    state = advance(state, d, seq[i]);
    out.push_back(std::move(d));
  }

  // MBM.2 takes the following epoch's resolved stage; a trailing chain takes
  // the last stage scored before it.
  std::optional<Stage> successor;
  for (std::size_t i = out.size(); i-- > 0;) {
    if (out[i].pending_successor) {
      if (successor) {
        out[i].stage = *successor;
      } else {
        std::optional<Stage> before;
        for (std::size_t j = i; j-- > 0;) {
          if (!out[j].pending_successor) {
            before = out[j].stage;
            break;
          }
        }
        out[i].stage = before.value_or(Stage::W);
      }
      out[i].pending_successor = false;
    }
    successor = out[i].stage;
  }

  out.front().boundary = true;
  out.back().boundary = true;
  if (options.rationale) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rationale = render_rationale(out[i], seq[i]);
  }
  return out;
}

std::string render_rationale(const StageDecision& d, const EpochFeatures& f) {
  std::string text = observations(f, d.stage);
  text += ' ';
  text += identified(f);
  if (d.rules.empty()) {
    text += fmt::format(" Continuation: no rule matched, so stage {} is carried from the preceding epoch.",
                        to_string(d.stage));
  } else {
    for (RuleId r : d.rules) {
      text += ' ';
      text += rule_reason(r, f, d.stage);
    }
  }
  if (contains(d.rules, RuleId::MBM2)) {
    text += fmt::format(" The following epoch is scored {}.", to_string(d.stage));
  } else if (!contains(d.rules, RuleId::MBM1)) {
    text += ' ';
    text += exclusion(d, f);
  }
  text += fmt::format(" The epoch is therefore scored as stage {}.", to_string(d.stage));
  return text;
}

std::string hypnogram_csv(const std::vector<StageDecision>& decisions) {
  std::string out = "epoch_index,stage,rules,boundary_flag\n";
  for (const auto& d : decisions) {
    out += fmt::format("{},{},{},{}\n", d.epoch_index, to_string(d.stage), join_rules(d.rules), d.boundary ? 1 : 0);
  }
  return out;
}

void write_hypnogram(const std::filesystem::path& path, const std::vector<StageDecision>& decisions) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << hypnogram_csv(decisions);
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<StageDecision> read_hypnogram(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<StageDecision> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "epoch_index,stage,rules,boundary_flag") throw ParseError(1, "unexpected hypnogram header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 4) throw ParseError(lineno, "expected 4 columns");
    StageDecision d;
    try {
      std::size_t used = 0;
      d.epoch_index = std::stoull(cols[0], &used);
      if (used != cols[0].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad epoch index \"" + cols[0] + "\"");
    }
    const auto st = parse_stage(cols[1]);
    if (!st) throw ParseError(lineno, "unknown stage \"" + cols[1] + "\"");
    d.stage = *st;
    try {
      d.rules = split_rules(cols[2]);
    } catch (const Error& e) {
      throw ParseError(lineno, e.what());
    }
    if (cols[3] != "0" && cols[3] != "1") throw ParseError(lineno, "boundary flag must be 0 or 1");
    d.boundary = cols[3] == "1";
    d.fallback = d.rules.empty();
    out.push_back(std::move(d));
  }
  return out;
}

std::string rationale_jsonl(const std::vector<StageDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) {
    nlohmann::ordered_json j;
    j["epoch_index"] = d.epoch_index;
    j["reasoning_text"] = d.rationale;
    auto rules = nlohmann::ordered_json::array();
    for (RuleId r : d.rules) rules.push_back(std::string(to_string(r)));
    j["applicable_rules"] = rules;
    j["sleep_stage"] = std::string(to_string(d.stage));
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace psgkit::rules
