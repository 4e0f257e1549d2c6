#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/night.hpp"
#include "psgkit/rng.hpp"
#include "psgkit/rule_engine.hpp"
#include "psgkit/synth.hpp"

using namespace psgkit;
using namespace psgkit::rules;
using features::EpochFeatures;
using features::EyeEvent;
using features::EyeKind;
using features::TransientEvent;
using features::TransientKind;

namespace {

// Hand-built feature records for the rule tests.
EpochFeatures quiet(std::size_t index = 0) {
  EpochFeatures f;
  f.epoch_index = index;
  f.chin_mav_median_uv = 8.0;
  f.chin_tone_low = false;
  f.dominant_hz = 9.0;
  return f;
}

EpochFeatures wake(std::size_t i = 0) {
  EpochFeatures f = quiet(i);
  f.alpha_fraction = 0.8;
  f.chin_mav_median_uv = 16.0;
  return f;
}

EpochFeatures lamf(std::size_t i = 0) {
  EpochFeatures f = quiet(i);
  f.lamf_fraction = 0.9;
  f.dominant_hz = 5.0;
  f.theta_slowing = true;
  return f;
}

EpochFeatures spindle(std::size_t i = 0, double t = 5.0) {
  EpochFeatures f = lamf(i);
  f.transients.push_back({TransientKind::Spindle, Channel::C4M1, t, t + 1.0, 50.0, false, false});
  return f;
}

EpochFeatures rem(std::size_t i = 0) {
  EpochFeatures f = lamf(i);
  f.chin_tone_low = true;
  f.chin_mav_median_uv = 2.0;
  f.eye_events.push_back({EyeKind::REM, 4.0, 4.6, -0.9, 150, 60});
  return f;
}

EpochFeatures movement(std::size_t i = 0) {
  EpochFeatures f = quiet(i);
  f.artifact_fraction = 0.7;
  return f;
}

void add_blinks(EpochFeatures& f, int n) {
  for (int k = 0; k < n; ++k) f.eye_events.push_back({EyeKind::Blink, 1.0 + k, 1.3 + k, 0.9, 150, 70});
}

std::vector<EpochFeatures> indexed(std::vector<EpochFeatures> v) {
  for (std::size_t i = 0; i < v.size(); ++i) v[i].epoch_index = i;
  return v;
}

ScorerState after(Stage s) {
  ScorerState st;
  st.prev_stage = s;
  st.last_stage = s;
  return st;
}

// Random feature records, loosely shaped like real epochs.
EpochFeatures random_features(Rng& rng, std::size_t index) {
  EpochFeatures f = quiet(index);
  const auto pick = [&](double p) { return rng.uniform01() < p; };
  f.alpha_fraction = pick(0.25) ? rng.uniform(0.5, 1.0) : rng.uniform(0.0, 0.3);
  f.lamf_fraction = rng.uniform01();
  f.swa_fraction = pick(0.15) ? rng.uniform(0.2, 0.8) : rng.uniform(0.0, 0.19);
  f.artifact_fraction = pick(0.08) ? rng.uniform(0.51, 1.0) : rng.uniform(0.0, 0.2);
  f.chin_tone_low = pick(0.4);
  f.theta_slowing = pick(0.4);
  if (pick(0.15)) f.arousal_onsets_s.push_back(rng.uniform(10, 25));
  f.arousal_present = !f.arousal_onsets_s.empty();
  const int ntr = static_cast<int>(rng.below(3));
  for (int k = 0; k < ntr; ++k) {
    const auto kind = static_cast<TransientKind>(rng.below(3));
    const double t = rng.uniform(0, 28);
    f.transients.push_back({kind, Channel::C4M1, t, t + 1.0, 80, pick(0.3), pick(0.3)});
  }
  const int ney = static_cast<int>(rng.below(10));
  for (int k = 0; k < ney; ++k) {
    const auto kind = static_cast<EyeKind>(rng.below(3));
    const double t = rng.uniform(0, 29);
    f.eye_events.push_back({kind, t, t + 0.5, 0.0, 300, 50});
  }
  return f;
}

}  // namespace

TEST(Classify, AlphaWithBlinksIsWake) {
  EpochFeatures f = wake();
  f.alpha_fraction = 0.6;
  add_blinks(f, 10);
  const StageDecision d = classify_epoch(f, {});
  EXPECT_EQ(d.stage, Stage::W);
  EXPECT_EQ(d.rules, (std::vector<RuleId>{RuleId::W1, RuleId::W2}));
}

TEST(Classify, SpindleStartsN2) {
  EpochFeatures f = spindle();
  f.swa_fraction = 0.05;
  const StageDecision d = classify_epoch(f, after(Stage::N1));
  EXPECT_EQ(d.stage, Stage::N2);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::N2_1});
}

TEST(Classify, SlowWavesAreN3) {
  EpochFeatures f = quiet();
  f.swa_fraction = 0.25;
  const StageDecision d = classify_epoch(f, after(Stage::N3));
  EXPECT_EQ(d.stage, Stage::N3);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::N3_1});
}

TEST(Classify, RemsWithLowChinAreR) {
  const StageDecision d = classify_epoch(rem(), after(Stage::R));
  EXPECT_EQ(d.stage, Stage::R);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::R1});
}

TEST(Classify, LamfContinuesN2UnderContext) {
  ScorerState st = after(Stage::N2);
  st.n2_context_active = true;
  const StageDecision d = classify_epoch(lamf(), st);
  EXPECT_EQ(d.stage, Stage::N2);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::N2_2});
}

TEST(Classify, N3TakesPrecedenceOverSpindle) {
  EpochFeatures f = spindle();
  f.swa_fraction = 0.3;
  EXPECT_EQ(classify_epoch(f, after(Stage::N2)).stage, Stage::N3);
}

TEST(Classify, ExitCitations) {
  EXPECT_EQ(classify_epoch(wake(), after(Stage::N2)).rules, (std::vector<RuleId>{RuleId::W1, RuleId::N2_4}));
  EXPECT_EQ(classify_epoch(wake(), after(Stage::R)).rules, (std::vector<RuleId>{RuleId::W1, RuleId::R3}));
  EXPECT_EQ(classify_epoch(wake(), after(Stage::N1)).rules, std::vector<RuleId>{RuleId::W1});
}

TEST(Classify, ArousalWithLamfRevertsN2ToN1) {
  ScorerState st = after(Stage::N2);
  st.n2_context_active = true;
  EpochFeatures f = lamf();
  f.arousal_present = true;
  f.arousal_onsets_s = {14.0};
  const StageDecision d = classify_epoch(f, st);
  EXPECT_EQ(d.stage, Stage::N1);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::N2_4});
}

TEST(Classify, MovementThenSemsRevertsToN1) {
  ScorerState st = after(Stage::N2);
  st.n2_context_active = true;
  st.prev_was_movement = true;
  st.prev_stage.reset();
  EpochFeatures f = lamf();
  f.eye_events.push_back({EyeKind::SEM, 3.0, 6.0, -0.9, 800, 40});
  EXPECT_EQ(classify_epoch(f, st).rules, std::vector<RuleId>{RuleId::N2_4});
}

TEST(Classify, RExits) {
  ScorerState st = after(Stage::R);
  st.r_context_active = true;
  EXPECT_EQ(classify_epoch(lamf(), st).rules, std::vector<RuleId>{RuleId::R3});  // chin rises
  EpochFeatures f = rem();
  f.eye_events = {{EyeKind::SEM, 22.0, 25.0, -0.9, 900, 40}};
  f.arousal_present = true;
  f.arousal_onsets_s = {15.0};
  const StageDecision d = classify_epoch(f, st);
  EXPECT_EQ(d.stage, Stage::N1);
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::R3});
  EXPECT_EQ(classify_epoch(spindle(), st).rules, (std::vector<RuleId>{RuleId::N2_1, RuleId::R3}));
}

TEST(Classify, RContinuation) {
  ScorerState st = after(Stage::R);
  st.r_context_active = true;
  EpochFeatures f = rem();
  f.eye_events.clear();
  EXPECT_EQ(classify_epoch(f, st).rules, std::vector<RuleId>{RuleId::R2});
  st.r_context_active = false;
  EXPECT_NE(classify_epoch(f, st).stage, Stage::R);
}

TEST(Classify, PostN3) {
  ScorerState st = after(Stage::N3);
  st.n3_context_active = true;
  EXPECT_EQ(classify_epoch(lamf(), st).rules, std::vector<RuleId>{RuleId::N2_3});
}

TEST(Classify, N1ByGeneratorType) {
  ScorerState gen = after(Stage::W);
  gen.alpha_generator = true;
  EXPECT_EQ(classify_epoch(lamf(), gen).rules, std::vector<RuleId>{RuleId::N1_1});
  const ScorerState non = after(Stage::W);
  EXPECT_EQ(classify_epoch(lamf(), non).rules, std::vector<RuleId>{RuleId::N1_2});
  EpochFeatures vx = quiet();
  vx.transients.push_back({TransientKind::VertexSharp, Channel::C4M1, 3.0, 3.3, 50.0, false, false});
  EXPECT_EQ(classify_epoch(vx, non).rules, std::vector<RuleId>{RuleId::N1_2});
}

TEST(Classify, WakeByEyes) {
  EpochFeatures f = quiet();
  for (int k = 0; k < 9; ++k) f.eye_events.push_back({EyeKind::REM, 1.0 + 3 * k, 1.5 + 3 * k, -0.9, 150, 60});
  EXPECT_EQ(classify_epoch(f, {}).rules, std::vector<RuleId>{RuleId::W3});
  f.chin_tone_low = true;
  EXPECT_NE(classify_epoch(f, after(Stage::N1)).stage, Stage::W);
}

TEST(Classify, MovementScoring) {
  EpochFeatures m = movement();
  EXPECT_EQ(classify_epoch(m, after(Stage::W)).rules, std::vector<RuleId>{RuleId::MBM1});
  EXPECT_EQ(classify_epoch(m, after(Stage::N2), Stage::W).rules, std::vector<RuleId>{RuleId::MBM1});
  m.alpha_fraction = 0.2;
  EXPECT_EQ(classify_epoch(m, after(Stage::N2)).stage, Stage::W);
  m.alpha_fraction = 0.0;
  const StageDecision d = classify_epoch(m, after(Stage::N2));
  EXPECT_EQ(d.rules, std::vector<RuleId>{RuleId::MBM2});
  EXPECT_TRUE(d.pending_successor);
}

TEST(Classify, FallbackCarriesStage) {
  const StageDecision d = classify_epoch(quiet(), after(Stage::N2));
  EXPECT_TRUE(d.fallback);
  EXPECT_TRUE(d.rules.empty());
  EXPECT_EQ(d.stage, Stage::N2);
  EXPECT_EQ(classify_epoch(quiet(), {}).stage, Stage::W);
  EXPECT_NE(render_rationale(d, quiet()).find("no rule matched"), std::string::npos);
}

TEST(Classify, InconsistentStateRejected) {
  ScorerState st = after(Stage::N2);
  st.n2_context_active = true;
  st.n3_context_active = true;
  EXPECT_THROW(classify_epoch(lamf(), st), StateError);
  ScorerState r = after(Stage::N2);
  r.r_context_active = true;
  EXPECT_THROW(classify_epoch(lamf(), r), StateError);
  ScorerState blank;
  blank.n2_context_active = true;
  EXPECT_THROW(classify_epoch(lamf(), blank), StateError);
}

TEST(Recording, NeedsThreeEpochs) {
  EXPECT_THROW(stage_recording({wake(), wake()}), SequenceError);
}

TEST(Recording, MovementBetweenWakeAndN2IsWake) {
  const auto d = stage_recording(indexed({wake(), movement(), spindle()}));
  EXPECT_EQ(d[1].stage, Stage::W);
  EXPECT_EQ(d[1].rules, std::vector<RuleId>{RuleId::MBM1});
  EXPECT_TRUE(d[0].boundary);
  EXPECT_FALSE(d[1].boundary);
  EXPECT_TRUE(d[2].boundary);
}

TEST(Recording, MovementInsideN2TakesSuccessorStage) {
  const auto d = stage_recording(indexed({spindle(), spindle(), movement(), spindle(), lamf()}));
  EXPECT_EQ(d[2].rules, std::vector<RuleId>{RuleId::MBM2});
  EXPECT_EQ(d[2].stage, Stage::N2);
}

TEST(Recording, MovementChainsResolveFromFirstScoredSuccessor) {
  auto seq = indexed({spindle(), spindle(), movement(), movement(), movement(), rem(), rem()});
  const auto d = stage_recording(seq);
  for (std::size_t i : {2u, 3u, 4u}) EXPECT_EQ(d[i].stage, Stage::R) << i;
  EXPECT_EQ(d[5].rules, (std::vector<RuleId>{RuleId::R1, RuleId::N2_4}));
}

TEST(Recording, TrailingMovementTakesLastScoredStage) {
  const auto d = stage_recording(indexed({spindle(), lamf(), lamf(), movement(), movement()}));
  EXPECT_EQ(d[3].stage, Stage::N2);
  EXPECT_EQ(d[4].stage, Stage::N2);
}

TEST(Recording, AlphaGeneratorDetection) {
  std::vector<EpochFeatures> seq(30, lamf());
  EXPECT_FALSE(detect_alpha_generator(seq));
  seq[25] = wake();
  EXPECT_FALSE(detect_alpha_generator(seq));
  seq[19] = wake();
  EXPECT_TRUE(detect_alpha_generator(seq));
  seq = indexed(seq);
  EXPECT_EQ(stage_recording(seq, {.alpha_generator = false})[1].rules, std::vector<RuleId>{RuleId::N1_2});
}

TEST(Properties, RandomSequences) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    Rng rng(seed);
    const std::size_t n = 3 + rng.below(40);
    std::vector<EpochFeatures> seq;
    for (std::size_t i = 0; i < n; ++i) seq.push_back(random_features(rng, i));
    const auto d = stage_recording(seq);
    ASSERT_EQ(d.size(), n);
    const auto again = stage_recording(seq);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(again[i].stage, d[i].stage);
      EXPECT_EQ(again[i].rules, d[i].rules);
      EXPECT_EQ(again[i].rationale, d[i].rationale);
    }

    bool n2_ok = false, r_ok = false;
    for (std::size_t i = 0; i < n; ++i) {
      // cited rules are compatible with the stage
      for (RuleId r : d[i].rules) EXPECT_TRUE(compatible(r, d[i].stage)) << seed << " " << i << " " << to_string(r);
      EXPECT_EQ(d[i].rules.empty(), d[i].fallback);
      // MBM.2 epochs match their successor
      if (!d[i].rules.empty() && d[i].rules[0] == RuleId::MBM2 && i + 1 < n) EXPECT_EQ(d[i].stage, d[i + 1].stage);
      // precedence of N3 over spindles
      if (seq[i].artifact_fraction <= 0.5 && seq[i].swa_fraction >= 0.2 && d[i].stage != Stage::W)
        EXPECT_EQ(d[i].stage, Stage::N3);
      // context soundness
      const bool mbm = !d[i].rules.empty() && (d[i].rules[0] == RuleId::MBM1 || d[i].rules[0] == RuleId::MBM2);
      for (RuleId r : d[i].rules) {
        if (r == RuleId::N2_2) EXPECT_TRUE(n2_ok) << seed << " " << i;
        if (r == RuleId::R2) EXPECT_TRUE(r_ok) << seed << " " << i;
      }
      if (seq[i].arousal_present) n2_ok = false;
      if (!mbm) {
        const bool fired_n21 = std::find(d[i].rules.begin(), d[i].rules.end(), RuleId::N2_1) != d[i].rules.end();
        if (fired_n21 && !seq[i].arousal_present) n2_ok = true;
        if (d[i].stage != Stage::N2) n2_ok = false;
        r_ok = std::find(d[i].rules.begin(), d[i].rules.end(), RuleId::R1) != d[i].rules.end() ||
               std::find(d[i].rules.begin(), d[i].rules.end(), RuleId::R2) != d[i].rules.end();
      } else if (seq[i].arousal_present) {
        r_ok = false;
      }
      // rationale has no first person
      const std::string& t = d[i].rationale;
      EXPECT_EQ(t.find("I "), std::string::npos) << t;
      EXPECT_EQ(t.find("my "), std::string::npos);
      EXPECT_EQ(t.find("My "), std::string::npos);
    }
  }
}

TEST(Rationale, N3Mentions) {
  EpochFeatures f = quiet();
  f.swa_fraction = 0.34;
  const auto d = classify_epoch(f, after(Stage::N3));
  const std::string t = render_rationale(d, f);
  EXPECT_NE(t.find("slow wave activity"), std::string::npos);
  EXPECT_NE(t.find("34%"), std::string::npos);
  EXPECT_NE(t.find(">75 μV"), std::string::npos);
  EXPECT_NE(t.find("Rule N3.1"), std::string::npos);
}

TEST(Rationale, SectionOrder) {
  EpochFeatures f = wake();
  add_blinks(f, 10);
  const auto d = classify_epoch(f, {});
  const std::string t = render_rationale(d, f);
  const auto obs = t.find("O2-M1 shows alpha rhythm");
  const auto feat = t.find("Identified features:");
  const auto w1 = t.find("Rule W.1");
  const auto w2 = t.find("Rule W.2");
  const auto excl = t.find("N1 is excluded");
  const auto concl = t.find("scored as stage W");
  ASSERT_NE(obs, std::string::npos);
  EXPECT_LT(obs, feat);
  EXPECT_LT(feat, w1);
  EXPECT_LT(w1, w2);
  EXPECT_LT(w2, excl);
  EXPECT_LT(excl, concl);
}

TEST(Output, HypnogramRoundTrip) {
  const auto d = stage_recording(indexed({wake(), movement(), spindle(), lamf(), quiet()}));
  const std::string csv = hypnogram_csv(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch_index,stage,rules,boundary_flag");
  const auto path = std::filesystem::temp_directory_path() / "psgkit_hyp_test.csv";
  write_hypnogram(path, d);
  const auto back = read_hypnogram(path);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].epoch_index, d[i].epoch_index);
    EXPECT_EQ(back[i].stage, d[i].stage);
    EXPECT_EQ(back[i].rules, d[i].rules);
    EXPECT_EQ(back[i].boundary, d[i].boundary);
  }
  std::ofstream(path) << "epoch_index,stage,rules,boundary_flag\n0,W,W.1,1\n1,N4,,0\n";
  try {
    read_hypnogram(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::filesystem::remove(path);
}

TEST(Output, RationaleJsonlFineSchema) {
  const auto d = stage_recording(indexed({wake(), spindle(), lamf()}));
  std::istringstream in(rationale_jsonl(d));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.at("reasoning_text").is_string());
    EXPECT_TRUE(j.at("applicable_rules").is_array());
    EXPECT_TRUE(parse_stage(j.at("sleep_stage").get<std::string>()).has_value());
    ++n;
  }
  EXPECT_EQ(n, 3u);
}

TEST(SyntheticNight, ScriptCoversEveryRule) {
  std::map<RuleId, int> counts;
  std::size_t epochs = 0;
  const auto cohort = night::synthetic_cohort();
  ASSERT_EQ(cohort.size(), 2u);
  EXPECT_TRUE(cohort[0].alpha_generator);
  EXPECT_FALSE(cohort[1].alpha_generator);
  for (const auto& s : cohort) {
    epochs += s.script.size();
    for (const auto& e : s.script) {
      for (RuleId r : e.rules) {
        ++counts[r];
        EXPECT_TRUE(compatible(r, e.stage));
      }
    }
  }
  EXPECT_GE(epochs, 200u);
  for (RuleId r : kRules) EXPECT_GE(counts[r], 5) << to_string(r);
}

TEST(SyntheticNight, StagingReproducesScript) {
  for (const auto& s : night::synthetic_cohort()) {
    std::vector<Epoch> epochs;
    for (std::size_t i = 0; i < s.script.size(); ++i) epochs.push_back(synth::synthesize_epoch(s.script[i].spec, i));
    const auto d = stage_recording(features::extract_recording_features(epochs));
    ASSERT_EQ(d.size(), s.script.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      EXPECT_EQ(d[i].stage, s.script[i].stage) << s.subject_id << " " << i;
      EXPECT_EQ(d[i].rules, s.script[i].rules) << s.subject_id << " " << i;
    }
  }
}
