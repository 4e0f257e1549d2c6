#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "psgkit/errors.hpp"
#include "psgkit/rft.hpp"

using namespace psgkit;
using namespace psgkit::rft;

namespace {

corpus::AnnotationRecord gold(Stage s, std::vector<RuleId> rules) {
  return {"s01", 5, s, std::move(rules), std::nullopt};
}

std::string response(std::string_view stage, std::string_view rules, std::string_view text = "Spindles present.") {
  return "{\"reasoning_text\":\"" + std::string(text) + "\",\"applicable_rules\":[" + std::string(rules) +
         "],\"sleep_stage\":\"" + std::string(stage) + "\"}";
}

CandidateResponse candidate(std::string text, std::vector<double> full, std::vector<double> textonly) {
  return {"s01_00005", std::move(text), {std::move(full)}, {std::move(textonly)}};
}

// Second, deliberately plain implementation of the perplexity formula.
double oracle_ppl(const std::vector<double>& lp) {
  long double s = 0.0L;
  for (double v : lp) s += static_cast<long double>(v);
  return static_cast<double>(std::exp(-s / static_cast<long double>(lp.size())));
}

}  // namespace

TEST(Parse, SchemaExample) {
  const auto r = parse_response(R"({"reasoning_text":"Alpha dominates.","applicable_rules":["W.1"],"sleep_stage":"W"})");
  ASSERT_TRUE(r);
  EXPECT_EQ(r.parsed->sleep_stage, Stage::W);
  EXPECT_EQ(r.parsed->applicable_rules, std::vector<RuleId>{RuleId::W1});
  EXPECT_EQ(r.parsed->reasoning_text, "Alpha dominates.");
}

TEST(Parse, ToleratesProseAndFences) {
  const auto r = parse_response("Sure! ```json\n{\"applicable_rules\":[\"N2.1\"],\"sleep_stage\":\"N2\"}\n``` hope it helps");
  ASSERT_TRUE(r);
  EXPECT_EQ(r.parsed->sleep_stage, Stage::N2);
  EXPECT_FALSE(r.parsed->reasoning_text.has_value());
  // braces inside strings do not confuse the scan
  const auto q = parse_response(R"(note {not json} then {"reasoning_text":"a } b","applicable_rules":["R.1"],"sleep_stage":"R"})");
  ASSERT_TRUE(q);
  EXPECT_EQ(q.parsed->reasoning_text, "a } b");
}

TEST(Parse, Failures) {
  EXPECT_FALSE(parse_response(R"({"sleep_stage":"N4"})"));
  EXPECT_FALSE(parse_response(R"({"sleep_stage":"N2","applicable_rules":["N2.9"]})"));
  EXPECT_FALSE(parse_response(R"({"sleep_stage":"N2"})"));
  EXPECT_FALSE(parse_response("no json here"));
  EXPECT_FALSE(parse_response(""));
  EXPECT_FALSE(parse_response(R"({"sleep_stage":"N2","applicable_rules":["N2.1"],"reasoning_text":7})"));
  EXPECT_FALSE(parse_response(R"({"sleep_stage":"N2","applicable_rules":["N2.1"])").parsed.has_value());
  EXPECT_FALSE(parse_response("{\"sleep_stage\":\"N4\"}").failure.empty());
}

TEST(Parse, RulesAreNormalizedToASet) {
  const auto r = parse_response(response("N2", "\"N2.2\",\"N2.1\",\"N2.2\""));
  ASSERT_TRUE(r);
  EXPECT_EQ(r.parsed->applicable_rules, (std::vector<RuleId>{RuleId::N2_1, RuleId::N2_2}));
}

TEST(EnglishOnly, Scripts) {
  EXPECT_TRUE(english_only("Spindles of 12 Hz, amplitude 30 μV; α/θ ratio < 1."));
  EXPECT_TRUE(english_only("café naïve"));  // Latin with diacritics
  EXPECT_FALSE(english_only("Spindles 纺锤波 present"));
  EXPECT_FALSE(english_only("Сон"));
  EXPECT_FALSE(english_only("ύπνος"));
  EXPECT_FALSE(english_only("\xff\xfe"));
}

TEST(Validate, Cases) {
  const auto g = gold(Stage::N2, {RuleId::N2_1});
  EXPECT_TRUE(validate_candidate(candidate(response("N2", "\"N2.1\""), {-1}, {-1}), g));
  EXPECT_FALSE(validate_candidate(candidate(response("N2", "\"N2.1\",\"N2.2\""), {-1}, {-1}), g));
  EXPECT_FALSE(validate_candidate(candidate(response("N3", "\"N2.1\""), {-1}, {-1}), g));
  EXPECT_FALSE(validate_candidate(candidate(response("N2", "\"N2.1\"", "出现纺锤波"), {-1}, {-1}), g));
  EXPECT_FALSE(validate_candidate(candidate("garbage", {-1}, {-1}), g));
  EXPECT_FALSE(validate_candidate(candidate(R"({"applicable_rules":["N2.1"],"sleep_stage":"N2"})", {-1}, {-1}), g));
}

TEST(Perplexity, ClosedForms) {
  EXPECT_DOUBLE_EQ(perplexity({{0.0, 0.0, 0.0}}), 1.0);
  EXPECT_NEAR(perplexity({{-std::log(2.0), -std::log(2.0)}}), 2.0, 1e-15);
  EXPECT_THROW(perplexity({{}}), DomainError);
  EXPECT_THROW(perplexity({{0.1}}), DomainError);
  EXPECT_THROW(perplexity({{-1.0, std::nan("")}}), DomainError);
  EXPECT_THROW(perplexity({{-INFINITY}}), DomainError);
}

TEST(Perplexity, MatchesOracleOnRandomStreams) {
  std::mt19937_64 gen(99);
  std::uniform_int_distribution<int> len(1, 200);
  std::exponential_distribution<double> nll(0.7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> lp(static_cast<std::size_t>(len(gen)));
    for (double& v : lp) v = -nll(gen);
    const double want = oracle_ppl(lp);
    EXPECT_NEAR(perplexity({lp}), want, 1e-12 * want) << trial;
  }
}

TEST(Perplexity, PermutationInvariantAndMonotone) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-5.0, -0.01);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> lp(50);
    for (double& v : lp) v = u(gen);
    const double p = perplexity({lp});
    auto shuffled = lp;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    EXPECT_NEAR(perplexity({shuffled}), p, 1e-12 * p);
    auto raised = lp;
    raised[static_cast<std::size_t>(trial) % raised.size()] += 0.005;
    EXPECT_LT(perplexity({raised}), p);
  }
}

TEST(Gain, ClosedForms) {
  // text-only stream at -1 nat/token (PPL e); full stream 0.1 nat more likely
  const std::vector<double> text(40, -1.0), full(40, -0.9);
  EXPECT_NEAR(ppl_gain(candidate("", full, text)), std::exp(0.9) - std::exp(1.0), 1e-12);
  EXPECT_LT(ppl_gain(candidate("", full, text)), 0.0);
  EXPECT_DOUBLE_EQ(ppl_gain(candidate("", text, text)), 0.0);
  EXPECT_THROW(ppl_gain(candidate("", {-1, -1}, {-1})), AlignmentError);
  EXPECT_THROW(ppl_gain(candidate("", {}, {})), DomainError);
}

namespace {

// Valid candidate with a prescribed gain g: text-only PPL = e, full PPL = e + g.
CandidateResponse with_gain(double g, const std::string& text = response("N2", "\"N2.1\"")) {
  const double full_lp = -std::log(std::exp(1.0) + g);
  return candidate(text, std::vector<double>(10, full_lp), std::vector<double>(10, -1.0));
}

}  // namespace

TEST(Select, ArgminOverValid) {
  const auto g = gold(Stage::N2, {RuleId::N2_1});
  EXPECT_EQ(select_best({with_gain(0.4), with_gain(-0.2), with_gain(0.1)}, g), 1u);
  // an invalid candidate with a lower gain is ignored
  EXPECT_EQ(select_best({with_gain(0.4), with_gain(-0.9, response("N3", "\"N3.1\"")), with_gain(0.1)}, g), 2u);
  EXPECT_EQ(select_best({with_gain(-1.0, "nonsense"), with_gain(-1.0, response("W", "\"W.1\""))}, g), std::nullopt);
  EXPECT_EQ(select_best({}, g), std::nullopt);
}

TEST(Select, TieBreaks) {
  const auto g = gold(Stage::N2, {RuleId::N2_1});
  const std::string ok = response("N2", "\"N2.1\"");
  // equal gain 0: lower PPL(full) wins
  auto a = candidate(ok, {-1.0, -1.0}, {-1.0, -1.0});
  auto b = candidate(ok, {-0.5, -0.5}, {-0.5, -0.5});
  EXPECT_EQ(select_best({a, b}, g), 1u);
  // full residual tie: earliest index
  EXPECT_EQ(select_best({b, b, a}, g), 0u);
}

TEST(Select, ResultIsValidAndMinimal) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::bernoulli_distribution valid(0.6);
  const auto g = gold(Stage::N2, {RuleId::N2_1});
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CandidateResponse> cs;
    for (int i = 0; i < 8; ++i)
      cs.push_back(with_gain(u(gen), valid(gen) ? response("N2", "\"N2.1\"") : response("N1", "\"N1.1\"")));
    const auto best = select_best(cs, g);
    if (!best) {
      for (const auto& c : cs) EXPECT_FALSE(validate_candidate(c, g));
      continue;
    }
    ASSERT_TRUE(validate_candidate(cs[*best], g));
    for (const auto& c : cs)
      if (validate_candidate(c, g)) EXPECT_LE(ppl_gain(cs[*best]), ppl_gain(c));
  }
}

TEST(EpochIds, RoundTrip) {
  EXPECT_EQ(epoch_id("01-02_s", 42), "01-02_s_00042");
  const auto p = parse_epoch_id("01-02_s_00042");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->first, "01-02_s");
  EXPECT_EQ(p->second, 42u);
  EXPECT_FALSE(parse_epoch_id("nounderscore"));
  EXPECT_FALSE(parse_epoch_id("s_x1"));
}

TEST(Candidates, ParseErrorsCarryLine) {
  const std::string good =
      R"({"epoch_id":"s_00001","raw_text":"{}","logprobs_full":[-1.0],"logprobs_textonly":[-1.0]})";
  EXPECT_EQ(parse_candidates(good + "\n" + good).size(), 2u);
  try {
    parse_candidates(good + "\n" + R"({"epoch_id":"s_00001","raw_text":"{}","logprobs_full":"x"})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Candidates, SelectRationales) {
  std::vector<corpus::AnnotationRecord> golds = {{"s", 1, Stage::N2, {RuleId::N2_1}, std::nullopt},
                                                 {"s", 2, Stage::R, {RuleId::R1}, std::nullopt}};
  auto c1 = with_gain(0.3, response("N2", "\"N2.1\"", "first"));
  auto c2 = with_gain(-0.3, response("N2", "\"N2.1\"", "second"));
  auto c3 = with_gain(-0.3, response("W", "\"W.1\"", "wrong"));
  auto c4 = with_gain(0.0, response("W", "\"W.1\"", "orphan"));
  c1.epoch_id = c2.epoch_id = "s_00001";
  c3.epoch_id = "s_00002";
  c4.epoch_id = "t_00009";
  SelectionSummary sum;
  const auto out = select_rationales({c1, c2, c3, c4}, golds, &sum);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].epoch_index, 1u);
  EXPECT_EQ(out[0].reasoning_text, "second");
  EXPECT_EQ(out[0].sleep_stage, Stage::N2);
  EXPECT_EQ(sum.candidates, 4u);
  EXPECT_EQ(sum.valid_candidates, 2u);
  EXPECT_EQ(sum.selected, 1u);
  EXPECT_EQ(sum.missing_gold, 1u);
}
