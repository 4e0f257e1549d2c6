#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "psgkit/errors.hpp"
#include "psgkit/metrics.hpp"

using namespace psgkit;
using namespace psgkit::metrics;

namespace {

constexpr Stage W = Stage::W, N1 = Stage::N1, N2 = Stage::N2, N3 = Stage::N3, R = Stage::R;

LabeledPredictions one(std::vector<Stage> truth, std::vector<Stage> pred, std::string id = "s") {
  return {{std::move(id), std::move(truth), std::move(pred)}};
}

struct Brute {
  double acc, macro, kappa;
  std::array<double, 5> f1;
  std::array<std::array<double, 5>, 5> cm;
};

// Direct counting over pairs; no confusion matrix reuse.
Brute brute(const std::vector<std::pair<int, int>>& pairs) {
  Brute b{};
  const double n = static_cast<double>(pairs.size());
  double agree = 0;
  for (auto [t, p] : pairs) {
    b.cm[t][p] += 1;
    if (t == p) agree += 1;
  }
  b.acc = agree / n;
  double pe = 0;
  for (int c = 0; c < 5; ++c) {
    double tp = 0, fp = 0, fn = 0, nt = 0, np = 0;
    for (auto [t, p] : pairs) {
      if (t == c && p == c) tp += 1;
      if (t != c && p == c) fp += 1;
      if (t == c && p != c) fn += 1;
      nt += t == c;
      np += p == c;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    b.f1[c] = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    b.macro += b.f1[c] / 5.0;
    pe += (nt / n) * (np / n);
  }
  b.kappa = pe >= 1.0 ? 0.0 : (b.acc - pe) / (1.0 - pe);
  return b;
}

}  // namespace

TEST(Confusion, SimpleCases) {
  const auto perfect = confusion_matrix(one({W, N2, R}, {W, N2, R}));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(perfect[i][j], (i == j && i != 1 && i != 3) ? 1u : 0u);
  const auto off = confusion_matrix(one({W, W, W}, {N1, N1, N1}));
  EXPECT_EQ(off[0][1], 3u);
  const auto norm = row_normalized(off);
  EXPECT_DOUBLE_EQ(norm[0][1], 1.0);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(norm[2][j], 0.0);
}

TEST(Metrics, HandEvaluatedFixture) {
  const Metrics m = classification_metrics(one({W, W, N2, N2}, {W, N2, N2, N2}));
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_NEAR(m.kappa, 0.5, 1e-15);
  // F1(W) = 2/3, F1(N2) = 0.8, three absent classes count as zero
  EXPECT_NEAR(m.per_class_f1[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.per_class_f1[2], 0.8, 1e-15);
  EXPECT_NEAR(m.macro_f1, (2.0 / 3.0 + 0.8) / 5.0, 1e-15);
  EXPECT_FALSE(m.kappa_degenerate);
}

TEST(Metrics, PerfectAndDegenerate) {
  const Metrics p = classification_metrics(one({W, N1, N2, N3, R}, {W, N1, N2, N3, R}));
  EXPECT_DOUBLE_EQ(p.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(p.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(p.kappa, 1.0);
  const Metrics d = classification_metrics(one({N2, N2, N2}, {N2, N2, N2}));
  EXPECT_TRUE(d.kappa_degenerate);
  EXPECT_EQ(d.kappa, 0.0);
  EXPECT_DOUBLE_EQ(d.macro_f1, 0.2);
}

TEST(Metrics, Validation) {
  EXPECT_THROW(validate({}), SequenceError);
  EXPECT_THROW(validate(one({}, {})), SequenceError);
  EXPECT_THROW(validate(one({W}, {W, W})), AlignmentError);
  EXPECT_THROW(classification_metrics(one({W}, {W, W})), AlignmentError);
}

TEST(Metrics, BruteForceOracle) {
  std::mt19937_64 gen(1234);
  std::uniform_int_distribution<int> len(1, 60), cls(0, 4), nsub(1, 4);
  std::bernoulli_distribution agree(0.6);
  for (int trial = 0; trial < 1000; ++trial) {
    LabeledPredictions data;
    std::vector<std::pair<int, int>> pairs;
    // sometimes restrict to fewer classes so degenerate and absent cases occur
    const int span = 1 + trial % 5;
    std::uniform_int_distribution<int> sub_cls(0, span - 1);
    for (int s = nsub(gen); s > 0; --s) {
      SubjectPredictions sp{"s" + std::to_string(s), {}, {}};
      for (int i = len(gen); i > 0; --i) {
        const int t = sub_cls(gen);
        const int p = agree(gen) ? t : cls(gen);
        sp.truth.push_back(kStages[t]);
        sp.pred.push_back(kStages[p]);
        pairs.emplace_back(t, p);
      }
      data.push_back(sp);
    }
    const Brute b = brute(pairs);
    const Metrics m = classification_metrics(data);
    const Confusion c = confusion_matrix(data);
    EXPECT_NEAR(m.accuracy, b.acc, 1e-12);
    EXPECT_NEAR(m.macro_f1, b.macro, 1e-12);
    EXPECT_NEAR(m.kappa, b.kappa, 1e-12) << trial;
    for (int k = 0; k < 5; ++k) {
      EXPECT_NEAR(m.per_class_f1[k], b.f1[k], 1e-12);
      for (int j = 0; j < 5; ++j) EXPECT_EQ(static_cast<double>(c[k][j]), b.cm[k][j]);
    }
  }
}

TEST(Metrics, PermutationInvariance) {
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> cls(0, 4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<Stage, Stage>> pairs(80);
    for (auto& pr : pairs) pr = {kStages[cls(gen)], kStages[cls(gen)]};
    auto split = [](const std::vector<std::pair<Stage, Stage>>& v) {
      SubjectPredictions s{"s", {}, {}};
      for (auto [t, p] : v) {
        s.truth.push_back(t);
        s.pred.push_back(p);
      }
      return LabeledPredictions{s};
    };
    const Metrics a = classification_metrics(split(pairs));
    std::shuffle(pairs.begin(), pairs.end(), gen);
    const Metrics b = classification_metrics(split(pairs));
    EXPECT_DOUBLE_EQ(a.accuracy, b.accuracy);
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-15);
    EXPECT_NEAR(a.kappa, b.kappa, 1e-15);
    EXPECT_EQ(a.kappa == 1.0, a.accuracy == 1.0);
  }
}

TEST(Bootstrap, TwoSubjectDistribution) {
  LabeledPredictions data = {{"good", {W, N2}, {W, N2}}, {"bad", {W, N2}, {N2, W}}};
  const auto rs = bootstrap_resamples(data, 4000, 7);
  std::map<double, int> hist;
  for (const auto& m : rs) ++hist[m.accuracy];
  ASSERT_EQ(hist.size(), 3u);
  EXPECT_EQ(hist.begin()->first, 0.0);
  EXPECT_EQ(std::next(hist.begin())->first, 0.5);
  EXPECT_EQ(hist.rbegin()->first, 1.0);
  // binomial(4000, p) standard deviation is at most ~32; allow five sigma
  EXPECT_NEAR(hist[0.0], 1000, 160);
  EXPECT_NEAR(hist[0.5], 2000, 160);
  EXPECT_NEAR(hist[1.0], 1000, 160);
}

TEST(Bootstrap, PerfectSubjectsCollapse) {
  LabeledPredictions data = {{"a", {W, N2, R}, {W, N2, R}}, {"b", {N1, N3}, {N1, N3}}};
  const BootstrapCi ci = cluster_bootstrap_ci(data, 500, 0.95, 3);
  EXPECT_EQ(ci.accuracy.lo, 1.0);
  EXPECT_EQ(ci.accuracy.hi, 1.0);
  EXPECT_EQ(ci.kappa.lo, 1.0);
  EXPECT_EQ(ci.n_resamples, 500u);
}

TEST(Bootstrap, DeterministicAndOrdered) {
  LabeledPredictions data = {{"a", {W, N2, N2, R}, {W, N2, N1, R}},
                             {"b", {N1, N3, N2}, {N2, N3, N2}},
                             {"c", {W, W, R}, {W, N1, R}}};
  const auto a = cluster_bootstrap_ci(data, 300, 0.95, 11);
  const auto b = cluster_bootstrap_ci(data, 300, 0.95, 11);
  EXPECT_EQ(a.accuracy.lo, b.accuracy.lo);
  EXPECT_EQ(a.kappa.hi, b.kappa.hi);
  EXPECT_EQ(report_json(evaluate(data, 300, 0.95, 11)), report_json(evaluate(data, 300, 0.95, 11)));
  EXPECT_LE(a.accuracy.lo, a.accuracy.hi);
  EXPECT_LE(a.macro_f1.lo, a.macro_f1.hi);
  EXPECT_LE(a.kappa.lo, a.kappa.hi);
  for (const auto& iv : a.per_class_f1) EXPECT_LE(iv.lo, iv.hi);
  // resample i only depends on (seed, i)
  const auto r100 = bootstrap_resamples(data, 100, 11);
  const auto r50 = bootstrap_resamples(data, 50, 11);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(r100[i].accuracy, r50[i].accuracy);
}

TEST(Bootstrap, NeedsTwoSubjects) {
  EXPECT_THROW(cluster_bootstrap_ci(one({W}, {W}), 10), DegenerateError);
  const auto r = evaluate(one({W, N2}, {W, N2}), 10);
  EXPECT_FALSE(r.ci.has_value());
}

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.25), 2.5);
}

TEST(Report, TextAndJson) {
  LabeledPredictions data = {{"a", {W, N2}, {W, N2}}, {"b", {W, N2}, {W, N1}}};
  const auto r = evaluate(data, 50, 0.95, 1);
  const std::string text = report_text(r);
  EXPECT_NE(text.find("accuracy "), std::string::npos);
  EXPECT_NE(text.find("kappa "), std::string::npos);
  const std::string js = report_json(r);
  EXPECT_NE(js.find("\"seed\": 1"), std::string::npos);
  EXPECT_NE(js.find("mt19937_64"), std::string::npos);
  // confusion row sums equal per-class truth counts
  std::uint64_t w_row = 0;
  for (auto v : r.confusion[0]) w_row += v;
  EXPECT_EQ(w_row, 2u);
}

TEST(Quotas, HandComputed) {
  EXPECT_EQ(stage_quotas({50, 10, 30, 5, 5}, 10), (std::array<std::size_t, 5>{5, 1, 3, 1, 0}));
  EXPECT_EQ(stage_quotas({0, 0, 40, 0, 0}, 10), (std::array<std::size_t, 5>{0, 0, 10, 0, 0}));
  EXPECT_EQ(stage_quotas({1, 1, 1, 1, 1}, 3), (std::array<std::size_t, 5>{1, 1, 1, 0, 0}));
}

TEST(Quotas, SumAndProportionOnRandomDistributions) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> cnt(0, 300), kk(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<std::size_t, 5> c{};
    std::size_t total = 0;
    for (auto& v : c) total += (v = cnt(gen));
    if (total == 0) c[2] = total = 1;
    const std::size_t k = std::min(kk(gen), total);
    const auto q = stage_quotas(c, k);
    std::size_t sum = 0;
    for (std::size_t s = 0; s < 5; ++s) {
      sum += q[s];
      const double exact = static_cast<double>(k) * static_cast<double>(c[s]) / static_cast<double>(total);
      EXPECT_LT(std::abs(static_cast<double>(q[s]) - exact), 1.0);
      EXPECT_LE(q[s], c[s]);
    }
    EXPECT_EQ(sum, k);
  }
}

TEST(Stratified, SampleShape) {
  std::vector<std::pair<std::string, Stage>> epochs;
  const std::array<std::size_t, 5> counts{50, 10, 30, 5, 5};
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t i = 0; i < counts[s]; ++i) epochs.emplace_back("e" + std::to_string(epochs.size()), kStages[s]);
  std::shuffle(epochs.begin(), epochs.end(), std::mt19937_64(3));
  const auto pick = stratified_sample(epochs, 10, 42);
  ASSERT_EQ(pick.size(), 10u);
  std::map<std::string, Stage> stage_of(epochs.begin(), epochs.end());
  std::array<std::size_t, 5> got{};
  for (const auto& id : pick) ++got[index_of(stage_of.at(id))];
  EXPECT_EQ(got, (std::array<std::size_t, 5>{5, 1, 3, 1, 0}));
  // returned in input order, no repeats
  std::vector<std::size_t> pos;
  for (const auto& id : pick)
    pos.push_back(static_cast<std::size_t>(
        std::find_if(epochs.begin(), epochs.end(), [&](const auto& e) { return e.first == id; }) - epochs.begin()));
  EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
  EXPECT_EQ(std::adjacent_find(pos.begin(), pos.end()), pos.end());
  EXPECT_EQ(stratified_sample(epochs, 10, 42), pick);
  EXPECT_NE(stratified_sample(epochs, 10, 43), pick);
}

TEST(Stratified, SingleStageAndShort) {
  std::vector<std::pair<std::string, Stage>> epochs;
  for (int i = 0; i < 12; ++i) epochs.emplace_back("e" + std::to_string(i), N3);
  EXPECT_EQ(stratified_sample(epochs, 10, 1).size(), 10u);
  epochs.resize(9);
  EXPECT_THROW(stratified_sample(epochs, 10, 1), ShortSubjectError);
}
