#include "psgkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/rng.hpp"

namespace psgkit::metrics {

namespace {

using ojson = nlohmann::ordered_json;

void tally(Confusion& c, const SubjectPredictions& s) {
  for (std::size_t i = 0; i < s.truth.size(); ++i) ++c[index_of(s.truth[i])][index_of(s.pred[i])];
}

ojson interval_json(const Interval& iv) { return ojson::array({iv.lo, iv.hi}); }

}  // namespace

void validate(const LabeledPredictions& data) {
  if (data.empty()) throw SequenceError("no subjects to evaluate");
  for (const auto& s : data) {
    if (s.truth.size() != s.pred.size()) {
      throw AlignmentError(fmt::format("subject {}: {} true labels but {} predictions", s.subject_id,
                                       s.truth.size(), s.pred.size()));
    }
    if (s.truth.empty()) throw SequenceError("subject " + s.subject_id + " has no epochs");
  }
}

Confusion confusion_matrix(const LabeledPredictions& data) {
  validate(data);
  Confusion c{};
  for (const auto& s : data) tally(c, s);
  return c;
}

Matrix row_normalized(const Confusion& c) {
  Matrix m{};
  for (std::size_t i = 0; i < kStageCount; ++i) {
    const auto row = std::accumulate(c[i].begin(), c[i].end(), std::uint64_t{0});
    if (row == 0) continue;
    for (std::size_t j = 0; j < kStageCount; ++j) {
      m[i][j] = static_cast<double>(c[i][j]) / static_cast<double>(row);
    }
  }
  return m;
}

Metrics classification_metrics(const Confusion& c) {
  std::array<double, kStageCount> row{}, col{};
  double total = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    for (std::size_t j = 0; j < kStageCount; ++j) {
      const auto v = static_cast<double>(c[i][j]);
      row[i] += v;
      col[j] += v;
      total += v;
    }
    diag += static_cast<double>(c[i][i]);
  }
  Metrics m;
  if (total == 0.0) return m;
  m.accuracy = diag / total;
  for (std::size_t k = 0; k < kStageCount; ++k) {
    const double tp = static_cast<double>(c[k][k]);
    const double precision = col[k] > 0.0 ? tp / col[k] : 0.0;
    const double recall = row[k] > 0.0 ? tp / row[k] : 0.0;
    m.per_class_f1[k] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  m.macro_f1 = std::accumulate(m.per_class_f1.begin(), m.per_class_f1.end(), 0.0) / kStageCount;
  double pe = 0.0;
  for (std::size_t k = 0; k < kStageCount; ++k) pe += (row[k] / total) * (col[k] / total);
  if (pe >= 1.0) {
    m.kappa = 0.0;
    m.kappa_degenerate = true;
  } else {
    m.kappa = (m.accuracy - pe) / (1.0 - pe);
  }
  return m;
}

Metrics classification_metrics(const LabeledPredictions& data) {
  return classification_metrics(confusion_matrix(data));
}

std::vector<Metrics> bootstrap_resamples(const LabeledPredictions& data, std::size_t n_resamples,
                                         std::uint64_t seed) {
  validate(data);
  if (data.size() < 2) throw DegenerateError("cluster bootstrap needs at least two subjects");
  std::vector<Confusion> per_subject(data.size(), Confusion{});
  for (std::size_t s = 0; s < data.size(); ++s) tally(per_subject[s], data[s]);

  std::vector<Metrics> out(n_resamples);
  for (std::size_t i = 0; i < n_resamples; ++i) {
    Rng rng(seed, i);
    Confusion pooled{};
    for (std::size_t draw = 0; draw < data.size(); ++draw) {
      const Confusion& c = per_subject[rng.below(data.size())];
      for (std::size_t a = 0; a < kStageCount; ++a) {
        for (std::size_t b = 0; b < kStageCount; ++b) pooled[a][b] += c[a][b];
      }
    }
    out[i] = classification_metrics(pooled);
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapCi cluster_bootstrap_ci(const LabeledPredictions& data, std::size_t n_resamples, double level,
                                 std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  if (n_resamples == 0) throw DomainError("need at least one bootstrap resample");
  const auto resamples = bootstrap_resamples(data, n_resamples, seed);
  const double a = (1.0 - level) / 2.0;
  auto interval = [&](auto get) {
    std::vector<double> v;
    v.reserve(resamples.size());
    for (const auto& m : resamples) v.push_back(get(m));
    return Interval{quantile(v, a), quantile(v, 1.0 - a)};
  };
  BootstrapCi ci;
  ci.accuracy = interval([](const Metrics& m) { return m.accuracy; });
  ci.macro_f1 = interval([](const Metrics& m) { return m.macro_f1; });
  ci.kappa = interval([](const Metrics& m) { return m.kappa; });
  for (std::size_t k = 0; k < kStageCount; ++k) {
    ci.per_class_f1[k] = interval([k](const Metrics& m) { return m.per_class_f1[k]; });
  }
  ci.n_resamples = n_resamples;
  ci.level = level;
  ci.seed = seed;
  return ci;
}

MetricsReport evaluate(const LabeledPredictions& data, std::size_t n_resamples, double level, std::uint64_t seed) {
  MetricsReport r;
  r.confusion = confusion_matrix(data);
  r.point = classification_metrics(r.confusion);
  r.n_subjects = data.size();
  for (const auto& s : data) r.n_epochs += s.truth.size();
  if (data.size() >= 2 && n_resamples > 0) r.ci = cluster_bootstrap_ci(data, n_resamples, level, seed);
  r.rng = Rng::kName;
  return r;
}

std::string report_json(const MetricsReport& r) {
  ojson j;
  j["n_subjects"] = r.n_subjects;
  j["n_epochs"] = r.n_epochs;
  j["accuracy"] = r.point.accuracy;
  j["macro_f1"] = r.point.macro_f1;
  j["kappa"] = r.point.kappa;
  j["kappa_degenerate"] = r.point.kappa_degenerate;
  ojson f1;
  for (Stage s : kStages) f1[std::string(to_string(s))] = r.point.per_class_f1[index_of(s)];
  j["per_class_f1"] = f1;
  ojson conf = ojson::array();
  for (const auto& row : r.confusion) conf.push_back(row);
  j["confusion"] = conf;
  ojson norm = ojson::array();
  for (const auto& row : row_normalized(r.confusion)) norm.push_back(row);
  j["confusion_row_normalized"] = norm;
  j["labels"] = {"W", "N1", "N2", "N3", "R"};
  if (r.ci) {
    ojson ci;
    ci["method"] = "subject-level cluster bootstrap, percentile";
    ci["level"] = r.ci->level;
    ci["n_resamples"] = r.ci->n_resamples;
    ci["seed"] = r.ci->seed;
    ci["rng"] = r.rng;
    ci["accuracy"] = interval_json(r.ci->accuracy);
    ci["macro_f1"] = interval_json(r.ci->macro_f1);
    ci["kappa"] = interval_json(r.ci->kappa);
    ojson pc;
    for (Stage s : kStages) pc[std::string(to_string(s))] = interval_json(r.ci->per_class_f1[index_of(s)]);
    ci["per_class_f1"] = pc;
    j["ci"] = ci;
  } else {
    j["ci"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string report_text(const MetricsReport& r) {
  std::string out;
  auto line = [&](std::string_view name, double v, const Interval* iv) {
    if (iv) {
      out += fmt::format("{:<10} {:.3f} [{:.3f}, {:.3f}]\n", name, v, iv->lo, iv->hi);
    } else {
      out += fmt::format("{:<10} {:.3f}\n", name, v);
    }
  };
  out += fmt::format("subjects {}  epochs {}\n\n", r.n_subjects, r.n_epochs);
  line("accuracy", r.point.accuracy, r.ci ? &r.ci->accuracy : nullptr);
  line("macro-F1", r.point.macro_f1, r.ci ? &r.ci->macro_f1 : nullptr);
  line("kappa", r.point.kappa, r.ci ? &r.ci->kappa : nullptr);
  if (r.point.kappa_degenerate) out += "  (kappa undefined: a single class on both sides)\n";
  out += "\nper-class F1\n";
  for (Stage s : kStages) {
    const auto k = index_of(s);
    line(fmt::format("  {}", to_string(s)), r.point.per_class_f1[k], r.ci ? &r.ci->per_class_f1[k] : nullptr);
  }
  out += "\nconfusion (rows true, columns predicted)\n      ";
  for (Stage s : kStages) out += fmt::format("{:>7}", to_string(s));
  out += '\n';
  for (Stage t : kStages) {
    out += fmt::format("{:<6}", to_string(t));
    for (Stage p : kStages) out += fmt::format("{:>7}", r.confusion[index_of(t)][index_of(p)]);
    out += '\n';
  }
  if (r.ci) {
    out += fmt::format("\n{:.0f}% CIs from {} subject-level bootstrap resamples, seed {} ({})\n",
                       r.ci->level * 100.0, r.ci->n_resamples, r.ci->seed, r.rng);
  }
  return out;
}

std::array<std::size_t, kStageCount> stage_quotas(const std::array<std::size_t, kStageCount>& counts,
                                                  std::size_t k) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::array<std::size_t, kStageCount> q{};
  if (total == 0) {
    if (k > 0) throw ShortSubjectError("no epochs to allocate");
    return q;
  }
  // Exact integer arithmetic: quota = k*count/total, remainder compared as k*count mod total.
  std::array<std::size_t, kStageCount> rem{};
  std::size_t seated = 0;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    q[s] = k * counts[s] / total;
    rem[s] = k * counts[s] % total;
    seated += q[s];
  }
  std::array<std::size_t, kStageCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; seated < k; ++i, ++seated) ++q[order[i]];
  return q;
}

std::vector<std::string> stratified_sample(const std::vector<std::pair<std::string, Stage>>& subject_epochs,
                                           std::size_t k, std::uint64_t seed) {
  if (subject_epochs.size() < k) {
    throw ShortSubjectError(fmt::format("{} epochs available, {} requested", subject_epochs.size(), k));
  }
  std::array<std::vector<std::size_t>, kStageCount> pools;
  std::array<std::size_t, kStageCount> counts{};
  for (std::size_t i = 0; i < subject_epochs.size(); ++i) {
    pools[index_of(subject_epochs[i].second)].push_back(i);
    ++counts[index_of(subject_epochs[i].second)];
  }
  const auto quota = stage_quotas(counts, k);
  std::vector<std::size_t> picked;
  for (std::size_t s = 0; s < kStageCount; ++s) {
    // Partial Fisher-Yates with one stream per stage.
    Rng rng(seed, s);
    auto& pool = pools[s];
    for (std::size_t i = 0; i < quota[s]; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
    }
  }
  std::sort(picked.begin(), picked.end());
  std::vector<std::string> out;
  out.reserve(picked.size());
  for (std::size_t i : picked) out.push_back(subject_epochs[i].first);
  return out;
}

}  // namespace psgkit::metrics
