#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psgkit/stage.hpp"

namespace psgkit::metrics {

struct SubjectPredictions {
  std::string subject_id;
  std::vector<Stage> truth;
  std::vector<Stage> pred;
};

using LabeledPredictions = std::vector<SubjectPredictions>;

// Throws SequenceError on an empty data set or subject, AlignmentError when
// a subject's truth and prediction lengths differ.
void validate(const LabeledPredictions& data);

using Confusion = std::array<std::array<std::uint64_t, kStageCount>, kStageCount>;  // [true][pred]
using Matrix = std::array<std::array<double, kStageCount>, kStageCount>;

Confusion confusion_matrix(const LabeledPredictions& data);
// Rows sum to 1; rows without any true epoch are all zeros.
Matrix row_normalized(const Confusion& c);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;  // unweighted over all five classes; absent classes count as 0
  double kappa = 0.0;
  std::array<double, kStageCount> per_class_f1{};
  bool kappa_degenerate = false;  // p_e == 1: kappa reported as 0
};

Metrics classification_metrics(const Confusion& c);
Metrics classification_metrics(const LabeledPredictions& data);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapCi {
  Interval accuracy;
  Interval macro_f1;
  Interval kappa;
  std::array<Interval, kStageCount> per_class_f1{};
  std::size_t n_resamples = 0;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Metrics of each subject-level resample. Resample i draws subjects with
// Rng(seed, i), so results do not depend on evaluation order.
std::vector<Metrics> bootstrap_resamples(const LabeledPredictions& data, std::size_t n_resamples,
                                         std::uint64_t seed);

// Percentile interval with linear interpolation between order statistics.
// Throws DegenerateError for fewer than two subjects.
BootstrapCi cluster_bootstrap_ci(const LabeledPredictions& data, std::size_t n_resamples = 1000,
                                 double level = 0.95, std::uint64_t seed = 0);

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct MetricsReport {
  Metrics point;
  Confusion confusion{};
  std::optional<BootstrapCi> ci;  // absent with a single subject
  std::size_t n_subjects = 0;
  std::size_t n_epochs = 0;
  std::string rng = "";
};

MetricsReport evaluate(const LabeledPredictions& data, std::size_t n_resamples = 1000, double level = 0.95,
                       std::uint64_t seed = 0);
std::string report_json(const MetricsReport& r);
// Aligned plain-text table: overall metrics with CIs, per-class F1, confusion.
std::string report_text(const MetricsReport& r);

// Per-stage seat counts for k picks: floor of k*count/total, leftover seats
// by largest remainder, ties in stage order W < N1 < N2 < N3 < R.
std::array<std::size_t, kStageCount> stage_quotas(const std::array<std::size_t, kStageCount>& counts,
                                                  std::size_t k);

// Stratified pick of k epoch ids (returned in input order). Throws
// ShortSubjectError when fewer than k epochs are available.
std::vector<std::string> stratified_sample(const std::vector<std::pair<std::string, Stage>>& subject_epochs,
                                           std::size_t k = 10, std::uint64_t seed = 0);

}  // namespace psgkit::metrics
