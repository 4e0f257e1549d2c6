#include "psgkit/ratings.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/resources.hpp"

namespace psgkit::ratings {

namespace {

using ojson = nlohmann::ordered_json;

const nlohmann::json& rubric() {
  static const nlohmann::json r = nlohmann::json::parse(resource("rubric.json"));
  return r;
}

Rating rating_from_json(const nlohmann::json& j) {
  Rating r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.rater = j.at("rater").get<std::string>();
  for (std::size_t d = 0; d < kDimensions; ++d) r.scores[d] = j.at(fmt::format("dim{}", d + 1)).get<int>();
  r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

}  // namespace

const SessionSample* Session::find(const std::string& sample_id) const {
  for (const auto& s : samples) {
    if (s.sample_id == sample_id) return &s;
  }
  return nullptr;
}

std::string session_json(const Session& s) {
  ojson samples = ojson::array();
  for (const auto& x : s.samples) {
    ojson j;
    j["sample_id"] = x.sample_id;
    j["subject_id"] = x.subject_id;
    j["epoch_index"] = x.epoch_index;
    j["images"] = x.images;
    j["stage"] = std::string(to_string(x.stage));
    ojson rules = ojson::array();
    for (RuleId r : x.rules) rules.push_back(std::string(to_string(r)));
    j["rules"] = rules;
    j["rationale"] = x.rationale;
    samples.push_back(j);
  }
  ojson root;
  root["version"] = 1;
  root["samples"] = samples;
  return root.dump(2) + "\n";
}

void write_session(const std::filesystem::path& path, const Session& s) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << session_json(s);
}

Session load_session(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  Session out;
  try {
    const auto root = nlohmann::json::parse(is);
    std::set<std::string> seen;
    for (const auto& j : root.at("samples")) {
      SessionSample x;
      x.sample_id = j.at("sample_id").get<std::string>();
      if (!seen.insert(x.sample_id).second) throw FormatError("duplicate sample_id " + x.sample_id);
      x.subject_id = j.at("subject_id").get<std::string>();
      x.epoch_index = j.at("epoch_index").get<std::size_t>();
      const auto images = j.at("images").get<std::vector<std::string>>();
      if (images.size() != 3) throw FormatError(x.sample_id + ": expected 3 images");
      std::copy(images.begin(), images.end(), x.images.begin());
      const auto stage = parse_stage(j.at("stage").get<std::string>());
      if (!stage) throw FormatError(x.sample_id + ": unknown stage");
      x.stage = *stage;
      for (const auto& r : j.at("rules")) {
        const auto id = parse_rule(r.get<std::string>());
        if (!id) throw FormatError(x.sample_id + ": unknown rule " + r.get<std::string>());
        x.rules.push_back(*id);
      }
      x.rationale = j.at("rationale").get<std::string>();
      out.samples.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("session " + path.string() + ": " + e.what());
  }
  return out;
}

std::string rating_json(const Rating& r) {
  ojson j;
  j["sample_id"] = r.sample_id;
  j["rater"] = r.rater;
  for (std::size_t d = 0; d < kDimensions; ++d) j[fmt::format("dim{}", d + 1)] = r.scores[d];
  j["timestamp"] = r.timestamp;
  return j.dump();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)),
                     ms.count());
}

Submission parse_submission(const std::string& body, const Session& session) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return {std::nullopt, "body is not JSON"};
  }
  if (!j.is_object()) return {std::nullopt, "body must be a JSON object"};
  if (!j.contains("sample_id") || !j["sample_id"].is_string()) return {std::nullopt, "sample_id is required"};
  if (!j.contains("rater") || !j["rater"].is_string() || j["rater"].get<std::string>().empty()) {
    return {std::nullopt, "rater is required"};
  }
  if (!j.contains("scores") || !j["scores"].is_array() || j["scores"].size() != kDimensions) {
    return {std::nullopt, "scores must be an array of three integers"};
  }
  Rating r;
  r.sample_id = j["sample_id"].get<std::string>();
  r.rater = j["rater"].get<std::string>();
  if (!session.find(r.sample_id)) return {std::nullopt, "unknown sample_id " + r.sample_id};
  for (std::size_t d = 0; d < kDimensions; ++d) {
    const auto& v = j["scores"][d];
    if (!v.is_number_integer()) return {std::nullopt, fmt::format("score {} must be an integer", d + 1)};
    const auto s = v.get<long long>();
    if (s < kMinScore || s > kMaxScore) {
      return {std::nullopt, fmt::format("score {} is {}, outside {}..{}", d + 1, s, kMinScore, kMaxScore)};
    }
    r.scores[d] = static_cast<int>(s);
  }
  r.timestamp = utc_timestamp();
  return {std::move(r), {}};
}

RatingStore::RatingStore(std::filesystem::path path) : path_(std::move(path)) {
  auto records = std::make_shared<std::vector<Rating>>();
  std::ifstream is(path_, std::ios::binary);
  if (is) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        records->push_back(rating_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(lineno, e.what());
      }
    }
  }
  records_ = std::move(records);
}

RatingStore::AppendResult RatingStore::append(const Rating& r) {
  std::lock_guard lock(mutex_);
  for (const auto& x : *records_) {
    if (x.sample_id == r.sample_id && x.rater == r.rater) return AppendResult::Duplicate;
  }
  {
    std::ofstream os(path_, std::ios::binary | std::ios::app);
    if (!os) throw IoError("cannot append to " + path_.string());
    os << rating_json(r) << '\n';
    os.flush();
    if (!os) throw IoError("append failed for " + path_.string());
  }
  auto next = std::make_shared<std::vector<Rating>>(*records_);
  next->push_back(r);
  records_ = std::move(next);
  return AppendResult::Stored;
}

std::shared_ptr<const std::vector<Rating>> RatingStore::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

const SessionSample* next_unrated(const Session& session, const std::vector<Rating>& ratings,
                                  const std::string& rater) {
  std::set<std::string> done;
  for (const auto& r : ratings) {
    if (r.rater == rater) done.insert(r.sample_id);
  }
  for (const auto& s : session.samples) {
    if (!done.count(s.sample_id)) return &s;
  }
  return nullptr;
}

Summary summarize(const Session& session, const std::vector<Rating>& ratings) {
  Summary s;
  s.total_samples = session.samples.size();
  s.ratings = ratings.size();
  const auto& dims = rubric().at("dimensions");
  for (std::size_t d = 0; d < kDimensions; ++d) {
    s.dimensions[d].key = dims.at(d).at("key").get<std::string>();
    s.dimensions[d].name = dims.at(d).at("name").get<std::string>();
  }
  std::set<std::string> rated;
  for (const auto& r : ratings) {
    rated.insert(r.sample_id);
    for (std::size_t d = 0; d < kDimensions; ++d) {
      ++s.dimensions[d].histogram[static_cast<std::size_t>(r.scores[d])];
      ++s.dimensions[d].n;
      s.dimensions[d].mean += r.scores[d];
    }
  }
  for (auto& dim : s.dimensions) {
    if (dim.n) dim.mean /= static_cast<double>(dim.n);
  }
  s.rated_samples = rated.size();
  return s;
}

std::string summary_json(const Summary& s) {
  ojson j;
  j["total_samples"] = s.total_samples;
  j["rated_samples"] = s.rated_samples;
  j["ratings"] = s.ratings;
  ojson dims = ojson::array();
  for (const auto& d : s.dimensions) {
    ojson x;
    x["key"] = d.key;
    x["name"] = d.name;
    ojson hist;
    for (int score = kMinScore; score <= kMaxScore; ++score) {
      hist[std::to_string(score)] = d.histogram[static_cast<std::size_t>(score)];
    }
    x["histogram"] = hist;
    x["n"] = d.n;
    x["mean"] = d.n ? ojson(d.mean) : ojson(nullptr);
    dims.push_back(x);
  }
  j["dimensions"] = dims;
  return j.dump();
}

std::string rubric_json() { return std::string(resource("rubric.json")); }

}  // namespace psgkit::ratings
