#include "psgkit/corpus.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/resources.hpp"

namespace psgkit::corpus {

namespace {

using ojson = nlohmann::ordered_json;

std::string prompt_section(std::string_view name) {
  std::string text(resource("prompts/" + std::string(name) + ".txt"));
  while (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string rules_section() {
  std::string out = prompt_section("phase2_2b_rules_header");
  const auto catalog = nlohmann::json::parse(resource("rules.json"));
  for (const auto& rule : catalog.at("rules")) {
    out += "\n\n";
    out += rule.at("id").get<std::string>() + " (" + rule.at("type").get<std::string>() + "): ";
    out += rule.at("criterion").get<std::string>();
    out += " Assigned stage: " + rule.at("assigned_stage").get<std::string>() + ".";
  }
  return out;
}

AnnotationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("annotation must be a JSON object");
  AnnotationRecord r;
  r.subject_id = j.at("subject_id").get<std::string>();
  if (!j.at("epoch_index").is_number_unsigned()) throw FormatError("epoch_index must be a non-negative integer");
  r.epoch_index = j.at("epoch_index").get<std::size_t>();
  const auto stage = parse_stage(j.at("sleep_stage").get<std::string>());
  if (!stage) throw FormatError("unknown sleep_stage \"" + j.at("sleep_stage").get<std::string>() + "\"");
  r.sleep_stage = *stage;
  for (const auto& id : j.at("applicable_rules")) {
    const auto rule = parse_rule(id.get<std::string>());
    if (!rule) throw FormatError("unknown rule identifier \"" + id.get<std::string>() + "\"");
    r.applicable_rules.push_back(*rule);
  }
  if (r.applicable_rules.empty()) throw FormatError("applicable_rules must not be empty");
  if (j.contains("reasoning_text")) r.reasoning_text = j.at("reasoning_text").get<std::string>();
  return r;
}

ojson rules_json(const std::vector<RuleId>& rules) {
  ojson a = ojson::array();
  for (RuleId r : rules) a.push_back(std::string(to_string(r)));
  return a;
}

}  // namespace

std::string_view to_string(Track t) noexcept { return t == Track::Fine ? "fine" : "coarse"; }

Track parse_track(std::string_view s) {
  if (s == "fine") return Track::Fine;
  if (s == "coarse") return Track::Coarse;
  throw TrackError("unknown track \"" + std::string(s) + "\" (expected fine or coarse)");
}

std::vector<AnnotationRecord> annotations_from_decisions(const std::string& subject_id,
                                                         const std::vector<rules::StageDecision>& decisions,
                                                         Track track) {
  std::vector<AnnotationRecord> out;
  for (const auto& d : decisions) {
    if (d.rules.empty()) continue;
    AnnotationRecord r{subject_id, d.epoch_index, d.stage, d.rules, std::nullopt};
    if (track == Track::Fine) r.reasoning_text = d.rationale;
    out.push_back(std::move(r));
  }
  return out;
}

std::string annotation_json(const AnnotationRecord& r) {
  ojson j;
  j["subject_id"] = r.subject_id;
  j["epoch_index"] = r.epoch_index;
  j["sleep_stage"] = std::string(to_string(r.sleep_stage));
  j["applicable_rules"] = rules_json(r.applicable_rules);
  if (r.reasoning_text) j["reasoning_text"] = *r.reasoning_text;
  return j.dump();
}

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  for (const auto& r : records) os << annotation_json(r) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl) {
  std::vector<AnnotationRecord> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const FormatError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_annotations(ss.str());
}

std::string phase1_prompt() { return prompt_section("phase1") + "\n"; }

std::string phase2_prompt(Track track) {
  const bool fine = track == Track::Fine;
  std::string out;
  for (const std::string& section :
       {prompt_section("phase2_1_role"), prompt_section("phase2_2a_rendering"), rules_section(),
        prompt_section("phase2_3_input"),
        prompt_section(fine ? "phase2_4_tasks_fine" : "phase2_4_tasks_coarse"),
        prompt_section(fine ? "phase2_5_output_fine" : "phase2_5_output_coarse")}) {
    if (!out.empty()) out += "\n\n";
    out += section;
  }
  out += '\n';
  return out;
}

TrainingSample build_phase1_sample(const Epoch& epoch, const descriptors::DescriptorFrame& frame,
                                   const std::string& subject_id, const std::string& image_path) {
  TrainingSample s;
  s.phase = 1;
  s.subject_id = subject_id;
  s.epoch_index = epoch.index();
  s.system_prompt = phase1_prompt();
  s.prompt_sha256 = sha256_hex(s.system_prompt);
  s.image_paths = {image_path};
  s.target = descriptors::serialize_phase1_target(frame);
  return s;
}

std::string phase2_target(const AnnotationRecord& annotation, Track track) {
  ojson j;
  if (track == Track::Fine) {
    if (!annotation.reasoning_text) {
      throw TrackError("fine track needs reasoning_text (" + annotation.subject_id + " epoch " +
                       std::to_string(annotation.epoch_index) + ")");
    }
    j["reasoning_text"] = *annotation.reasoning_text;
  }
  j["applicable_rules"] = rules_json(annotation.applicable_rules);
  j["sleep_stage"] = std::string(to_string(annotation.sleep_stage));
  return j.dump();
}

TrainingSample build_phase2_sample(const std::array<std::string, 3>& triplet_images,
                                   const AnnotationRecord& annotation, Track track) {
  TrainingSample s;
  s.phase = 2;
  s.subject_id = annotation.subject_id;
  s.epoch_index = annotation.epoch_index;
  s.track = track;
  s.target = phase2_target(annotation, track);
  s.system_prompt = phase2_prompt(track);
  s.prompt_sha256 = sha256_hex(s.system_prompt);
  s.image_paths.assign(triplet_images.begin(), triplet_images.end());
  return s;
}

std::string sample_json(const TrainingSample& s) {
  ojson j;
  j["phase"] = s.phase;
  j["subject_id"] = s.subject_id;
  j["epoch_index"] = s.epoch_index;
  if (s.track) j["track"] = std::string(to_string(*s.track));
  j["prompt_sha256"] = s.prompt_sha256;
  j["system_prompt"] = s.system_prompt;
  j["images"] = s.image_paths;
  j["target"] = s.target;
  return j.dump();
}

}  // namespace psgkit::corpus
