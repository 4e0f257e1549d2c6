#include "psgkit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/resources.hpp"
#include "psgkit_version.hpp"

namespace psgkit {

namespace {

using ojson = nlohmann::ordered_json;

// Lists the fields of each section once; used for writing and reading.
template <class F>
void visit(io::ConditioningConfig& c, F&& f) {
  f("eeg_eog_low_hz", c.eeg_eog_low_hz);
  f("eeg_eog_high_hz", c.eeg_eog_high_hz);
  f("emg_low_hz", c.emg_low_hz);
  f("emg_high_hz", c.emg_high_hz);
  f("filter_order", c.filter_order);
  f("notch_hz", c.notch_hz);
  f("notch_q", c.notch_q);
  f("target_rate_hz", c.target_rate_hz);
}

template <class F>
void visit(render::RenderConfig& c, F&& f) {
  f("width", c.width);
  f("height", c.height);
  f("eeg_eog_scale_uv", c.eeg_eog_scale_uv);
  f("chin_scale_uv", c.chin_scale_uv);
  f("grid", c.grid);
  f("antialias", c.antialias);
}

template <class F>
void visit(features::DetectorConfig& c, F&& f) {
  f("alpha_power_ratio", c.alpha_power_ratio);
  f("spindle_low_hz", c.spindle_low_hz);
  f("spindle_high_hz", c.spindle_high_hz);
  f("spindle_rms_window_s", c.spindle_rms_window_s);
  f("spindle_min_envelope_uv", c.spindle_min_envelope_uv);
  f("spindle_median_factor", c.spindle_median_factor);
  f("spindle_min_duration_s", c.spindle_min_duration_s);
  f("kc_lowpass_hz", c.kc_lowpass_hz);
  f("kc_min_duration_s", c.kc_min_duration_s);
  f("kc_max_duration_s", c.kc_max_duration_s);
  f("kc_min_p2p_uv", c.kc_min_p2p_uv);
  f("kc_arousal_window_s", c.kc_arousal_window_s);
  f("vertex_lowpass_hz", c.vertex_lowpass_hz);
  f("vertex_min_duration_s", c.vertex_min_duration_s);
  f("vertex_max_duration_s", c.vertex_max_duration_s);
  f("vertex_min_p2p_uv", c.vertex_min_p2p_uv);
  f("isolation_ratio", c.isolation_ratio);
  f("swa_low_hz", c.swa_low_hz);
  f("swa_high_hz", c.swa_high_hz);
  f("swa_min_p2p_uv", c.swa_min_p2p_uv);
  f("eye_deflection_uv", c.eye_deflection_uv);
  f("eye_correlation", c.eye_correlation);
  f("sem_min_deflection_ms", c.sem_min_deflection_ms);
  f("blink_min_hz", c.blink_min_hz);
  f("blink_max_hz", c.blink_max_hz);
  f("chin_low_uv", c.chin_low_uv);
  f("artifact_uv", c.artifact_uv);
  f("artifact_sample_fraction", c.artifact_sample_fraction);
  f("artifact_chin_mav_uv", c.artifact_chin_mav_uv);
  f("arousal_power_ratio", c.arousal_power_ratio);
  f("arousal_min_s", c.arousal_min_s);
  f("arousal_quiet_s", c.arousal_quiet_s);
  f("lamf_low_hz", c.lamf_low_hz);
  f("lamf_high_hz", c.lamf_high_hz);
  f("lamf_max_p2p_uv", c.lamf_max_p2p_uv);
  f("theta_low_hz", c.theta_low_hz);
  f("theta_high_hz", c.theta_high_hz);
  f("slowing_min_hz", c.slowing_min_hz);
}

template <class T>
ojson section_to_json(T section) {
  ojson j = ojson::object();
  visit(section, [&](const char* key, const auto& v) { j[key] = v; });
  return j;
}

template <class T>
void section_from_json(const nlohmann::json& j, T& section, const std::string& name) {
  if (!j.is_object()) throw ConfigError(name + " must be an object");
  std::set<std::string> known;
  visit(section, [&](const char* key, auto& v) {
    known.insert(key);
    if (!j.contains(key)) return;
    using V = std::decay_t<decltype(v)>;
    const auto& x = j.at(key);
    if constexpr (std::is_same_v<V, bool>) {
      if (!x.is_boolean()) throw ConfigError(name + "." + key + " must be a boolean");
    } else if constexpr (std::is_integral_v<V>) {
      if (!x.is_number_integer()) throw ConfigError(name + "." + key + " must be an integer");
    } else {
      if (!x.is_number()) throw ConfigError(name + "." + key + " must be a number");
    }
    v = x.get<V>();
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key " + name + "." + key);
  }
}

ojson pairs_json(const std::vector<std::pair<std::string, std::string>>& v) {
  ojson a = ojson::array();
  for (const auto& [path, hash] : v) a.push_back({{"path", path}, {"sha256", hash}});
  return a;
}

std::vector<std::pair<std::string, std::string>> pairs_from_json(const nlohmann::json& a) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& x : a) out.emplace_back(x.at("path").get<std::string>(), x.at("sha256").get<std::string>());
  return out;
}

}  // namespace

std::string_view version() noexcept { return PSGKIT_VERSION_STRING; }

std::string config_json(const PipelineConfig& c) {
  ojson j;
  j["workdir"] = c.workdir.generic_string();
  j["input_dir"] = c.input_dir.generic_string();
  j["channel_manifest"] = c.channel_manifest ? ojson(c.channel_manifest->generic_string()) : ojson(nullptr);
  j["conditioning"] = section_to_json(c.conditioning);
  j["render"] = section_to_json(c.render);
  j["detectors"] = section_to_json(c.detectors);
  j["seed"] = c.seed;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["ci_level"] = c.ci_level;
  j["eval_epochs_per_subject"] = c.eval_epochs_per_subject;
  return j.dump(2) + "\n";
}

PipelineConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  PipelineConfig c;
  static const std::set<std::string> kKeys = {"workdir",   "input_dir",  "channel_manifest",
                                              "conditioning", "render",  "detectors",
                                              "seed",      "bootstrap_resamples", "ci_level",
                                              "eval_epochs_per_subject"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw ConfigError("unknown config key " + key);
  }
  try {
    if (j.contains("workdir")) c.workdir = j["workdir"].get<std::string>();
    if (j.contains("input_dir")) c.input_dir = j["input_dir"].get<std::string>();
    if (j.contains("channel_manifest") && !j["channel_manifest"].is_null()) {
      c.channel_manifest = j["channel_manifest"].get<std::string>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bootstrap_resamples")) c.bootstrap_resamples = j["bootstrap_resamples"].get<std::size_t>();
    if (j.contains("ci_level")) c.ci_level = j["ci_level"].get<double>();
    if (j.contains("eval_epochs_per_subject")) {
      c.eval_epochs_per_subject = j["eval_epochs_per_subject"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("conditioning")) section_from_json(j["conditioning"], c.conditioning, "conditioning");
  if (j.contains("render")) section_from_json(j["render"], c.render, "render");
  if (j.contains("detectors")) section_from_json(j["detectors"], c.detectors, "detectors");
  if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) throw ConfigError("ci_level must lie in (0, 1)");
  if (c.render.width <= 0 || c.render.height <= 0) throw ConfigError("render size must be positive");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_sha256(const PipelineConfig& c) { return sha256_hex(config_json(c)); }

std::string file_sha256(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return sha256_hex(ss.str());
}

Provenance make_provenance(std::string step, const PipelineConfig& config,
                           const std::vector<std::filesystem::path>& inputs) {
  Provenance p;
  p.step = std::move(step);
  p.tool_version = std::string(version());
  // Where the workdir lives is not part of what was computed.
  PipelineConfig located = config;
  located.workdir.clear();
  located.input_dir.clear();
  p.config_sha256 = config_sha256(located);
  p.seed = config.seed;
  std::string material = p.step + '\n' + p.tool_version + '\n' + p.config_sha256 + '\n' + std::to_string(p.seed);
  for (const auto& in : inputs) {
    p.inputs.emplace_back(in.generic_string(), file_sha256(in));
    // File name and content only, so the fingerprint survives moving the workdir.
    material += '\n' + in.filename().generic_string() + ' ' + p.inputs.back().second;
  }
  p.fingerprint = sha256_hex(material);
  return p;
}

std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  return artifact.string() + ".prov.json";
}

void write_sidecar(const std::filesystem::path& artifact, Provenance p,
                   const std::vector<std::filesystem::path>& outputs) {
  p.outputs.clear();
  const auto base = std::filesystem::absolute(artifact).parent_path();
  for (const auto& out : outputs) {
    p.outputs.emplace_back(std::filesystem::absolute(out).lexically_relative(base).generic_string(), file_sha256(out));
  }
  ojson j;
  j["tool"] = "psgkit";
  j["tool_version"] = p.tool_version;
  j["step"] = p.step;
  j["config_sha256"] = p.config_sha256;
  j["seed"] = p.seed;
  j["fingerprint"] = p.fingerprint;
  j["inputs"] = pairs_json(p.inputs);
  j["outputs"] = pairs_json(p.outputs);
  std::ofstream os(sidecar_path(artifact), std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + sidecar_path(artifact).string());
  os << j.dump(2) << '\n';
}

std::optional<Provenance> read_sidecar(const std::filesystem::path& artifact) {
  std::ifstream is(sidecar_path(artifact), std::ios::binary);
  if (!is) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(is);
    Provenance p;
    p.step = j.at("step").get<std::string>();
    p.tool_version = j.at("tool_version").get<std::string>();
    p.config_sha256 = j.at("config_sha256").get<std::string>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.fingerprint = j.at("fingerprint").get<std::string>();
    p.inputs = pairs_from_json(j.at("inputs"));
    p.outputs = pairs_from_json(j.at("outputs"));
    return p;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

bool up_to_date(const std::filesystem::path& artifact, const Provenance& expected) {
  const auto p = read_sidecar(artifact);
  if (!p || p->fingerprint != expected.fingerprint || p->outputs.empty()) return false;
  const auto base = std::filesystem::absolute(artifact).parent_path();
  for (const auto& [path, hash] : p->outputs) {
    std::error_code ec;
    if (!std::filesystem::exists(base / path, ec)) return false;
    if (file_sha256(base / path) != hash) return false;
  }
  return true;
}

}  // namespace psgkit
