#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psgkit/features.hpp"
#include "psgkit/psg_io.hpp"
#include "psgkit/renderer.hpp"

namespace psgkit {

std::string_view version() noexcept;

// Everything a pipeline run depends on. File form is JSON; keys mirror the
// field names, every key optional, unknown keys rejected.
struct PipelineConfig {
  std::filesystem::path workdir = "work";
  std::filesystem::path input_dir;  // recordings to ingest; empty = <workdir>/raw
  std::optional<std::filesystem::path> channel_manifest;
  io::ConditioningConfig conditioning;
  render::RenderConfig render;
  features::DetectorConfig detectors;
  std::uint64_t seed = 2024;  // synthetic cohort and evaluation RNG
  std::size_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
  std::size_t eval_epochs_per_subject = 10;

  std::filesystem::path raw_dir() const { return input_dir.empty() ? workdir / "raw" : input_dir; }
};

std::string config_json(const PipelineConfig& c);  // canonical, pretty-printed
PipelineConfig parse_config(std::string_view json);  // throws ConfigError
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_sha256(const PipelineConfig& c);

// Provenance sidecar written next to every artifact (`<artifact>.prov.json`).
// `fingerprint` hashes the step, tool version, config and input contents, so a
// rerun with identical inputs can skip work.
struct Provenance {
  std::string step;
  std::string tool_version;
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path relative to the sidecar, sha256
  std::string fingerprint;
};

std::string file_sha256(const std::filesystem::path& path);  // throws IoError

// Fingerprint of (step, version, config hash, seed, input names and hashes).
Provenance make_provenance(std::string step, const PipelineConfig& config,
                           const std::vector<std::filesystem::path>& inputs);

std::filesystem::path sidecar_path(const std::filesystem::path& artifact);
void write_sidecar(const std::filesystem::path& artifact, Provenance p,
                   const std::vector<std::filesystem::path>& outputs);
std::optional<Provenance> read_sidecar(const std::filesystem::path& artifact);

// True when the sidecar exists with the same fingerprint and every recorded
// output still exists with its recorded hash.
bool up_to_date(const std::filesystem::path& artifact, const Provenance& expected);

}  // namespace psgkit
