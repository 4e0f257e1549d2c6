#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psgkit/config.hpp"

namespace psgkit::cli {

struct Context {
  PipelineConfig config;
  bool force = false;  // ignore up-to-date checks
  std::size_t jobs = 0;  // 0 = hardware concurrency
  std::ostream* out = nullptr;
};

void synth(const Context& ctx);
void ingest(const Context& ctx);
void render(const Context& ctx);
void descriptors(const Context& ctx);
void stage(const Context& ctx);

struct CorpusOptions {
  int phase = 2;
  std::string track = "fine";
  std::optional<std::filesystem::path> annotations;  // default: derived from `stage` output
};
void build_corpus(const Context& ctx, const CorpusOptions& o);

struct RftOptions {
  std::filesystem::path candidates;
  std::filesystem::path gold;
  std::filesystem::path out;
};
void select_rft(const Context& ctx, const RftOptions& o);

struct EvaluateOptions {
  std::vector<std::filesystem::path> truth;  // hypnogram CSVs; default: raw/<s>/script.csv
  std::vector<std::filesystem::path> pred;   // default: stage/<s>.hypnogram.csv
  std::optional<std::filesystem::path> out_dir;
};
void evaluate(const Context& ctx, const EvaluateOptions& o);

struct SampleEvalOptions {
  std::optional<std::filesystem::path> out;  // default: eval/session.json
};
void sample_eval(const Context& ctx, const SampleEvalOptions& o);

struct ServeOptions {
  std::filesystem::path session;
  std::filesystem::path store;
  std::optional<std::filesystem::path> ui_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
};
void serve(const Context& ctx, const ServeOptions& o);

}  // namespace psgkit::cli
