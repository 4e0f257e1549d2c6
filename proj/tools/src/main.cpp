#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "psgkit/errors.hpp"

namespace fs = std::filesystem;
using namespace psgkit;

int main(int argc, char** argv) {
  CLI::App app{"psgkit: PSG conditioning, rendering, rule-based staging, corpus and evaluation tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(psgkit::version()));

  std::string config_path;
  std::string workdir;
  bool force = false;
  std::size_t jobs = 0;
  app.add_option("-c,--config", config_path, "pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("-w,--workdir", workdir, "working directory (overrides the config)");
  app.add_flag("-f,--force", force, "redo work even when outputs are up to date");
  app.add_option("-j,--jobs", jobs, "subjects processed in parallel (default: all cores)");

  auto* synth = app.add_subcommand("synth", "write the scripted synthetic cohort into <workdir>/raw");
  auto* ingest = app.add_subcommand("ingest", "condition and resample recordings to 100 Hz");
  auto* render = app.add_subcommand("render", "render every epoch to a 448x224 PNG");
  auto* descriptors = app.add_subcommand("descriptors", "per-second band power / MAV JSONL");
  auto* stage = app.add_subcommand("stage", "rule-based staging: hypnogram CSV + rationale JSONL");

  cli::CorpusOptions corpus_opts;
  std::string annotations;
  auto* corpus = app.add_subcommand("build-corpus", "assemble training samples");
  corpus->add_option("--phase", corpus_opts.phase, "1 (descriptors) or 2 (staging)")->check(CLI::IsMember({1, 2}));
  corpus->add_option("--track", corpus_opts.track, "fine or coarse (phase 2)")
      ->check(CLI::IsMember({"fine", "coarse"}));
  corpus->add_option("--annotations", annotations, "annotation JSONL (default: stage output)")
      ->check(CLI::ExistingFile);

  cli::RftOptions rft_opts;
  std::string candidates, gold, rft_out;
  auto* rft = app.add_subcommand("select-rft", "pick the minimum perplexity-gain valid rationale per epoch");
  rft->add_option("--candidates", candidates, "candidate JSONL")->required()->check(CLI::ExistingFile);
  rft->add_option("--gold", gold, "gold annotation JSONL")->required()->check(CLI::ExistingFile);
  rft->add_option("-o,--out", rft_out, "selected fine-track annotation JSONL")->required();

  cli::EvaluateOptions eval_opts;
  std::vector<std::string> truth, pred;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "accuracy, macro-F1, kappa with subject bootstrap CIs");
  evaluate->add_option("--truth", truth, "reference hypnogram CSVs")->check(CLI::ExistingFile);
  evaluate->add_option("--pred", pred, "predicted hypnogram CSVs, same order")->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out-dir", eval_out, "report directory (default <workdir>/reports)");

  std::string session_out;
  auto* sample_eval = app.add_subcommand("sample-eval", "stratified epoch sample -> rating session file");
  sample_eval->add_option("-o,--out", session_out, "session file (default <workdir>/eval/session.json)");

  cli::ServeOptions serve_opts;
  std::string session, store, ui_dir;
  auto* serve = app.add_subcommand("serve", "HTTP backend for the rating workflow");
  serve->add_option("--session", session, "session file (default <workdir>/eval/session.json)");
  serve->add_option("--store", store, "rating store JSONL (default <workdir>/eval/ratings.jsonl)");
  serve->add_option("--ui-dir", ui_dir, "static files for the rating UI")->check(CLI::ExistingDirectory);
  serve->add_option("--host", serve_opts.host, "bind address");
  serve->add_option("--port", serve_opts.port, "port");

  auto* show_config = app.add_subcommand("config", "print the effective pipeline config");

  CLI11_PARSE(app, argc, argv);

  try {
    cli::Context ctx;
    if (!config_path.empty()) ctx.config = load_config(config_path);
    if (!workdir.empty()) ctx.config.workdir = workdir;
    ctx.force = force;
    ctx.jobs = jobs;

    if (*show_config) {
      std::cout << config_json(ctx.config);
    } else if (*synth) {
      cli::synth(ctx);
    } else if (*ingest) {
      cli::ingest(ctx);
    } else if (*render) {
      cli::render(ctx);
    } else if (*descriptors) {
      cli::descriptors(ctx);
    } else if (*stage) {
      cli::stage(ctx);
    } else if (*corpus) {
      if (!annotations.empty()) corpus_opts.annotations = annotations;
      cli::build_corpus(ctx, corpus_opts);
    } else if (*rft) {
      cli::select_rft(ctx, {candidates, gold, rft_out});
    } else if (*evaluate) {
      eval_opts.truth.assign(truth.begin(), truth.end());
      eval_opts.pred.assign(pred.begin(), pred.end());
      if (!eval_out.empty()) eval_opts.out_dir = eval_out;
      cli::evaluate(ctx, eval_opts);
    } else if (*sample_eval) {
      cli::SampleEvalOptions o;
      if (!session_out.empty()) o.out = session_out;
      cli::sample_eval(ctx, o);
    } else if (*serve) {
      serve_opts.session = session.empty() ? ctx.config.workdir / "eval" / "session.json" : fs::path(session);
      serve_opts.store = store.empty() ? ctx.config.workdir / "eval" / "ratings.jsonl" : fs::path(store);
      if (!ui_dir.empty()) serve_opts.ui_dir = ui_dir;
      cli::serve(ctx, serve_opts);
    }
  } catch (const psgkit::Error& e) {
    std::cerr << fmt::format("error [{}]: {}\n", e.category(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << fmt::format("error [internal]: {}\n", e.what());
    return 1;
  }
  return 0;
}
