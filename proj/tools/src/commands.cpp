#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/corpus.hpp"
#include "psgkit/descriptors.hpp"
#include "psgkit/errors.hpp"
#include "psgkit/features.hpp"
#include "psgkit/metrics.hpp"
#include "psgkit/night.hpp"
#include "psgkit/psg_io.hpp"
#include "psgkit/ratings.hpp"
#include "psgkit/renderer.hpp"
#include "psgkit/rft.hpp"
#include "psgkit/rule_engine.hpp"
#include "psgkit/synth.hpp"
#include "rating_service.hpp"

namespace fs = std::filesystem;

namespace psgkit::cli {

namespace {

constexpr double kSynthRateHz = 200.0;

// Workdir layout.
fs::path raw_subject_dir(const Context& c, const std::string& s) { return c.config.raw_dir() / s; }
fs::path conditioned_dir(const Context& c, const std::string& s) { return c.config.workdir / "conditioned" / s; }
fs::path image_dir(const Context& c, const std::string& s) { return c.config.workdir / "images" / s; }
fs::path descriptor_file(const Context& c, const std::string& s) {
  return c.config.workdir / "descriptors" / (s + ".jsonl");
}
fs::path hypnogram_file(const Context& c, const std::string& s) {
  return c.config.workdir / "stage" / (s + ".hypnogram.csv");
}
fs::path rationale_file(const Context& c, const std::string& s) {
  return c.config.workdir / "stage" / (s + ".rationale.jsonl");
}
fs::path image_index(const Context& c, const std::string& s) { return image_dir(c, s) / "images.txt"; }

std::ostream& out(const Context& c) { return c.out ? *c.out : std::cout; }

// Writes through a temporary so an interrupted run never leaves a torn file.
void write_file(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// A JSON recording sidecar plus the channel files it names.
std::vector<fs::path> recording_files(const fs::path& sidecar) {
  std::vector<fs::path> files{sidecar};
  const auto j = nlohmann::json::parse(read_file(sidecar));
  for (const auto& [name, file] : j.at("channels").items()) {
    files.push_back(sidecar.parent_path() / file.get<std::string>());
  }
  return files;
}

std::vector<fs::path> conditioned_files(const Context& c, const std::string& s) {
  return recording_files(c.config.workdir / "conditioned" / s / "recording.json");
}

// Runs fn over subjects on a small worker pool; lines are printed in subject order.
void for_each_subject(const Context& ctx, const std::vector<std::string>& subjects,
                      const std::function<std::string(const std::string&)>& fn) {
  std::size_t jobs = ctx.jobs ? ctx.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, subjects.size());
  std::vector<std::string> lines(subjects.size());
  std::vector<std::exception_ptr> errors(subjects.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < subjects.size(); i = next++) {
      try {
        lines[i] = fn(subjects[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out(ctx) << lines[i] << '\n';
  }
}

// Subjects in the raw directory: subdirectories holding recording.json, or
// top-level .json/.csv recordings (named by file stem).
std::map<std::string, fs::path> raw_recordings(const Context& ctx) {
  std::map<std::string, fs::path> found;
  const fs::path dir = ctx.config.raw_dir();
  if (!fs::is_directory(dir)) throw IoError("input directory " + dir.string() + " does not exist");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "recording.json")) {
      found[e.path().filename().string()] = e.path() / "recording.json";
    } else if (e.is_regular_file()) {
      const auto ext = e.path().extension().string();
      const auto name = e.path().filename().string();
      if ((ext == ".json" || ext == ".csv") && name.find(".prov.") == std::string::npos) {
        found[e.path().stem().string()] = e.path();
      }
    }
  }
  if (found.empty()) throw IoError("no recordings under " + dir.string());
  return found;
}

std::vector<std::string> conditioned_subjects(const Context& ctx) {
  std::vector<std::string> out;
  const fs::path dir = ctx.config.workdir / "conditioned";
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "recording.json")) out.push_back(e.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no conditioned recordings under " + dir.string() + " (run ingest first)");
  return out;
}

std::vector<Epoch> load_epochs(const Context& ctx, const std::string& s) {
  const Recording rec = io::load_recording(conditioned_dir(ctx, s) / "recording.json", io::ChannelManifest::identity());
  return io::segment_epochs(rec);
}

std::string skip(std::string_view step, const std::string& s) { return fmt::format("{} {}: up-to-date", step, s); }

std::vector<corpus::AnnotationRecord> annotations_from_stage(const Context& ctx, const std::string& s,
                                                             corpus::Track track) {
  std::vector<corpus::AnnotationRecord> out;
  std::istringstream in(read_file(rationale_file(ctx, s)));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      corpus::AnnotationRecord r;
      r.subject_id = s;
      r.epoch_index = j.at("epoch_index").get<std::size_t>();
      r.sleep_stage = *parse_stage(j.at("sleep_stage").get<std::string>());
      for (const auto& id : j.at("applicable_rules")) r.applicable_rules.push_back(*parse_rule(id.get<std::string>()));
      if (r.applicable_rules.empty()) continue;  // fallback epochs carry no citation
      if (track == corpus::Track::Fine) r.reasoning_text = j.at("reasoning_text").get<std::string>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(lineno, rationale_file(ctx, s).string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<Stage> stages_of(const std::vector<rules::StageDecision>& d) {
  std::vector<Stage> out;
  for (const auto& x : d) out.push_back(x.stage);
  return out;
}

std::string relative_to_workdir(const Context& ctx, const fs::path& p) {
  return fs::relative(p, ctx.config.workdir).generic_string();
}

}  // namespace

void synth(const Context& ctx) {
  const auto cohort = night::synthetic_cohort(ctx.config.seed);
  std::vector<std::string> ids;
  std::map<std::string, const night::Subject*> by_id;
  for (const auto& s : cohort) {
    ids.push_back(s.subject_id);
    by_id[s.subject_id] = &s;
  }
  for_each_subject(ctx, ids, [&](const std::string& id) {
    const night::Subject& s = *by_id.at(id);
    const fs::path dir = raw_subject_dir(ctx, id);
    const fs::path script = dir / "script.csv";
    Provenance p = make_provenance("synth", ctx.config, {});
    if (!ctx.force && up_to_date(script, p)) return skip("synth", id);
    std::vector<synth::EpochSpec> specs;
    for (const auto& e : s.script) specs.push_back(e.spec);
    const Recording rec = synth::synthesize_recording(specs, kSynthRateHz, id);
    auto outputs = recording_files(io::write_recording(rec, dir));
    write_file(script, night::script_csv(s));
    outputs.push_back(script);
    write_sidecar(script, p, outputs);
    return fmt::format("synth {}: {} epochs at {} Hz ({})", id, s.script.size(), kSynthRateHz,
                       s.alpha_generator ? "alpha generator" : "non-generator");
  });
}

void ingest(const Context& ctx) {
  const auto recordings = raw_recordings(ctx);
  io::ChannelManifest manifest = ctx.config.channel_manifest
                                     ? io::ChannelManifest::from_json_file(*ctx.config.channel_manifest)
                                     : io::ChannelManifest::identity();
  std::vector<std::string> ids;
  for (const auto& [id, path] : recordings) ids.push_back(id);
  for_each_subject(ctx, ids, [&](const std::string& id) {
    const fs::path src = recordings.at(id);
    std::vector<fs::path> inputs = src.extension() == ".json" ? recording_files(src) : std::vector{src};
    if (ctx.config.channel_manifest) inputs.push_back(*ctx.config.channel_manifest);
    const Provenance p = make_provenance("ingest", ctx.config, inputs);
    const fs::path dst = conditioned_dir(ctx, id);
    const fs::path sidecar = dst / "recording.json";
    if (!ctx.force && up_to_date(sidecar, p)) return skip("ingest", id);
    Recording rec = io::load_recording(src, manifest);
    rec.subject_id = id;
    const Recording cond = io::condition_recording(rec, ctx.config.conditioning);
    io::write_recording(cond, dst);
    write_sidecar(sidecar, p, recording_files(sidecar));
    const auto epochs = static_cast<std::size_t>(cond.duration_s() / kEpochSeconds);
    return fmt::format("ingest {}: {:.0f} Hz -> {} Hz, {} epochs", id, rec.source_rate_hz,
                       ctx.config.conditioning.target_rate_hz, epochs);
  });
}

void render(const Context& ctx) {
  for_each_subject(ctx, conditioned_subjects(ctx), [&](const std::string& id) {
    const Provenance p = make_provenance("render", ctx.config, conditioned_files(ctx, id));
    const fs::path index = image_index(ctx, id);
    if (!ctx.force && up_to_date(index, p)) return skip("render", id);
    const auto epochs = load_epochs(ctx, id);
    std::vector<fs::path> outputs;
    std::string listing;
    for (const Epoch& e : epochs) {
      const fs::path png = image_dir(ctx, id) / render::image_filename(id, e.index());
      const auto bytes = render::encode_png(render::render_epoch(e, ctx.config.render));
      write_file(png, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
      outputs.push_back(png);
      listing += png.filename().string() + '\n';
    }
    write_file(index, listing);
    outputs.push_back(index);
    write_sidecar(index, p, outputs);
    return fmt::format("render {}: {} images", id, epochs.size());
  });
}

void descriptors(const Context& ctx) {
  for_each_subject(ctx, conditioned_subjects(ctx), [&](const std::string& id) {
    const Provenance p = make_provenance("descriptors", ctx.config, conditioned_files(ctx, id));
    const fs::path file = descriptor_file(ctx, id);
    if (!ctx.force && up_to_date(file, p)) return skip("descriptors", id);
    const auto epochs = load_epochs(ctx, id);
    std::string text;
    for (const Epoch& e : epochs) {
      text += fmt::format(R"({{"subject_id":{},"epoch_index":{},"descriptors":)",
                          nlohmann::json(id).dump(), e.index());
      text += descriptors::serialize_phase1_target(descriptors::epoch_descriptors(e));
      text += "}\n";
    }
    write_file(file, text);
    write_sidecar(file, p, {file});
    return fmt::format("descriptors {}: {} epochs", id, epochs.size());
  });
}

void stage(const Context& ctx) {
  for_each_subject(ctx, conditioned_subjects(ctx), [&](const std::string& id) {
    const Provenance p = make_provenance("stage", ctx.config, conditioned_files(ctx, id));
    const fs::path hyp = hypnogram_file(ctx, id);
    const fs::path rat = rationale_file(ctx, id);
    if (!ctx.force && up_to_date(hyp, p)) return skip("stage", id);
    const auto epochs = load_epochs(ctx, id);
    const auto feats = features::extract_recording_features(epochs, ctx.config.detectors);
    const auto decisions = rules::stage_recording(feats);
    write_file(hyp, rules::hypnogram_csv(decisions));
    write_file(rat, rules::rationale_jsonl(decisions));
    write_sidecar(hyp, p, {hyp, rat});
    std::array<std::size_t, kStageCount> counts{};
    for (const auto& d : decisions) ++counts[index_of(d.stage)];
    return fmt::format("stage {}: {} epochs (W {}, N1 {}, N2 {}, N3 {}, R {})", id, decisions.size(), counts[0],
                       counts[1], counts[2], counts[3], counts[4]);
  });
}

void build_corpus(const Context& ctx, const CorpusOptions& o) {
  const fs::path dir = ctx.config.workdir / "corpus";
  const auto subjects = conditioned_subjects(ctx);
  if (o.phase == 1) {
    const fs::path file = dir / "phase1.jsonl";
    std::vector<fs::path> inputs;
    for (const auto& s : subjects) {
      for (const auto& f : conditioned_files(ctx, s)) inputs.push_back(f);
      inputs.push_back(image_index(ctx, s));
    }
    const Provenance p = make_provenance("build-corpus phase 1", ctx.config, inputs);
    if (!ctx.force && up_to_date(file, p)) {
      out(ctx) << "build-corpus phase1: up-to-date\n";
      return;
    }
    std::string text;
    std::size_t n = 0;
    for (const auto& s : subjects) {
      for (const Epoch& e : load_epochs(ctx, s)) {
        const std::string img = relative_to_workdir(ctx, image_dir(ctx, s) / render::image_filename(s, e.index()));
        text += corpus::sample_json(corpus::build_phase1_sample(e, descriptors::epoch_descriptors(e), s, img)) + '\n';
        ++n;
      }
    }
    write_file(file, text);
    write_sidecar(file, p, {file});
    out(ctx) << fmt::format("build-corpus phase1: {} samples -> {}\n", n, file.string());
    return;
  }
  if (o.phase != 2) throw ConfigError("phase must be 1 or 2");

  const corpus::Track track = corpus::parse_track(o.track);
  const fs::path file = dir / fmt::format("phase2_{}.jsonl", o.track);
  const fs::path ann_file = dir / fmt::format("annotations_{}.jsonl", o.track);
  std::vector<fs::path> inputs;
  for (const auto& s : subjects) {
    inputs.push_back(image_index(ctx, s));
    if (!o.annotations) inputs.push_back(rationale_file(ctx, s));
  }
  if (o.annotations) inputs.push_back(*o.annotations);
  const Provenance p = make_provenance("build-corpus phase 2 " + o.track, ctx.config, inputs);
  if (!ctx.force && up_to_date(file, p)) {
    out(ctx) << fmt::format("build-corpus phase2 {}: up-to-date\n", o.track);
    return;
  }
  std::vector<corpus::AnnotationRecord> records;
  if (o.annotations) {
    records = corpus::load_annotations(*o.annotations);
  } else {
    for (const auto& s : subjects) {
      auto r = annotations_from_stage(ctx, s, track);
      records.insert(records.end(), r.begin(), r.end());
    }
  }
  std::map<std::string, std::size_t> epoch_counts;
  for (const auto& s : subjects) {
    std::istringstream idx(read_file(image_index(ctx, s)));
    std::size_t n = 0;
    for (std::string l; std::getline(idx, l);) n += l.empty() ? 0 : 1;
    epoch_counts[s] = n;
  }
  std::string text;
  std::size_t n = 0, skipped = 0;
  std::vector<corpus::AnnotationRecord> used;
  for (const auto& r : records) {
    const auto it = epoch_counts.find(r.subject_id);
    // The first and last epoch lack a neighbour on one side.
    if (it == epoch_counts.end() || r.epoch_index == 0 || r.epoch_index + 1 >= it->second) {
      ++skipped;
      continue;
    }
    std::array<std::string, 3> imgs;
    for (std::size_t k = 0; k < 3; ++k) {
      imgs[k] = relative_to_workdir(ctx, image_dir(ctx, r.subject_id) /
                                             render::image_filename(r.subject_id, r.epoch_index - 1 + k));
    }
    text += corpus::sample_json(corpus::build_phase2_sample(imgs, r, track)) + '\n';
    used.push_back(r);
    ++n;
  }
  write_file(file, text);
  corpus::write_annotations(ann_file, used);
  write_sidecar(file, p, {file, ann_file});
  out(ctx) << fmt::format("build-corpus phase2 {}: {} samples ({} without a full triplet) -> {}\n", o.track, n,
                          skipped, file.string());
}

void select_rft(const Context& ctx, const RftOptions& o) {
  const Provenance p = make_provenance("select-rft", ctx.config, {o.candidates, o.gold});
  if (!ctx.force && up_to_date(o.out, p)) {
    out(ctx) << "select-rft: up-to-date\n";
    return;
  }
  const auto candidates = rft::load_candidates(o.candidates);
  const auto gold = corpus::load_annotations(o.gold);
  rft::SelectionSummary s;
  const auto selected = rft::select_rationales(candidates, gold, &s);
  std::string text;
  for (const auto& r : selected) text += corpus::annotation_json(r) + '\n';
  write_file(o.out, text);
  write_sidecar(o.out, p, {o.out});
  out(ctx) << fmt::format("select-rft: {} candidates over {} epochs, {} valid, {} epochs selected", s.candidates,
                          s.epochs, s.valid_candidates, s.selected);
  if (s.missing_gold) out(ctx) << fmt::format(", {} epochs without gold", s.missing_gold);
  out(ctx) << '\n';
}

void evaluate(const Context& ctx, const EvaluateOptions& o) {
  std::vector<fs::path> truth = o.truth, pred = o.pred;
  if (truth.empty() && pred.empty()) {
    for (const auto& s : conditioned_subjects(ctx)) {
      truth.push_back(raw_subject_dir(ctx, s) / "script.csv");
      pred.push_back(hypnogram_file(ctx, s));
    }
  }
  if (truth.size() != pred.size()) throw ConfigError("--truth and --pred must be given in pairs");
  const fs::path dir = o.out_dir.value_or(ctx.config.workdir / "reports");
  const fs::path json_file = dir / "metrics.json";
  const fs::path text_file = dir / "metrics.txt";
  std::vector<fs::path> inputs = truth;
  inputs.insert(inputs.end(), pred.begin(), pred.end());
  const Provenance p = make_provenance("evaluate", ctx.config, inputs);
  if (!ctx.force && up_to_date(json_file, p)) {
    out(ctx) << "evaluate: up-to-date\n" << read_file(text_file);
    return;
  }
  metrics::LabeledPredictions data;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto t = rules::read_hypnogram(truth[i]);
    const auto q = rules::read_hypnogram(pred[i]);
    std::string id = pred[i].filename().string();
    id = id.substr(0, id.find('.'));
    data.push_back({id, stages_of(t), stages_of(q)});
  }
  const auto report = metrics::evaluate(data, ctx.config.bootstrap_resamples, ctx.config.ci_level, ctx.config.seed);
  write_file(json_file, metrics::report_json(report));
  write_file(text_file, metrics::report_text(report));
  write_sidecar(json_file, p, {json_file, text_file});
  out(ctx) << metrics::report_text(report);
}

void sample_eval(const Context& ctx, const SampleEvalOptions& o) {
  const fs::path file = o.out.value_or(ctx.config.workdir / "eval" / "session.json");
  const auto subjects = conditioned_subjects(ctx);
  std::vector<fs::path> inputs;
  for (const auto& s : subjects) {
    inputs.push_back(hypnogram_file(ctx, s));
    inputs.push_back(rationale_file(ctx, s));
    inputs.push_back(image_index(ctx, s));
    const fs::path truth = raw_subject_dir(ctx, s) / "script.csv";
    if (fs::exists(truth)) inputs.push_back(truth);
  }
  const Provenance p = make_provenance("sample-eval", ctx.config, inputs);
  if (!ctx.force && up_to_date(file, p)) {
    out(ctx) << "sample-eval: up-to-date\n";
    return;
  }
  fs::create_directories(file.parent_path());
  ratings::Session session;
  for (const auto& s : subjects) {
    const auto pred = rules::read_hypnogram(hypnogram_file(ctx, s));
    const fs::path truth_file = raw_subject_dir(ctx, s) / "script.csv";
    // Strata follow the reference labels when they exist, else the predictions.
    const auto strata = fs::exists(truth_file) ? rules::read_hypnogram(truth_file) : pred;
    std::map<std::size_t, std::string> rationale;
    std::istringstream in(read_file(rationale_file(ctx, s)));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      rationale[j.at("epoch_index").get<std::size_t>()] = j.at("reasoning_text").get<std::string>();
    }
    std::vector<std::pair<std::string, Stage>> pool;
    for (std::size_t i = 1; i + 1 < strata.size() && i + 1 < pred.size(); ++i) {
      pool.emplace_back(rft::epoch_id(s, i), strata[i].stage);
    }
    for (const auto& id : metrics::stratified_sample(pool, ctx.config.eval_epochs_per_subject, ctx.config.seed)) {
      const std::size_t e = rft::parse_epoch_id(id)->second;
      ratings::SessionSample x;
      x.sample_id = id;
      x.subject_id = s;
      x.epoch_index = e;
      for (std::size_t k = 0; k < 3; ++k) {
        x.images[k] = fs::relative(image_dir(ctx, s) / render::image_filename(s, e - 1 + k), file.parent_path())
                          .generic_string();
      }
      x.stage = pred[e].stage;
      x.rules = pred[e].rules;
      x.rationale = rationale[e];
      session.samples.push_back(std::move(x));
    }
  }
  write_file(file, ratings::session_json(session));
  write_sidecar(file, p, {file});
  out(ctx) << fmt::format("sample-eval: {} samples from {} subjects -> {}\n", session.samples.size(), subjects.size(),
                          file.string());
}

void serve(const Context& ctx, const ServeOptions& o) {
  service::RatingService svc({o.session, o.store, o.ui_dir});
  out(ctx) << fmt::format("serving ratings on http://{}:{} (store {})\n", o.host, o.port, o.store.string());
  out(ctx).flush();
  if (!svc.listen(o.host, o.port)) throw IoError(fmt::format("cannot listen on {}:{}", o.host, o.port));
}

}  // namespace psgkit::cli
