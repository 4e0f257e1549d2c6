#include "psgkit/psg_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psgkit/dsp/resample.hpp"
#include "psgkit/errors.hpp"

namespace psgkit::io {

namespace fs = std::filesystem;
using nlohmann::json;

void ConditioningConfig::validate(double source_rate_hz) const {
  if (!(eeg_eog_low_hz > 0.0 && eeg_eog_low_hz < eeg_eog_high_hz)) {
    throw ConfigError("EEG/EOG band must satisfy 0 < low < high");
  }
  if (!(emg_low_hz > 0.0 && emg_low_hz < emg_high_hz)) {
    throw ConfigError("EMG band must satisfy 0 < low < high");
  }
  if (filter_order < 1) throw ConfigError("filter order must be >= 1");
  if (!(notch_q > 0.0)) throw ConfigError("notch Q must be positive");
  if (target_rate_hz <= 0) throw ConfigError("target rate must be positive");
  const double nyquist = source_rate_hz / 2.0;
  if (!(notch_hz > 0.0 && notch_hz < nyquist)) {
    throw ConfigError("notch frequency " + std::to_string(notch_hz) +
                      " Hz outside (0, Nyquist) for source rate " + std::to_string(source_rate_hz));
  }
  if (!(eeg_eog_high_hz < nyquist)) {
    throw ConfigError("EEG/EOG high edge must be below the source Nyquist frequency");
  }
  if (!(emg_low_hz < nyquist)) {
    throw ConfigError("EMG low edge must be below the source Nyquist frequency");
  }
}

ChannelManifest ChannelManifest::identity() {
  ChannelManifest m;
  for (Channel c : kMontage) m.source_to_label.emplace(std::string(label(c)), std::string(label(c)));
  return m;
}

ChannelManifest ChannelManifest::from_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  ChannelManifest m;
  if (!j.contains("channels") || !j["channels"].is_object()) {
    throw FormatError("manifest " + path.string() + " lacks a \"channels\" object");
  }
  for (const auto& [src, lbl] : j["channels"].items()) {
    if (!lbl.is_string()) throw FormatError("manifest channel values must be strings");
    m.source_to_label.emplace(src, lbl.get<std::string>());
  }
  if (j.contains("sample_rate_hz")) m.sample_rate_hz = j["sample_rate_hz"].get<double>();
  return m;
}

namespace {

std::vector<double> read_f32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw FormatError("cannot open channel file " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 4 != 0) throw FormatError(path.string() + ": size is not a multiple of 4 bytes");
  in.seekg(0);
  std::vector<std::uint32_t> raw(size / 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError("short read on " + path.string());
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::uint32_t w = raw[i];
    if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
    float f;
    std::memcpy(&f, &w, sizeof f);
    if (!std::isfinite(f)) throw FormatError(path.string() + ": non-finite sample");
    out[i] = f;
  }
  return out;
}

void write_f32(const fs::path& path, const std::vector<double>& samples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  std::vector<std::uint32_t> raw(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto f = static_cast<float>(samples[i]);
    std::uint32_t w;
    std::memcpy(&w, &f, sizeof w);
    if constexpr (std::endian::native == std::endian::big) w = __builtin_bswap32(w);
    raw[i] = w;
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
}

// Resolves montage labels from source names; throws MontageError for gaps.
std::array<std::string, kChannelCount> resolve_sources(const std::vector<std::string>& sources,
                                                       const ChannelManifest& manifest) {
  std::array<std::string, kChannelCount> chosen;
  std::array<bool, kChannelCount> have{};
  for (const std::string& src : sources) {
    auto it = manifest.source_to_label.find(src);
    if (it == manifest.source_to_label.end()) continue;
    auto ch = channel_from_label(it->second);
    if (!ch) throw MontageError("manifest maps \"" + src + "\" to unknown label \"" + it->second + "\"");
    const std::size_t i = index_of(*ch);
    if (have[i]) throw MontageError("more than one source maps to " + it->second);
    have[i] = true;
    chosen[i] = src;
  }
  std::string missing;
  for (Channel c : kMontage) {
    if (!have[index_of(c)]) {
      if (!missing.empty()) missing += ", ";
      missing += label(c);
    }
  }
  if (!missing.empty()) throw MontageError("unresolved montage channels: " + missing);
  return chosen;
}

void truncate_to_shortest(Recording& rec) {
  std::size_t n = rec.channels[0].samples.size();
  for (const auto& ch : rec.channels) n = std::min(n, ch.samples.size());
  for (auto& ch : rec.channels) ch.samples.resize(n);
}

Recording load_sidecar(const fs::path& path, const ChannelManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.contains("sample_rate_hz") || !j["sample_rate_hz"].is_number()) {
    throw FormatError(path.string() + ": missing numeric sample_rate_hz");
  }
  if (!j.contains("channels") || !j["channels"].is_object()) {
    throw FormatError(path.string() + ": missing channels object");
  }
  const double rate = j["sample_rate_hz"].get<double>();
  if (!(rate > 0.0)) throw FormatError(path.string() + ": sample rate must be positive");

  std::vector<std::string> sources;
  for (const auto& [src, file] : j["channels"].items()) {
    if (!file.is_string()) throw FormatError(path.string() + ": channel file names must be strings");
    sources.push_back(src);
  }
  const auto chosen = resolve_sources(sources, manifest);

  Recording rec;
  rec.subject_id = j.value("subject_id", path.stem().string());
  rec.source_rate_hz = rate;
  for (Channel c : kMontage) {
    const std::string& src = chosen[index_of(c)];
    ChannelSignal& sig = rec[c];
    sig.channel = c;
    sig.sample_rate_hz = rate;
    sig.samples = read_f32(path.parent_path() / j["channels"][src].get<std::string>());
  }
  truncate_to_shortest(rec);
  return rec;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cells.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Recording load_csv(const fs::path& path, const ChannelManifest& manifest) {
  if (!manifest.sample_rate_hz || !(*manifest.sample_rate_hz > 0.0)) {
    throw FormatError("CSV input requires sample_rate_hz in the manifest");
  }
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  const std::vector<std::string> header = split_csv_line(line);
  const auto chosen = resolve_sources(header, manifest);

  std::array<std::size_t, kChannelCount> column{};
  for (Channel c : kMontage) {
    const auto it = std::find(header.begin(), header.end(), chosen[index_of(c)]);
    column[index_of(c)] = static_cast<std::size_t>(it - header.begin());
  }

  Recording rec;
  rec.subject_id = path.stem().string();
  rec.source_rate_hz = *manifest.sample_rate_hz;
  for (Channel c : kMontage) {
    rec[c].channel = c;
    rec[c].sample_rate_hz = rec.source_rate_hz;
  }
  std::array<bool, kChannelCount> ended{};
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    for (Channel c : kMontage) {
      const std::size_t i = index_of(c);
      const std::size_t col = column[i];
      const bool blank = col >= cells.size() || cells[col].empty();
      if (blank) {
        ended[i] = true;
        continue;
      }
      if (ended[i]) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": value after blank in " +
                          std::string(label(c)));
      }
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(cells[col], &used);
        if (used != cells[col].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad number \"" +
                          cells[col] + "\"");
      }
      if (!std::isfinite(v)) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": non-finite sample");
      }
      rec[c].samples.push_back(v);
    }
  }
  truncate_to_shortest(rec);
  return rec;
}

}  // namespace

Recording load_recording(const fs::path& path, const ChannelManifest& manifest) {
  if (!fs::exists(path)) throw FormatError("no such recording: " + path.string());
  const std::string ext = path.extension().string();
  if (ext == ".json") return load_sidecar(path, manifest);
  if (ext == ".csv") return load_csv(path, manifest);
  throw FormatError("unsupported recording container: " + path.string());
}

fs::path write_recording(const Recording& rec, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  j["subject_id"] = rec.subject_id;
  j["sample_rate_hz"] = rec.channels[0].sample_rate_hz;
  json chans = json::object();
  for (Channel c : kMontage) {
    const std::string file = std::string(label(c)) + ".f32";
    write_f32(dir / file, rec[c].samples);
    chans[std::string(label(c))] = file;
  }
  j["channels"] = chans;
  const fs::path sidecar = dir / "recording.json";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw IoError("cannot write " + sidecar.string());
  out << j.dump(2) << '\n';
  return sidecar;
}

ChannelSignal condition_channel(const ChannelSignal& signal, const ConditioningConfig& cfg) {
  const double fs = signal.sample_rate_hz;
  if (signal.duration_s() < 2.0) {
    throw SignalTooShort(std::string(label(signal.channel)) + ": " +
                         std::to_string(signal.duration_s()) + " s is below the 2 s minimum");
  }
  for (double v : signal.samples) {
    if (!std::isfinite(v)) throw FormatError(std::string(label(signal.channel)) + ": non-finite sample");
  }
  cfg.validate(fs);

  dsp::SosFilter band;
  if (signal.kind() == ChannelKind::EMG) {
    // The EMG upper edge is above Nyquist for rates <= 200 Hz; degrade to a
    // high-pass there.
    if (cfg.emg_high_hz < fs / 2.0) {
      band = dsp::butterworth_bandpass(cfg.filter_order, cfg.emg_low_hz, cfg.emg_high_hz, fs);
    } else {
      band = dsp::butterworth_highpass(cfg.filter_order, cfg.emg_low_hz, fs);
    }
  } else {
    band = dsp::butterworth_bandpass(cfg.filter_order, cfg.eeg_eog_low_hz, cfg.eeg_eog_high_hz, fs);
  }
  const dsp::SosFilter cascade = band.then(dsp::iir_notch(cfg.notch_hz, cfg.notch_q, fs));

  ChannelSignal out;
  out.channel = signal.channel;
  out.sample_rate_hz = fs;
  out.samples = dsp::filtfilt(cascade, signal.samples);
  return out;
}

ChannelSignal resample_signal(const ChannelSignal& signal, int target_hz) {
  if (target_hz <= 0) throw ResampleError("target rate must be positive");
  ChannelSignal out;
  out.channel = signal.channel;
  out.sample_rate_hz = target_hz;
  if (std::abs(signal.sample_rate_hz - target_hz) < 1e-9) {
    out.samples = signal.samples;
    return out;
  }
  const auto [up, down] = dsp::rational_ratio(signal.sample_rate_hz, target_hz);
  const dsp::PolyphaseResampler rs(up, down);
  out.samples = rs.apply(signal.samples);
  return out;
}

Recording condition_recording(const Recording& rec, const ConditioningConfig& cfg) {
  Recording out;
  out.subject_id = rec.subject_id;
  out.source_rate_hz = rec.source_rate_hz;
  for (Channel c : kMontage) {
    out[c] = resample_signal(condition_channel(rec[c], cfg), cfg.target_rate_hz);
  }
  return out;
}

std::vector<Epoch> segment_epochs(const Recording& rec) {
  for (const auto& ch : rec.channels) {
    if (std::abs(ch.sample_rate_hz - kTargetRateHz) > 1e-9) {
      throw FormatError("segment_epochs requires 100 Hz channels, got " +
                        std::to_string(ch.sample_rate_hz));
    }
    if (ch.samples.size() != rec.channels[0].samples.size()) {
      throw FormatError("segment_epochs requires equal channel lengths");
    }
  }
  const std::size_t n = rec.samples_per_channel();
  const std::size_t count = n / kSamplesPerEpoch;
  if (count == 0) {
    throw EmptyRecording(rec.subject_id + ": " + std::to_string(rec.duration_s()) +
                         " s is shorter than one 30-s epoch");
  }
  std::vector<Epoch> epochs;
  epochs.reserve(count);
  for (std::size_t e = 0; e < count; ++e) {
    Epoch ep(e);
    for (Channel c : kMontage) {
      const auto& src = rec[c].samples;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(e * kSamplesPerEpoch), kSamplesPerEpoch,
                  ep.channel(c).begin());
    }
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

Recording concatenate_epochs(const std::vector<Epoch>& epochs, const std::string& subject_id) {
  Recording rec;
  rec.subject_id = subject_id;
  rec.source_rate_hz = kTargetRateHz;
  for (Channel c : kMontage) {
    ChannelSignal& sig = rec[c];
    sig.channel = c;
    sig.sample_rate_hz = kTargetRateHz;
    sig.samples.reserve(epochs.size() * kSamplesPerEpoch);
    for (const Epoch& ep : epochs) {
      const auto ch = ep.channel(c);
      sig.samples.insert(sig.samples.end(), ch.begin(), ch.end());
    }
  }
  return rec;
}

}  // namespace psgkit::io
