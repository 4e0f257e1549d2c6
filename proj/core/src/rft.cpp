#include "psgkit/rft.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"

namespace psgkit::rft {

namespace {

// Blocks whose assigned characters are (almost entirely) letters of a
// non-Latin script. Latin blocks, general punctuation, symbols, emoji and
// the mathematical alphanumerics are deliberately absent.
struct Range {
  char32_t lo, hi;
};
constexpr std::array<Range, 47> kNonLatinLetters = {{
    {0x0370, 0x03FF},   {0x0400, 0x052F},   {0x0530, 0x058F},   {0x0590, 0x05FF},
    {0x0600, 0x06FF},   {0x0700, 0x074F},   {0x0750, 0x077F},   {0x0780, 0x07BF},
    {0x07C0, 0x07FF},   {0x0800, 0x08FF},   {0x0900, 0x0DFF},   {0x0E00, 0x0EFF},
    {0x0F00, 0x0FFF},   {0x1000, 0x109F},   {0x10A0, 0x10FF},   {0x1100, 0x11FF},
    {0x1200, 0x139F},   {0x13A0, 0x13FF},   {0x1400, 0x167F},   {0x1680, 0x169F},
    {0x16A0, 0x16FF},   {0x1700, 0x18AF},   {0x1900, 0x1AAF},   {0x1B00, 0x1C7F},
    {0x1F00, 0x1FFF},   {0x2C00, 0x2C5F},   {0x2C80, 0x2DFF},   {0x2E80, 0x2FDF},
    {0x3040, 0x30FF},   {0x3100, 0x31BF},   {0x31F0, 0x31FF},   {0x3400, 0x4DBF},
    {0x4E00, 0x9FFF},   {0xA000, 0xA4FF},   {0xA500, 0xA6FF},   {0xA800, 0xABFF},
    {0xAC00, 0xD7FF},   {0xF900, 0xFAFF},   {0xFB1D, 0xFB4F},   {0xFB50, 0xFDFF},
    {0xFE70, 0xFEFF},   {0xFF66, 0xFFDC},   {0x10000, 0x1CFFF}, {0x1E000, 0x1E8FF},
    {0x1E900, 0x1EEFF}, {0x20000, 0x3134F}, {0x31350, 0x323AF},
}};

// Greek letters that appear as units or band names in English clinical text.
constexpr std::u32string_view kGreekSymbols = U"αβγδθκλμπστωΔΩ";

bool non_latin_letter(char32_t c) {
  if (kGreekSymbols.find(c) != std::u32string_view::npos) return false;
  if (c >= 0x0300 && c <= 0x036F) return false;  // combining diacritics
  for (const Range& r : kNonLatinLetters) {
    if (c >= r.lo && c <= r.hi) return true;
  }
  return false;
}

// Next code point; returns false on malformed input.
bool decode(std::string_view s, std::size_t& i, char32_t& out) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = 0;
  if (b0 < 0x80) {
    out = b0;
    len = 1;
  } else if ((b0 & 0xE0) == 0xC0) {
    out = b0 & 0x1F;
    len = 2;
  } else if ((b0 & 0xF0) == 0xE0) {
    out = b0 & 0x0F;
    len = 3;
  } else if ((b0 & 0xF8) == 0xF0) {
    out = b0 & 0x07;
    len = 4;
  } else {
    return false;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) return false;
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) return false;
    out = (out << 6) | (b & 0x3F);
  }
  static constexpr std::array<char32_t, 5> kMin = {0, 0, 0x80, 0x800, 0x10000};
  if (out < kMin[static_cast<std::size_t>(len)] || out > 0x10FFFF || (out >= 0xD800 && out <= 0xDFFF)) {
    return false;
  }
  i += static_cast<std::size_t>(len);
  return true;
}

// End (exclusive) of the balanced object starting at `open`, or npos.
std::size_t object_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

ParseResult failure(std::string why) { return {std::nullopt, std::move(why)}; }

TokenLogProbs logprobs_from_json(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array()) throw FormatError(std::string(key) + " must be an array");
  TokenLogProbs lp;
  lp.values.reserve(a.size());
  for (const auto& v : a) {
    if (!v.is_number()) throw FormatError(std::string(key) + " holds a non-number");
    lp.values.push_back(v.get<double>());
  }
  return lp;
}

}  // namespace

void TokenLogProbs::validate() const {
  if (values.empty()) throw DomainError("log-probability stream is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] > 0.0) {
      throw DomainError(fmt::format("log-probability {} at token {} is not finite and <= 0", values[i], i));
    }
  }
}

ParseResult parse_response(std::string_view text) {
  nlohmann::json obj;
  bool found = false;
  for (std::size_t open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const std::size_t end = object_end(text, open);
    if (end == std::string_view::npos) continue;
    try {
      auto j = nlohmann::json::parse(text.substr(open, end - open));
      if (j.is_object()) {
        obj = std::move(j);
        found = true;
        break;
      }
    } catch (const nlohmann::json::exception&) {
    }
  }
  if (!found) return failure("no JSON object found");

  ParsedResponse out;
  if (!obj.contains("sleep_stage") || !obj["sleep_stage"].is_string()) return failure("missing sleep_stage");
  const auto stage = parse_stage(obj["sleep_stage"].get<std::string>());
  if (!stage) return failure("unknown sleep_stage \"" + obj["sleep_stage"].get<std::string>() + "\"");
  out.sleep_stage = *stage;

  if (!obj.contains("applicable_rules") || !obj["applicable_rules"].is_array()) {
    return failure("missing applicable_rules");
  }
  for (const auto& id : obj["applicable_rules"]) {
    if (!id.is_string()) return failure("rule identifiers must be strings");
    const auto rule = parse_rule(id.get<std::string>());
    if (!rule) return failure("unknown rule identifier \"" + id.get<std::string>() + "\"");
    out.applicable_rules.push_back(*rule);
  }
  std::sort(out.applicable_rules.begin(), out.applicable_rules.end());
  out.applicable_rules.erase(std::unique(out.applicable_rules.begin(), out.applicable_rules.end()),
                             out.applicable_rules.end());

  if (obj.contains("reasoning_text")) {
    if (!obj["reasoning_text"].is_string()) return failure("reasoning_text must be a string");
    out.reasoning_text = obj["reasoning_text"].get<std::string>();
  }
  return {std::move(out), {}};
}

bool english_only(std::string_view utf8) {
  std::size_t i = 0;
  while (i < utf8.size()) {
    char32_t c = 0;
    if (!decode(utf8, i, c)) return false;
    if (non_latin_letter(c)) return false;
  }
  return true;
}

bool validate_candidate(const CandidateResponse& candidate, const corpus::AnnotationRecord& gold) {
  const ParseResult r = parse_response(candidate.raw_text);
  if (!r) return false;
  if (r.parsed->sleep_stage != gold.sleep_stage) return false;
  std::vector<RuleId> want = gold.applicable_rules;
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  if (r.parsed->applicable_rules != want) return false;
  // Selection exists to harvest rationales, so one must be present.
  if (!r.parsed->reasoning_text || r.parsed->reasoning_text->empty()) return false;
  return english_only(*r.parsed->reasoning_text);
}

double perplexity(const TokenLogProbs& lp) {
  lp.validate();
  double sum = 0.0;
  for (double v : lp.values) sum += v;
  return std::exp(-sum / static_cast<double>(lp.values.size()));
}

double ppl_gain(const CandidateResponse& candidate) {
  if (candidate.logprobs_full.values.size() != candidate.logprobs_textonly.values.size()) {
    throw AlignmentError(fmt::format("{}: full context has {} tokens, text-only has {}", candidate.epoch_id,
                                     candidate.logprobs_full.values.size(),
                                     candidate.logprobs_textonly.values.size()));
  }
  return perplexity(candidate.logprobs_full) - perplexity(candidate.logprobs_textonly);
}

std::optional<std::size_t> select_best(const std::vector<CandidateResponse>& candidates,
                                       const corpus::AnnotationRecord& gold) {
  std::optional<std::size_t> best;
  double best_gain = 0.0;
  double best_ppl = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!validate_candidate(candidates[i], gold)) continue;
    const double gain = ppl_gain(candidates[i]);
    const double ppl = perplexity(candidates[i].logprobs_full);
    if (!best || gain < best_gain || (gain == best_gain && ppl < best_ppl)) {
      best = i;
      best_gain = gain;
      best_ppl = ppl;
    }
  }
  return best;
}

std::string epoch_id(const std::string& subject_id, std::size_t epoch_index) {
  return fmt::format("{}_{:05}", subject_id, epoch_index);
}

std::optional<std::pair<std::string, std::size_t>> parse_epoch_id(std::string_view id) {
  const std::size_t us = id.rfind('_');
  if (us == std::string_view::npos || us == 0 || us + 1 == id.size()) return std::nullopt;
  std::size_t index = 0;
  for (char c : id.substr(us + 1)) {
    if (c < '0' || c > '9') return std::nullopt;
    index = index * 10 + static_cast<std::size_t>(c - '0');
  }
  return std::pair{std::string(id.substr(0, us)), index};
}

std::vector<CandidateResponse> parse_candidates(std::string_view jsonl) {
  std::vector<CandidateResponse> out;
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
      const auto j = nlohmann::json::parse(line);
      CandidateResponse c;
      c.epoch_id = j.at("epoch_id").get<std::string>();
      c.raw_text = j.at("raw_text").get<std::string>();
      c.logprobs_full = logprobs_from_json(j, "logprobs_full");
      c.logprobs_textonly = logprobs_from_json(j, "logprobs_textonly");
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    } catch (const FormatError& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::vector<CandidateResponse> load_candidates(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_candidates(ss.str());
}

std::vector<corpus::AnnotationRecord> select_rationales(const std::vector<CandidateResponse>& candidates,
                                                        const std::vector<corpus::AnnotationRecord>& gold,
                                                        SelectionSummary* summary) {
  std::map<std::string, std::vector<CandidateResponse>> by_epoch;
  for (const auto& c : candidates) by_epoch[c.epoch_id].push_back(c);

  SelectionSummary s;
  s.candidates = candidates.size();
  std::vector<corpus::AnnotationRecord> out;
  std::set<std::string> matched;
  for (const auto& g : gold) {
    const auto it = by_epoch.find(epoch_id(g.subject_id, g.epoch_index));
    if (it == by_epoch.end()) continue;
    matched.insert(it->first);
    ++s.epochs;
    for (const auto& c : it->second) s.valid_candidates += validate_candidate(c, g) ? 1 : 0;
    const auto best = select_best(it->second, g);
    if (!best) continue;
    corpus::AnnotationRecord r = g;
    r.reasoning_text = parse_response(it->second[*best].raw_text).parsed->reasoning_text;
    out.push_back(std::move(r));
    ++s.selected;
  }
  s.missing_gold = by_epoch.size() - matched.size();
  if (summary) *summary = s;
  return out;
}

}  // namespace psgkit::rft
