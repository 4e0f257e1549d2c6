#include "psgkit/stage.hpp"


#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/resources.hpp"

namespace psgkit {

namespace {

const std::array<std::string, kRuleCount>& criteria() {
  static const std::array<std::string, kRuleCount> table = [] {
    std::array<std::string, kRuleCount> out;
    const auto catalog = nlohmann::json::parse(resource("rules.json"));
    for (const auto& entry : catalog.at("rules")) {
      const auto id = parse_rule(entry.at("id").get<std::string>());
      if (!id) throw Error("resource", "rule catalog names an unknown rule");
      out[index_of(*id)] = entry.at("criterion").get<std::string>();
    }
    for (RuleId r : kRules) {
      if (out[index_of(r)].empty()) {
        throw Error("resource", "rule catalog lacks " + std::string(to_string(r)));
      }
    }
    return out;
  }();
  return table;
}

}  // namespace

std::string_view rule_criterion(RuleId r) { return criteria()[index_of(r)]; }

std::string join_rules(const std::vector<RuleId>& rules, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (i) out += sep;
    out += to_string(rules[i]);
  }
  return out;
}

std::vector<RuleId> split_rules(std::string_view text, char sep) {
  std::vector<RuleId> out;
  if (text.empty()) return out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = text.find(sep, pos);
    const std::string_view token = text.substr(pos, next == std::string_view::npos ? text.npos : next - pos);
    const auto id = parse_rule(token);
    if (!id) throw FormatError("unknown rule identifier \"" + std::string(token) + "\"");
    out.push_back(*id);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace psgkit
