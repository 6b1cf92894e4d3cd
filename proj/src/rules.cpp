#include "pesem/rules.hpp"

#include "pesem/embedded_starter_rules.hpp"
#include "pesem/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pesem {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::SchemaError, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) schema_error(where, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
    schema_error(where, std::string("field '") + key + "' must be a non-empty string");
  }
  return v.get<std::string>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      schema_error(where, "unknown field '" + key + "'");
    }
  }
}

std::shared_ptr<const std::regex> compile_regex(const std::string& pattern, bool nocase) {
  auto flags = std::regex::extended;
  if (nocase) flags |= std::regex::icase;
  return std::make_shared<const std::regex>(pattern, flags);
}

ConditionNode parse_condition(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) schema_error(where, "condition must be an object with exactly one kind key");
  const auto& [kind, body] = *j.items().begin();
  const std::string here = where + "." + kind;

  if (kind == "all" || kind == "any") {
    if (!body.is_array() || body.empty()) schema_error(here, "children must be a non-empty array");
    std::vector<ConditionNode> children;
    for (std::size_t i = 0; i < body.size(); ++i) children.push_back(parse_condition(body[i], here + "[" + std::to_string(i) + "]"));
    return kind == "all" ? all_of(std::move(children)) : any_of(std::move(children));
  }
  if (kind == "not") return not_of(parse_condition(body, here));
  if (!body.is_object()) schema_error(here, "parameters must be an object");

  if (kind == "import_present") {
    reject_unknown_keys(body, {"name", "dll"}, here);
    std::optional<std::string> dll;
    if (body.contains("dll")) dll = require_string(body, "dll", here);
    return import_present(require_string(body, "name", here), dll);
  }
  if (kind == "string_match") {
    reject_unknown_keys(body, {"pattern", "nocase"}, here);
    bool nocase = false;
    if (body.contains("nocase")) {
      if (!body["nocase"].is_boolean()) schema_error(here, "'nocase' must be a boolean");
      nocase = body["nocase"].get<bool>();
    }
    const std::string pattern = require_string(body, "pattern", here);
    try {
      return string_match(pattern, nocase);
    } catch (const std::regex_error& e) {
      schema_error(here, "invalid pattern '" + pattern + "': " + e.what());
    }
  }
  if (kind == "section_flag") {
    reject_unknown_keys(body, {"flag", "section_name"}, here);
    const std::string flag = require_string(body, "flag", here);
    if (!section_flag_mask(flag)) schema_error(here, "unknown section flag '" + flag + "'");
    std::optional<std::string> section;
    if (body.contains("section_name")) section = require_string(body, "section_name", here);
    return section_flag(flag, section);
  }
  if (kind == "entropy_gt") {
    reject_unknown_keys(body, {"threshold"}, here);
    const json& t = require(body, "threshold", here);
    if (!t.is_number() || t.get<double>() < 0.0 || t.get<double>() > 8.0) schema_error(here, "threshold must be a number in [0, 8]");
    return entropy_gt(t.get<double>());
  }
  if (kind == "packed") {
    reject_unknown_keys(body, {"expected"}, here);
    const json& e = require(body, "expected", here);
    if (!e.is_boolean()) schema_error(here, "'expected' must be a boolean");
    return packed(e.get<bool>());
  }
  if (kind == "risk_tag") {
    reject_unknown_keys(body, {"exploit"}, here);
    const std::string exploit = require_string(body, "exploit", here);
    if (!parse_exploit(exploit)) schema_error(here, "unknown exploit '" + exploit + "'");
    return risk_tag(exploit);
  }
  schema_error(where, "unknown condition kind '" + kind + "'");
}

std::string normalize_dll(std::string_view dll) {
  std::string s = ascii_lower(dll);
  if (s.size() > 4 && s.ends_with(".dll")) s.resize(s.size() - 4);
  return s;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void collect_leaves(const ConditionNode& node, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, cond::All> || std::is_same_v<T, cond::Any>) {
          for (const auto& c : n.children) collect_leaves(c, out);
        } else if constexpr (std::is_same_v<T, cond::Not>) {
          collect_leaves(n.child.front(), out);
        } else {
          out.push_back(describe(node));
        }
      },
      node.node);
}

}  // namespace

ConditionNode all_of(std::vector<ConditionNode> children) { return {cond::All{std::move(children)}}; }
ConditionNode any_of(std::vector<ConditionNode> children) { return {cond::Any{std::move(children)}}; }
ConditionNode not_of(ConditionNode child) {
  cond::Not n;
  n.child.push_back(std::move(child));
  return {std::move(n)};
}
ConditionNode import_present(std::string name, std::optional<std::string> dll) {
  return {cond::ImportPresent{std::move(dll), std::move(name)}};
}
ConditionNode string_match(std::string pattern, bool nocase) {
  auto re = compile_regex(pattern, nocase);
  return {cond::StringMatch{std::move(pattern), nocase, std::move(re)}};
}
ConditionNode section_flag(std::string flag, std::optional<std::string> section_name) {
  const auto mask = section_flag_mask(flag);
  if (!mask) throw Error(ErrorCode::SchemaError, "unknown section flag '" + flag + "'");
  return {cond::SectionFlag{std::move(flag), *mask, std::move(section_name)}};
}
ConditionNode entropy_gt(double threshold) { return {cond::EntropyGt{threshold}}; }
ConditionNode packed(bool expected) { return {cond::Packed{expected}}; }
ConditionNode risk_tag(std::string exploit) { return {cond::RiskTag{std::move(exploit)}}; }

std::string describe(const ConditionNode& node) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        auto join = [](const std::vector<ConditionNode>& cs) {
          std::string s;
          for (std::size_t i = 0; i < cs.size(); ++i) s += (i ? ", " : "") + describe(cs[i]);
          return s;
        };
        if constexpr (std::is_same_v<T, cond::All>) {
          return "all(" + join(n.children) + ")";
        } else if constexpr (std::is_same_v<T, cond::Any>) {
          return "any(" + join(n.children) + ")";
        } else if constexpr (std::is_same_v<T, cond::Not>) {
          return "not(" + describe(n.child.front()) + ")";
        } else if constexpr (std::is_same_v<T, cond::ImportPresent>) {
          return "import_present(" + (n.dll ? *n.dll + "!" : std::string()) + n.name + ")";
        } else if constexpr (std::is_same_v<T, cond::StringMatch>) {
          return "string_match(/" + n.pattern + "/" + (n.nocase ? "i" : "") + ")";
        } else if constexpr (std::is_same_v<T, cond::SectionFlag>) {
          return "section_flag(" + n.flag + (n.section_name ? " in " + *n.section_name : std::string()) + ")";
        } else if constexpr (std::is_same_v<T, cond::EntropyGt>) {
          return "entropy_gt(" + format_number(n.threshold) + ")";
        } else if constexpr (std::is_same_v<T, cond::Packed>) {
          return std::string("packed(") + (n.expected ? "true" : "false") + ")";
        } else {
          return "risk_tag(" + n.exploit + ")";
        }
      },
      node.node);
}

std::vector<std::string> leaf_descriptions(const ConditionNode& node) {
  std::vector<std::string> out;
  collect_leaves(node, out);
  return out;
}

bool contains_negation(const ConditionNode& node) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, cond::Not>) {
          return true;
        } else if constexpr (std::is_same_v<T, cond::All> || std::is_same_v<T, cond::Any>) {
          return std::any_of(n.children.begin(), n.children.end(), [](const auto& c) { return contains_negation(c); });
        } else {
          return false;
        }
      },
      node.node);
}

RulePack load_rule_pack(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("rule pack is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) schema_error("rule pack", "top level must be an object");
  reject_unknown_keys(doc, {"version", "rules", "$schema"}, "rule pack");
  RulePack pack;
  pack.version = require_string(doc, "version", "rule pack");
  const json& rules = require(doc, "rules", "rule pack");
  if (!rules.is_array()) schema_error("rule pack", "'rules' must be an array");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const json& r = rules[i];
    std::string where = "rules[" + std::to_string(i) + "]";
    if (!r.is_object()) schema_error(where, "rule must be an object");
    reject_unknown_keys(r, {"id", "name", "attack", "mbc", "condition"}, where);
    Rule rule;
    rule.id = require_string(r, "id", where);
    where += "(" + rule.id + ")";
    rule.name = require_string(r, "name", where);
    if (r.contains("attack")) {
      if (!r["attack"].is_array()) schema_error(where, "'attack' must be an array");
      for (const auto& a : r["attack"]) {
        reject_unknown_keys(a, {"technique_id", "tactic", "technique"}, where + ".attack");
        rule.attack_refs.push_back({require_string(a, "technique_id", where + ".attack"),
                                    require_string(a, "tactic", where + ".attack"),
                                    require_string(a, "technique", where + ".attack")});
      }
    }
    if (r.contains("mbc")) {
      if (!r["mbc"].is_array()) schema_error(where, "'mbc' must be an array");
      for (const auto& m : r["mbc"]) {
        reject_unknown_keys(m, {"behavior_id", "objective", "behavior"}, where + ".mbc");
        rule.mbc_refs.push_back({require_string(m, "behavior_id", where + ".mbc"),
                                 require_string(m, "objective", where + ".mbc"),
                                 require_string(m, "behavior", where + ".mbc")});
      }
    }
    if (rule.attack_refs.empty() && rule.mbc_refs.empty()) schema_error(where, "rule needs at least one ATT&CK or MBC reference");
    rule.condition = parse_condition(require(r, "condition", where), where + ".condition");
    if (!ids.insert(rule.id).second) throw Error(ErrorCode::DuplicateRuleId, "duplicate rule id '" + rule.id + "'");
    pack.rules.push_back(std::move(rule));
  }
  return pack;
}

RulePack load_rule_pack_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open rule pack " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_rule_pack(ss.str());
}

std::string_view bundled_rule_pack_text() { return embedded::kStarterRulePackText; }

const RulePack& bundled_rule_pack() {
  static const RulePack pack = load_rule_pack(embedded::kStarterRulePackText);
  return pack;
}

bool evaluate_condition(const ConditionNode& node, const FeatureContext& ctx, std::vector<std::string>& evidence) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, cond::All>) {
          std::vector<std::string> local;
          for (const auto& c : n.children) {
            if (!evaluate_condition(c, ctx, local)) return false;
          }
          evidence.insert(evidence.end(), local.begin(), local.end());
          return true;
        } else if constexpr (std::is_same_v<T, cond::Any>) {
          bool any = false;
          for (const auto& c : n.children) any = evaluate_condition(c, ctx, evidence) || any;
          return any;
        } else if constexpr (std::is_same_v<T, cond::Not>) {
          std::vector<std::string> ignored;
          if (evaluate_condition(n.child.front(), ctx, ignored)) return false;
          evidence.push_back(describe(node));
          return true;
        } else if constexpr (std::is_same_v<T, cond::ImportPresent>) {
          const std::string want_dll = n.dll ? normalize_dll(*n.dll) : std::string();
          for (const auto& [dll, functions] : ctx.imports.libraries) {
            if (n.dll && normalize_dll(dll) != want_dll) continue;
            for (const auto& f : functions) {
              if (api_name_matches(f, n.name)) {
                evidence.push_back(describe(node) + " => " + dll + "!" + f);
                return true;
              }
            }
          }
          return false;
        } else if constexpr (std::is_same_v<T, cond::StringMatch>) {
          for (const auto& s : ctx.strings) {
            if (std::regex_search(s, *n.regex)) {
              evidence.push_back(describe(node) + " => " + s.substr(0, 80));
              return true;
            }
          }
          return false;
        } else if constexpr (std::is_same_v<T, cond::SectionFlag>) {
          for (const auto& s : ctx.sections) {
            if (n.section_name && s.name != *n.section_name) continue;
            if (std::find(s.characteristics.begin(), s.characteristics.end(), n.flag) != s.characteristics.end()) {
              evidence.push_back(describe(node) + " => " + s.name);
              return true;
            }
          }
          return false;
        } else if constexpr (std::is_same_v<T, cond::EntropyGt>) {
          if (!(ctx.global.entropy > n.threshold)) return false;
          evidence.push_back(describe(node) + " => entropy " + format_fixed4(ctx.global.entropy));
          return true;
        } else if constexpr (std::is_same_v<T, cond::Packed>) {
          if (ctx.packing.likely_packed != n.expected) return false;
          evidence.push_back(describe(node) + " => label " + format_fixed4(ctx.packing.label));
          return true;
        } else {
          if (!ctx.imports.summary) return false;
          for (const auto& tag : ctx.imports.summary->risk_tags) {
            if (tag.exploit != n.exploit) continue;
            std::string detail;
            for (const auto& api : tag.matched_apis) detail += (detail.empty() ? "" : ",") + api;
            evidence.push_back(describe(node) + " => " + detail);
            return true;
          }
          return false;
        }
      },
      node.node);
}

std::vector<RuleMatch> evaluate_rules(const RulePack& pack, const FeatureContext& ctx) {
  std::vector<RuleMatch> out;
  for (const auto& rule : pack.rules) {
    std::vector<std::string> evidence;
    if (!evaluate_condition(rule.condition, ctx, evidence)) continue;
    out.push_back({rule.id, rule.attack_refs, rule.mbc_refs, std::move(evidence)});
  }
  return out;
}

Capabilities summarize_capabilities(const std::vector<RuleMatch>& matches) {
  Capabilities caps;
  for (const auto& m : matches) {
    for (const auto& ref : m.attack_refs) {
      auto it = std::find_if(caps.attack.begin(), caps.attack.end(),
                             [&](const auto& c) { return c.ref.technique_id == ref.technique_id; });
      if (it == caps.attack.end()) {
        caps.attack.push_back({ref, {m.rule_id}});
      } else if (std::find(it->rules.begin(), it->rules.end(), m.rule_id) == it->rules.end()) {
        it->rules.push_back(m.rule_id);
      }
    }
    for (const auto& ref : m.mbc_refs) {
      auto it = std::find_if(caps.mbc.begin(), caps.mbc.end(),
                             [&](const auto& c) { return c.ref.behavior_id == ref.behavior_id; });
      if (it == caps.mbc.end()) {
        caps.mbc.push_back({ref, {m.rule_id}});
      } else if (std::find(it->rules.begin(), it->rules.end(), m.rule_id) == it->rules.end()) {
        it->rules.push_back(m.rule_id);
      }
    }
  }
  return caps;
}

}  // namespace pesem
