#pragma once

#include "pesem/global_info.hpp"
#include "pesem/import_info.hpp"
#include "pesem/packing.hpp"
#include "pesem/section_info.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pesem {

struct AttackRef {
  std::string technique_id;  // "T1055", "T1547.001"
  std::string tactic;
  std::string technique;
  bool operator==(const AttackRef&) const = default;
};

struct MbcRef {
  std::string behavior_id;  // "E1055", "B0001", "C0002"
  std::string objective;
  std::string behavior;
  bool operator==(const MbcRef&) const = default;
};

struct ConditionNode;

namespace cond {

struct All {
  std::vector<ConditionNode> children;
};
struct Any {
  std::vector<ConditionNode> children;
};
struct Not {
  std::vector<ConditionNode> child;  // exactly one element
};
struct ImportPresent {
  std::optional<std::string> dll;
  std::string name;
};
struct StringMatch {
  std::string pattern;  // POSIX extended syntax
  bool nocase = false;
  std::shared_ptr<const std::regex> regex;
};
struct SectionFlag {
  std::string flag;
  std::uint32_t mask = 0;
  std::optional<std::string> section_name;
};
struct EntropyGt {
  double threshold = 0.0;  // compared against whole-file entropy
};
struct Packed {
  bool expected = true;
};
struct RiskTag {
  std::string exploit;
};

}  // namespace cond

struct ConditionNode {
  std::variant<cond::All, cond::Any, cond::Not, cond::ImportPresent, cond::StringMatch, cond::SectionFlag,
               cond::EntropyGt, cond::Packed, cond::RiskTag>
      node;
};

// Builders used by tests and programmatic rule construction.
ConditionNode all_of(std::vector<ConditionNode> children);
ConditionNode any_of(std::vector<ConditionNode> children);
ConditionNode not_of(ConditionNode child);
ConditionNode import_present(std::string name, std::optional<std::string> dll = std::nullopt);
ConditionNode string_match(std::string pattern, bool nocase = false);
ConditionNode section_flag(std::string flag, std::optional<std::string> section_name = std::nullopt);
ConditionNode entropy_gt(double threshold);
ConditionNode packed(bool expected);
ConditionNode risk_tag(std::string exploit);

/// Stable one-line rendering of a condition tree; leaf renderings are the
/// prefixes of RuleMatch evidence lines.
std::string describe(const ConditionNode& node);

/// Renderings of every leaf in the tree, depth-first.
std::vector<std::string> leaf_descriptions(const ConditionNode& node);

bool contains_negation(const ConditionNode& node);

struct Rule {
  std::string id;
  std::string name;
  std::vector<AttackRef> attack_refs;
  std::vector<MbcRef> mbc_refs;
  ConditionNode condition;
};

struct RulePack {
  std::string version;
  std::vector<Rule> rules;
};

/// Parses and validates the JSON rule-pack format. Throws Error(SchemaError)
/// or Error(DuplicateRuleId).
RulePack load_rule_pack(std::string_view text);
RulePack load_rule_pack_file(const std::string& path);
const RulePack& bundled_rule_pack();
std::string_view bundled_rule_pack_text();

struct FeatureContext {
  GlobalInfo global;
  std::vector<SectionInfo> sections;
  ImportInfo imports;
  PackingVerdict packing;
  std::vector<std::string> strings;
};

struct RuleMatch {
  std::string rule_id;
  std::vector<AttackRef> attack_refs;
  std::vector<MbcRef> mbc_refs;
  std::vector<std::string> evidence;  // "<leaf rendering>" or "<leaf rendering> => <detail>"
};

/// Evaluates `node`; on success appends evidence lines.
bool evaluate_condition(const ConditionNode& node, const FeatureContext& ctx, std::vector<std::string>& evidence);

/// Matches in pack order.
std::vector<RuleMatch> evaluate_rules(const RulePack& pack, const FeatureContext& ctx);

struct AttackCapability {
  AttackRef ref;
  std::vector<std::string> rules;
  bool operator==(const AttackCapability&) const = default;
};

struct MbcCapability {
  MbcRef ref;
  std::vector<std::string> rules;
  bool operator==(const MbcCapability&) const = default;
};

struct Capabilities {
  std::vector<AttackCapability> attack;
  std::vector<MbcCapability> mbc;
  bool operator==(const Capabilities&) const = default;
};

/// One entry per technique/behavior id in first-match order, listing the
/// ids of the rules that reported it.
Capabilities summarize_capabilities(const std::vector<RuleMatch>& matches);

}  // namespace pesem
