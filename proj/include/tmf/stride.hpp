#pragma once

// STRIDE-per-element threat generation over the interactions of a DfdGraph.

#include "tmf/dfd.hpp"
#include "tmf/model.hpp"

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

/// The element of an interaction a rule applies to. Entity roles carry the
/// element kind; the flow role does not.
struct StrideRole {
    SubjectRole subject = SubjectRole::Flow;
    std::optional<ElementKind> kind;

    static StrideRole flow_edge() { return {SubjectRole::Flow, std::nullopt}; }
    static StrideRole source(ElementKind k) { return {SubjectRole::Source, k}; }
    static StrideRole target(ElementKind k) { return {SubjectRole::Target, k}; }

    /// "flow", "source:process", "target:datastore", ...
    std::string key() const;
    static StrideRole parse(std::string_view key);

    auto operator<=>(const StrideRole&) const = default;
};

struct StrideRule {
    ThreatCategory category = ThreatCategory::Spoofing;
    std::string title_template;
    std::string description_template;
    Priority priority = Priority::Medium;

    bool operator==(const StrideRule&) const = default;
};

/// Placeholders allowed in templates: {flow_name}, {source}, {target}.
class StrideRuleTable {
public:
    /// Every role starts with an empty rule list.
    StrideRuleTable();

    void add(const StrideRole& role, StrideRule rule);
    const std::vector<StrideRule>& rules_for(const StrideRole& role) const;
    const std::map<StrideRole, std::vector<StrideRule>>& entries() const noexcept { return entries_; }

    bool sanctions(const StrideRole& role, ThreatCategory category) const;

    bool operator==(const StrideRuleTable&) const = default;

private:
    std::map<StrideRole, std::vector<StrideRule>> entries_;
};

StrideRuleTable default_rule_table();

/// JSON form: {"rules": [{"role": "target:process", "category": "Repudiation",
/// "title": "...", "description": "...", "priority": "high"}, ...]}.
StrideRuleTable parse_rule_table(std::string_view json_text);
std::string rule_table_to_json(const StrideRuleTable& table);

struct InteractionThreats {
    std::string flow_id;
    std::string flow_name;
    std::string source_name;
    std::string target_name;
    bool crosses_boundary = false;
    std::vector<StrideThreat> threats;
};

struct StrideReport {
    std::string graph_id;
    std::vector<InteractionThreats> interactions; // ordered by flow id
    std::map<ThreatState, std::size_t> summary;    // every state present

    std::size_t total() const;
    const InteractionThreats* find(std::string_view flow_id) const;
};

/// Rendered threat text; throws InvalidArgument on unknown placeholders.
std::string render_template(std::string_view tmpl, std::string_view flow_name, std::string_view source,
                            std::string_view target);

StrideReport generate_threats(const DfdGraph& graph, const StrideRuleTable& rules);

/// Everything the identification stage needs about one flow.
BasicInput make_basic_input(const DfdGraph& graph, const StrideReport& report, const std::string& flow_id);

} // namespace tmf
