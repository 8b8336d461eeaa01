#include "tmf/stride.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace tmf {

namespace {

constexpr std::array<ElementKind, 3> kKinds = {ElementKind::Process, ElementKind::ExternalInteractor,
                                               ElementKind::DataStore};

} // namespace

std::string StrideRole::key() const
{
    std::string k(to_string(subject));
    if (kind) {
        k += ":";
        k += to_string(*kind);
    }
    return k;
}

StrideRole StrideRole::parse(std::string_view key)
{
    const auto colon = key.find(':');
    StrideRole role;
    role.subject = parse_subject_role(key.substr(0, colon));
    if (role.subject == SubjectRole::Flow) {
        if (colon != std::string_view::npos) {
            fail(ErrorCode::InvalidArgument, "the flow role takes no element kind: '" + std::string(key) + "'");
        }
        return role;
    }
    if (colon == std::string_view::npos) {
        fail(ErrorCode::InvalidArgument, "role '" + std::string(key) + "' needs an element kind");
    }
    role.kind = parse_element_kind(key.substr(colon + 1));
    return role;
}

StrideRuleTable::StrideRuleTable()
{
    entries_[StrideRole::flow_edge()];
    for (ElementKind k : kKinds) {
        entries_[StrideRole::source(k)];
        entries_[StrideRole::target(k)];
    }
}

void StrideRuleTable::add(const StrideRole& role, StrideRule rule)
{
    if ((role.subject == SubjectRole::Flow) == role.kind.has_value()) {
        fail(ErrorCode::InvalidArgument, "malformed role '" + role.key() + "'");
    }
    // Validates placeholders up front.
    render_template(rule.title_template, "", "", "");
    render_template(rule.description_template, "", "", "");
    entries_[role].push_back(std::move(rule));
}

const std::vector<StrideRule>& StrideRuleTable::rules_for(const StrideRole& role) const
{
    return entries_.at(role);
}

bool StrideRuleTable::sanctions(const StrideRole& role, ThreatCategory category) const
{
    const auto& rules = rules_for(role);
    return std::any_of(rules.begin(), rules.end(), [&](const StrideRule& r) { return r.category == category; });
}

std::string render_template(std::string_view tmpl, std::string_view flow_name, std::string_view source,
                            std::string_view target)
{
    std::string out;
    out.reserve(tmpl.size() + 64);
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out.push_back(tmpl[i++]);
            continue;
        }
        const auto close = tmpl.find('}', i);
        if (close == std::string_view::npos) {
            fail(ErrorCode::InvalidArgument, "unterminated placeholder in template '" + std::string(tmpl) + "'");
        }
        const auto name = tmpl.substr(i + 1, close - i - 1);
        if (name == "flow_name") {
            out += flow_name;
        } else if (name == "source") {
            out += source;
        } else if (name == "target") {
            out += target;
        } else {
            fail(ErrorCode::InvalidArgument, "unknown placeholder {" + std::string(name) + "}");
        }
        i = close + 1;
    }
    return out;
}

StrideRuleTable default_rule_table()
{
    using C = ThreatCategory;
    using P = Priority;
    StrideRuleTable t;
    const auto flow = StrideRole::flow_edge();

    t.add(flow, {C::InformationDisclosure, "Data Flow Sniffing",
                 "Data flowing across {flow_name} may be sniffed by an attacker. Depending on what type of data an "
                 "attacker can read, it may be used to attack other parts of the system or simply be a disclosure of "
                 "information leading to compliance violations. Consider encrypting the data flow.",
                 P::High});
    t.add(flow, {C::Tampering, "Potential Lack of Input Validation for {target}",
                 "Data flowing across {flow_name} may be tampered with by an attacker. This may lead to a denial of "
                 "service attack against {target} or an elevation of privilege attack against {target} or an "
                 "information disclosure by {target}. Failure to verify that input is as expected is a root cause of "
                 "a very large number of exploitable issues. Consider all paths and the way they handle data. Verify "
                 "that all input is verified for correctness using an approved list input validation approach.",
                 P::Medium});
    t.add(flow, {C::DenialOfService, "Potential Data Flow Interruption",
                 "An external agent interrupts data flowing across {flow_name} in either direction, denying "
                 "{target} the data it expects from {source}.",
                 P::Medium});

    const auto target_process = StrideRole::target(ElementKind::Process);
    t.add(target_process, {C::Spoofing, "Spoofing the {target} Process",
                           "{target} may be spoofed by an attacker and this may lead to information disclosure by "
                           "{source}. Consider using a standard authentication mechanism to identify the destination "
                           "process.",
                           P::Medium});
    t.add(target_process, {C::Tampering, "Potential Tampering with {target} State",
                           "Input received by {target} over {flow_name} may be crafted to corrupt the state or "
                           "memory of {target}. Validate and bound all data received from {source}.",
                           P::Medium});
    t.add(target_process, {C::Repudiation, "Potential Data Repudiation by {target}",
                           "{target} claims that it did not receive data from a source outside the trust boundary. "
                           "Consider using logging or auditing to record the source, time, and summary of the "
                           "received data.",
                           P::High});
    t.add(target_process, {C::InformationDisclosure, "Data Leakage by {target}",
                           "{target} may reveal data received over {flow_name} through error messages, logs or side "
                           "channels. Restrict what {target} discloses about its inputs.",
                           P::Medium});
    t.add(target_process, {C::DenialOfService, "Potential Process Crash or Stop for {target}",
                           "{target} crashes, halts, stops or runs slowly when processing {flow_name}; in all cases "
                           "violating an availability metric.",
                           P::Medium});
    t.add(target_process, {C::ElevationOfPrivilege, "Elevation of Privilege against {target}",
                           "{source} may be able to remotely execute code for {target} or abuse its input handling to "
                           "gain additional privilege on {target}.",
                           P::High});

    const auto source_process = StrideRole::source(ElementKind::Process);
    t.add(source_process, {C::Spoofing, "Spoofing the {source} Process",
                           "{source} may be spoofed by an attacker and this may lead to unauthorized access to "
                           "{target}. Consider using a standard authentication mechanism to identify the source "
                           "process.",
                           P::Medium});
    t.add(source_process, {C::Repudiation, "Potential Repudiation by {source}",
                           "{source} claims that it did not send {flow_name}. Consider using logging or auditing to "
                           "record the source, time, and summary of the sent data.",
                           P::Medium});

    const auto source_external = StrideRole::source(ElementKind::ExternalInteractor);
    t.add(source_external, {C::Spoofing, "Spoofing the {source} External Entity",
                            "{source} may be spoofed by an attacker and this may lead to unauthorized access to "
                            "{target}. Consider using a standard authentication mechanism to identify the external "
                            "entity.",
                            P::Medium});
    t.add(source_external, {C::Repudiation, "External Entity {source} Potentially Denies Sending Data",
                            "{source} claims that it did not send {flow_name} to {target}. Consider using logging or "
                            "auditing to record the source, time, and summary of the received data.",
                            P::Medium});

    const auto target_external = StrideRole::target(ElementKind::ExternalInteractor);
    t.add(target_external, {C::Spoofing, "Spoofing of the {target} External Destination Entity",
                            "{target} may be spoofed by an attacker and this may lead to data being sent to the "
                            "attacker instead of {target}. Consider using a standard authentication mechanism to "
                            "identify the external entity.",
                            P::Medium});
    t.add(target_external, {C::Repudiation, "External Entity {target} Potentially Denies Receiving Data",
                            "{target} claims that it did not receive {flow_name} from {source}. Consider using "
                            "logging or auditing to record the source, time, and summary of the sent data.",
                            P::Medium});

    for (SubjectRole side : {SubjectRole::Source, SubjectRole::Target}) {
        const StrideRole role{side, ElementKind::DataStore};
        const std::string store = side == SubjectRole::Source ? "{source}" : "{target}";
        t.add(role, {C::Tampering, "Potential Tampering with Data Store " + store,
                     "Data held in " + store + " may be modified by an attacker, corrupting what travels over "
                     "{flow_name}. Protect the integrity of the stored records.",
                     P::Medium});
        t.add(role, {C::Repudiation, "Data Store " + store + " Denies Access",
                     store + " claims that {flow_name} did not occur. Consider logging access to the data store.",
                     P::Medium});
        t.add(role, {C::InformationDisclosure, "Weak Access Control for " + store,
                     "Improper access control on " + store + " may let an attacker read information not intended "
                     "for disclosure. Review the authorization rules of the data store.",
                     P::Medium});
        t.add(role, {C::DenialOfService, "Potential Excessive Resource Consumption for " + store,
                     "An attacker may exhaust the storage or request capacity of " + store +
                         ", interrupting {flow_name}.",
                     P::Medium});
    }
    return t;
}

StrideRuleTable parse_rule_table(std::string_view json_text)
{
    using nlohmann::json;
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, std::string("rules: invalid JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("rules") || !root["rules"].is_array()) {
        fail(ErrorCode::SchemaError, "rules: expected {\"rules\": [...]}");
    }
    StrideRuleTable table;
    const json& rules = root["rules"];
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const std::string path = "rules[" + std::to_string(i) + "]";
        const json& r = rules[i];
        try {
            StrideRule rule;
            rule.category = parse_threat_category(r.at("category").get<std::string>());
            rule.title_template = r.at("title").get<std::string>();
            rule.description_template = r.at("description").get<std::string>();
            rule.priority = parse_priority(r.value("priority", std::string("medium")));
            table.add(StrideRole::parse(r.at("role").get<std::string>()), std::move(rule));
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaError, path + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorCode::SchemaError, path + ": " + e.what());
        }
    }
    return table;
}

std::string rule_table_to_json(const StrideRuleTable& table)
{
    nlohmann::ordered_json rules = nlohmann::ordered_json::array();
    for (const auto& [role, list] : table.entries()) {
        for (const auto& r : list) {
            nlohmann::ordered_json j;
            j["role"] = role.key();
            j["category"] = std::string(to_string(r.category));
            j["title"] = r.title_template;
            j["description"] = r.description_template;
            j["priority"] = text::lower(to_string(r.priority));
            rules.push_back(std::move(j));
        }
    }
    nlohmann::ordered_json root;
    root["rules"] = std::move(rules);
    return root.dump(2) + "\n";
}

std::size_t StrideReport::total() const
{
    std::size_t n = 0;
    for (const auto& i : interactions) {
        n += i.threats.size();
    }
    return n;
}

const InteractionThreats* StrideReport::find(std::string_view flow_id) const
{
    for (const auto& i : interactions) {
        if (i.flow_id == flow_id) {
            return &i;
        }
    }
    return nullptr;
}

StrideReport generate_threats(const DfdGraph& graph, const StrideRuleTable& rules)
{
    StrideReport report;
    report.graph_id = graph.graph_id;
    for (ThreatState s : kAllThreatStates) {
        report.summary[s] = 0;
    }

    for (const auto& [flow_id, flow] : graph.flows) {
        const Entity& source = graph.entity(flow.initiator_id);
        const Entity& target = graph.entity(flow.acceptor_id);

        InteractionThreats it;
        it.flow_id = flow_id;
        it.flow_name = flow.name;
        it.source_name = source.name;
        it.target_name = target.name;
        it.crosses_boundary = graph.crosses_boundary(flow);

        const std::array<std::pair<StrideRole, std::string>, 3> roles = {{
            {StrideRole::flow_edge(), flow_id},
            {StrideRole::source(source.kind), source.id},
            {StrideRole::target(target.kind), target.id},
        }};
        for (const auto& [role, subject] : roles) {
            for (const auto& rule : rules.rules_for(role)) {
                StrideThreat t;
                t.category = rule.category;
                t.title = render_template(rule.title_template, flow.name, source.name, target.name);
                t.description = render_template(rule.description_template, flow.name, source.name, target.name);
                t.interaction_id = flow_id;
                t.subject_role = role.subject;
                t.subject_element = subject;
                t.priority = rule.priority;
                if (it.crosses_boundary && t.priority == Priority::Medium &&
                    (t.category == ThreatCategory::Tampering || t.category == ThreatCategory::Spoofing)) {
                    t.priority = Priority::High;
                }
                t.state = ThreatState::NotStarted;
                t.id = "TH-" + text::hex64(text::fnv1a64(flow_id + "|" + role.key() + "|" +
                                                         std::string(to_string(rule.category)) + "|" +
                                                         rule.title_template));
                it.threats.push_back(std::move(t));
                ++report.summary[ThreatState::NotStarted];
            }
        }
        report.interactions.push_back(std::move(it));
    }
    return report;
}

BasicInput make_basic_input(const DfdGraph& graph, const StrideReport& report, const std::string& flow_id)
{
    BasicInput bi;
    bi.flow = graph.flow(flow_id);
    bi.initiator = graph.entity(bi.flow.initiator_id);
    bi.acceptor = graph.entity(bi.flow.acceptor_id);
    if (const auto* it = report.find(flow_id)) {
        bi.stride_threats = it->threats;
    }
    return bi;
}

} // namespace tmf
