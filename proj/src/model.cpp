#include "tmf/model.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <algorithm>
#include <cctype>

namespace tmf {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view text, const std::array<std::pair<std::string_view, Enum>, N>& table,
                std::string_view what)
{
    const std::string needle = text::lower(text::trim(text));
    for (const auto& [name, value] : table) {
        if (text::lower(name) == needle) {
            return value;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown " + std::string(what) + " '" + std::string(text) + "'");
}

} // namespace

std::string_view to_string(ThreatCategory category)
{
    switch (category) {
    case ThreatCategory::Spoofing: return "Spoofing";
    case ThreatCategory::Tampering: return "Tampering";
    case ThreatCategory::Repudiation: return "Repudiation";
    case ThreatCategory::InformationDisclosure: return "InformationDisclosure";
    case ThreatCategory::DenialOfService: return "DenialOfService";
    case ThreatCategory::ElevationOfPrivilege: return "ElevationOfPrivilege";
    }
    return "";
}

std::string_view display_name(ThreatCategory category)
{
    switch (category) {
    case ThreatCategory::Spoofing: return "Spoofing";
    case ThreatCategory::Tampering: return "Tampering";
    case ThreatCategory::Repudiation: return "Repudiation";
    case ThreatCategory::InformationDisclosure: return "Information Disclosure";
    case ThreatCategory::DenialOfService: return "Denial of Service";
    case ThreatCategory::ElevationOfPrivilege: return "Elevation of Privilege";
    }
    return "";
}

ThreatCategory parse_threat_category(std::string_view text)
{
    const std::string needle = text::lower(text::trim(text));
    for (ThreatCategory c : kAllThreatCategories) {
        if (text::lower(to_string(c)) == needle || text::lower(display_name(c)) == needle) {
            return c;
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown threat category '" + std::string(text) + "'");
}

std::string_view to_string(ElementKind kind)
{
    switch (kind) {
    case ElementKind::Process: return "process";
    case ElementKind::ExternalInteractor: return "external";
    case ElementKind::DataStore: return "datastore";
    }
    return "";
}

ElementKind parse_element_kind(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, ElementKind>, 5> table{{
        {"process", ElementKind::Process},
        {"external", ElementKind::ExternalInteractor},
        {"externalinteractor", ElementKind::ExternalInteractor},
        {"datastore", ElementKind::DataStore},
        {"data store", ElementKind::DataStore},
    }};
    return parse_enum(text, table, "element kind");
}

std::string_view to_string(Priority priority)
{
    switch (priority) {
    case Priority::High: return "High";
    case Priority::Medium: return "Medium";
    case Priority::Low: return "Low";
    }
    return "";
}

Priority parse_priority(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, Priority>, 3> table{{
        {"high", Priority::High},
        {"medium", Priority::Medium},
        {"low", Priority::Low},
    }};
    return parse_enum(text, table, "priority");
}

std::string_view to_string(ThreatState state)
{
    switch (state) {
    case ThreatState::NotStarted: return "Not Started";
    case ThreatState::NotApplicable: return "Not Applicable";
    case ThreatState::NeedsInvestigation: return "Needs Investigation";
    case ThreatState::MitigationImplemented: return "Mitigation Implemented";
    }
    return "";
}

std::string_view to_string(TriState value)
{
    switch (value) {
    case TriState::Yes: return "yes";
    case TriState::No: return "no";
    case TriState::Unknown: return "unknown";
    }
    return "";
}

TriState parse_tri_state(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, TriState>, 3> table{{
        {"yes", TriState::Yes},
        {"no", TriState::No},
        {"unknown", TriState::Unknown},
    }};
    return parse_enum(text, table, "tri-state value");
}

std::string_view to_string(SecurityLevel level)
{
    switch (level) {
    case SecurityLevel::Low: return "low";
    case SecurityLevel::Moderate: return "moderate";
    case SecurityLevel::High: return "high";
    case SecurityLevel::Unknown: return "unknown";
    }
    return "";
}

SecurityLevel parse_security_level(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, SecurityLevel>, 4> table{{
        {"low", SecurityLevel::Low},
        {"moderate", SecurityLevel::Moderate},
        {"high", SecurityLevel::High},
        {"unknown", SecurityLevel::Unknown},
    }};
    return parse_enum(text, table, "security level");
}

std::string_view to_string(SubjectRole role)
{
    switch (role) {
    case SubjectRole::Flow: return "flow";
    case SubjectRole::Source: return "source";
    case SubjectRole::Target: return "target";
    }
    return "";
}

SubjectRole parse_subject_role(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, SubjectRole>, 3> table{{
        {"flow", SubjectRole::Flow},
        {"source", SubjectRole::Source},
        {"target", SubjectRole::Target},
    }};
    return parse_enum(text, table, "subject role");
}

std::string_view to_string(Strategy strategy)
{
    switch (strategy) {
    case Strategy::Rag: return "rag";
    case Strategy::Icl: return "icl";
    case Strategy::Classifier: return "classifier";
    }
    return "";
}

Strategy parse_strategy(std::string_view text)
{
    static constexpr std::array<std::pair<std::string_view, Strategy>, 3> table{{
        {"rag", Strategy::Rag},
        {"icl", Strategy::Icl},
        {"classifier", Strategy::Classifier},
    }};
    return parse_enum(text, table, "strategy");
}

// ---------------------------------------------------------------------------

std::optional<TechniqueId> TechniqueId::try_parse(std::string_view text)
{
    auto digits = [&](std::size_t from, std::size_t count) {
        for (std::size_t i = from; i < from + count; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
                return false;
            }
        }
        return true;
    };
    if (text.size() != 5 && text.size() != 9) {
        return std::nullopt;
    }
    if (text[0] != 'T' && text[0] != 't') {
        return std::nullopt;
    }
    if (!digits(1, 4)) {
        return std::nullopt;
    }
    if (text.size() == 9 && (text[5] != '.' || !digits(6, 3))) {
        return std::nullopt;
    }
    std::string value(text);
    value[0] = 'T';
    return TechniqueId(std::move(value));
}

TechniqueId TechniqueId::parse(std::string_view text)
{
    if (auto id = try_parse(text)) {
        return *id;
    }
    fail(ErrorCode::MalformedId, "'" + std::string(text) + "' is not a technique id");
}

TechniqueId TechniqueId::parent() const
{
    return is_subtechnique() ? TechniqueId(value_.substr(0, 5)) : *this;
}

TechniqueSet::TechniqueSet(std::initializer_list<TechniqueId> ids)
{
    for (const auto& id : ids) {
        insert(id);
    }
}

bool TechniqueSet::insert(const TechniqueId& id)
{
    if (contains(id)) {
        return false;
    }
    items_.push_back(id);
    return true;
}

bool TechniqueSet::contains(const TechniqueId& id) const
{
    return std::find(items_.begin(), items_.end(), id) != items_.end();
}

void validate(const BasicInput& input)
{
    for (const auto& threat : input.stride_threats) {
        if (threat.interaction_id != input.flow.id) {
            fail(ErrorCode::InvalidArgument, "threat " + threat.id + " belongs to interaction '" +
                                                 threat.interaction_id + "', not '" + input.flow.id + "'");
        }
    }
}

} // namespace tmf
