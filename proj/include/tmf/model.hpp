#pragma once

// Shared domain types for the threat-modeling pipeline. Pure values, no I/O.

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tmf {

// ---------------------------------------------------------------------------
// STRIDE vocabulary
// ---------------------------------------------------------------------------

enum class ThreatCategory {
    Spoofing,
    Tampering,
    Repudiation,
    InformationDisclosure,
    DenialOfService,
    ElevationOfPrivilege,
};

inline constexpr std::array<ThreatCategory, 6> kAllThreatCategories = {
    ThreatCategory::Spoofing,
    ThreatCategory::Tampering,
    ThreatCategory::Repudiation,
    ThreatCategory::InformationDisclosure,
    ThreatCategory::DenialOfService,
    ThreatCategory::ElevationOfPrivilege,
};

/// Canonical identifier form, e.g. "InformationDisclosure".
std::string_view to_string(ThreatCategory category);
/// Report form, e.g. "Information Disclosure".
std::string_view display_name(ThreatCategory category);
/// Accepts canonical or display form, case-insensitively.
ThreatCategory parse_threat_category(std::string_view text);

enum class ElementKind { Process, ExternalInteractor, DataStore };

/// DSL keywords: "process", "external", "datastore".
std::string_view to_string(ElementKind kind);
ElementKind parse_element_kind(std::string_view text);

enum class Priority { High, Medium, Low };
std::string_view to_string(Priority priority);
Priority parse_priority(std::string_view text);

enum class ThreatState { NotStarted, NotApplicable, NeedsInvestigation, MitigationImplemented };

inline constexpr std::array<ThreatState, 4> kAllThreatStates = {
    ThreatState::NotStarted,
    ThreatState::NotApplicable,
    ThreatState::NeedsInvestigation,
    ThreatState::MitigationImplemented,
};

/// "Not Started", "Not Applicable", ...
std::string_view to_string(ThreatState state);

// ---------------------------------------------------------------------------
// Architecture elements
// ---------------------------------------------------------------------------

struct ProcessDescription {
    std::string name;
    std::string description;

    bool operator==(const ProcessDescription&) const = default;
};

struct FunctionalObject {
    std::string name;
    std::string description;
    std::vector<ProcessDescription> processes;

    bool operator==(const FunctionalObject&) const = default;
};

struct Entity {
    std::string id;
    std::string name;
    ElementKind kind = ElementKind::Process;
    std::string description;
    std::optional<std::string> boundary_id;
    std::vector<FunctionalObject> functions;

    bool operator==(const Entity&) const = default;
};

enum class TriState { Yes, No, Unknown };
std::string_view to_string(TriState value);
TriState parse_tri_state(std::string_view text);

enum class SecurityLevel { Low, Moderate, High, Unknown };
std::string_view to_string(SecurityLevel level);
SecurityLevel parse_security_level(std::string_view text);

struct SecurityAttributes {
    TriState requires_authentication = TriState::Unknown;
    TriState requires_encryption = TriState::Unknown;
    std::optional<SecurityLevel> confidentiality;
    std::optional<SecurityLevel> integrity;
    std::optional<SecurityLevel> availability;

    bool operator==(const SecurityAttributes&) const = default;
};

struct DataFlowRecord {
    std::string id;
    std::string name;
    std::string definition;
    std::string initiator_id;
    std::string acceptor_id;
    SecurityAttributes security;

    bool operator==(const DataFlowRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Threats
// ---------------------------------------------------------------------------

/// Which element of an interaction a threat is raised against.
enum class SubjectRole { Flow, Source, Target };
std::string_view to_string(SubjectRole role);
SubjectRole parse_subject_role(std::string_view text);

struct StrideThreat {
    std::string id;
    ThreatCategory category = ThreatCategory::Spoofing;
    std::string title;
    std::string description;
    std::string interaction_id;
    SubjectRole subject_role = SubjectRole::Flow;
    std::string subject_element; // flow id or entity id, depending on role
    Priority priority = Priority::Medium;
    ThreatState state = ThreatState::NotStarted;

    bool operator==(const StrideThreat&) const = default;
};

// ---------------------------------------------------------------------------
// ATT&CK technique identifiers
// ---------------------------------------------------------------------------

/// `T` + 4 digits, optionally `.` + 3 digits. Always stored upper-case.
class TechniqueId {
public:
    static TechniqueId parse(std::string_view text);
    static std::optional<TechniqueId> try_parse(std::string_view text);

    const std::string& str() const noexcept { return value_; }
    bool is_subtechnique() const noexcept { return value_.size() > 5; }
    TechniqueId parent() const;

    auto operator<=>(const TechniqueId&) const = default;
    bool operator==(const TechniqueId&) const = default;

private:
    explicit TechniqueId(std::string value) : value_(std::move(value)) {}
    std::string value_;
};

inline TechniqueId parse_technique_id(std::string_view text) { return TechniqueId::parse(text); }
inline TechniqueId parent_of(const TechniqueId& id) { return id.parent(); }

/// Insertion-ordered set of ids; duplicates are ignored.
class TechniqueSet {
public:
    TechniqueSet() = default;
    TechniqueSet(std::initializer_list<TechniqueId> ids);

    bool insert(const TechniqueId& id);
    bool contains(const TechniqueId& id) const;
    const std::vector<TechniqueId>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    bool operator==(const TechniqueSet&) const = default;

private:
    std::vector<TechniqueId> items_;
};

// ---------------------------------------------------------------------------
// Identification inputs and outputs
// ---------------------------------------------------------------------------

struct BasicInput {
    DataFlowRecord flow;
    Entity initiator;
    Entity acceptor;
    std::vector<StrideThreat> stride_threats;
};

/// Throws InvalidArgument when a threat references a different flow.
void validate(const BasicInput& input);

enum class Strategy { Rag, Icl, Classifier };
std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view text);

struct Exchange {
    std::string prompt;
    std::string response;

    bool operator==(const Exchange&) const = default;
};

struct Candidate {
    TechniqueId id;
    double similarity = 0.0;

    bool operator==(const Candidate&) const = default;
};

/// Retrieval hits for one general attack named by the first agent.
struct RetrievalHits {
    std::string attack; // probe text, "name: description"
    std::vector<Candidate> hits;
};

struct IdentificationResult {
    std::string flow_id;
    Strategy strategy = Strategy::Rag;
    TechniqueSet technique_ids;
    std::vector<Exchange> transcripts;
    std::optional<std::vector<Candidate>> candidates;
    std::vector<RetrievalHits> retrieval;
    // Ids kept although the model named them outside the candidate table.
    std::vector<TechniqueId> out_of_candidate;
    std::vector<std::string> warnings;
    // Set when the strategy produced nothing to choose from (no retrieval
    // hits, or no score above threshold).
    bool empty_flagged = false;
};

} // namespace tmf
