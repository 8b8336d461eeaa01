#pragma once

// ATT&CK knowledge base: STIX 2.1 bundle import, snapshot persistence and
// technique lookups.

#include "tmf/model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tmf {

struct Mitigation {
    std::string id; // e.g. "M1041"
    std::string name;
    std::string text;

    bool operator==(const Mitigation&) const = default;
};

struct TechniqueRecord {
    TechniqueId id = TechniqueId::parse("T0000");
    std::string name;
    std::string description;
    std::vector<std::string> tactics;
    std::vector<std::string> detections;
    std::vector<Mitigation> mitigations;
    std::vector<TechniqueId> sub_technique_ids;
    bool revoked = false; // revoked or deprecated

    bool operator==(const TechniqueRecord&) const = default;
};

struct Countermeasures {
    std::vector<std::string> detections;
    std::vector<Mitigation> mitigations;
};

class KnowledgeBase {
public:
    KnowledgeBase() = default;
    KnowledgeBase(std::string matrix_name, std::string version);

    /// Adds or replaces a record; sub-technique lists are rebuilt.
    void add(TechniqueRecord record);

    const TechniqueRecord& get(const TechniqueId& id) const; // UnknownTechnique
    const TechniqueRecord* find(const TechniqueId& id) const;

    /// Present and not revoked.
    bool is_valid(const TechniqueId& id) const;

    const std::map<TechniqueId, TechniqueRecord>& techniques() const noexcept { return techniques_; }
    const std::string& matrix_name() const noexcept { return matrix_name_; }
    const std::string& version() const noexcept { return version_; }
    std::size_t size() const noexcept { return techniques_.size(); }

    /// Diagnostics collected during import (dropped relationships, ...).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void warn(std::string message) { warnings_.push_back(std::move(message)); }

    bool operator==(const KnowledgeBase& other) const
    {
        return matrix_name_ == other.matrix_name_ && version_ == other.version_ && techniques_ == other.techniques_;
    }

private:
    std::string matrix_name_;
    std::string version_;
    std::map<TechniqueId, TechniqueRecord> techniques_;
    std::vector<std::string> warnings_;
};

/// Throws SchemaError or EmptyBundle (no attack-pattern objects).
KnowledgeBase parse_stix_bundle(std::string_view json_text);
KnowledgeBase import_stix_bundle(const std::filesystem::path& path);

const TechniqueRecord& get_technique(const KnowledgeBase& kb, const TechniqueId& id);
Countermeasures countermeasures(const KnowledgeBase& kb, const TechniqueId& id);

/// One (id, "name: description") entry per non-revoked technique.
std::vector<std::pair<TechniqueId, std::string>> export_corpus(const KnowledgeBase& kb);

/// Snapshot file: {"matrix_name", "version", "techniques": [...]}.
std::string kb_to_snapshot_json(const KnowledgeBase& kb);
KnowledgeBase kb_from_snapshot_json(std::string_view json_text);
void save_snapshot(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_snapshot(const std::filesystem::path& path);

/// Loads a snapshot, or a STIX bundle when the document has "type": "bundle".
KnowledgeBase load_knowledge_base(const std::filesystem::path& path);

} // namespace tmf
