#include "tmf/attack_kb.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <unordered_map>

namespace tmf {

using nlohmann::json;

KnowledgeBase::KnowledgeBase(std::string matrix_name, std::string version)
    : matrix_name_(std::move(matrix_name)), version_(std::move(version))
{
}

void KnowledgeBase::add(TechniqueRecord record)
{
    const TechniqueId id = record.id;
    record.sub_technique_ids.clear();
    if (!id.is_subtechnique()) {
        for (auto it = techniques_.upper_bound(id); it != techniques_.end() && it->first.parent() == id; ++it) {
            record.sub_technique_ids.push_back(it->first);
        }
    }
    techniques_.insert_or_assign(id, std::move(record));
    if (id.is_subtechnique()) {
        if (auto parent = techniques_.find(id.parent()); parent != techniques_.end()) {
            auto& subs = parent->second.sub_technique_ids;
            if (std::find(subs.begin(), subs.end(), id) == subs.end()) {
                subs.push_back(id);
                std::sort(subs.begin(), subs.end());
            }
        }
    }
}

const TechniqueRecord* KnowledgeBase::find(const TechniqueId& id) const
{
    auto it = techniques_.find(id);
    return it == techniques_.end() ? nullptr : &it->second;
}

const TechniqueRecord& KnowledgeBase::get(const TechniqueId& id) const
{
    if (const auto* r = find(id)) {
        return *r;
    }
    fail(ErrorCode::UnknownTechnique, id.str() + " is not in the knowledge base");
}

bool KnowledgeBase::is_valid(const TechniqueId& id) const
{
    const auto* r = find(id);
    return r != nullptr && !r->revoked;
}

const TechniqueRecord& get_technique(const KnowledgeBase& kb, const TechniqueId& id)
{
    return kb.get(id);
}

Countermeasures countermeasures(const KnowledgeBase& kb, const TechniqueId& id)
{
    const auto& r = kb.get(id);
    return {r.detections, r.mitigations};
}

std::vector<std::pair<TechniqueId, std::string>> export_corpus(const KnowledgeBase& kb)
{
    std::vector<std::pair<TechniqueId, std::string>> corpus;
    for (const auto& [id, r] : kb.techniques()) {
        if (!r.revoked) {
            corpus.emplace_back(id, r.name + ": " + r.description);
        }
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// STIX import
// ---------------------------------------------------------------------------

namespace {

std::string str_or(const json& obj, const char* key, std::string fallback = {})
{
    auto it = obj.find(key);
    return it != obj.end() && it->is_string() ? it->get<std::string>() : fallback;
}

bool flag(const json& obj, const char* key)
{
    auto it = obj.find(key);
    return it != obj.end() && it->is_boolean() && it->get<bool>();
}

std::optional<std::string> mitre_external_id(const json& obj)
{
    auto refs = obj.find("external_references");
    if (refs == obj.end() || !refs->is_array()) {
        return std::nullopt;
    }
    for (const auto& ref : *refs) {
        const std::string source = str_or(ref, "source_name");
        if (source.rfind("mitre-", 0) == 0 && ref.contains("external_id")) {
            return str_or(ref, "external_id");
        }
    }
    return std::nullopt;
}

struct CourseOfAction {
    std::string external_id;
    std::string name;
    std::string description;
};

} // namespace

KnowledgeBase parse_stix_bundle(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, std::string("bundle: invalid JSON: ") + e.what());
    }
    if (!root.is_object() || str_or(root, "type") != "bundle") {
        fail(ErrorCode::SchemaError, "bundle: top-level object must have \"type\": \"bundle\"");
    }
    auto objects_it = root.find("objects");
    if (objects_it == root.end() || !objects_it->is_array()) {
        fail(ErrorCode::SchemaError, "bundle.objects: expected an array");
    }
    const json& objects = *objects_it;

    std::string matrix_name;
    std::string version;
    std::unordered_map<std::string, TechniqueRecord> by_stix_id;
    std::unordered_map<std::string, CourseOfAction> coas;
    std::unordered_map<std::string, std::string> data_components;
    std::vector<std::string> warnings;

    for (std::size_t i = 0; i < objects.size(); ++i) {
        const json& obj = objects[i];
        if (!obj.is_object()) {
            fail(ErrorCode::SchemaError, "bundle.objects[" + std::to_string(i) + "]: expected an object");
        }
        const std::string type = str_or(obj, "type");
        const std::string stix_id = str_or(obj, "id");
        if (type.empty() || stix_id.empty()) {
            fail(ErrorCode::SchemaError, "bundle.objects[" + std::to_string(i) + "]: missing type or id");
        }
        if (type == "attack-pattern") {
            auto ext = mitre_external_id(obj);
            auto tid = ext ? TechniqueId::try_parse(*ext) : std::nullopt;
            if (!tid) {
                warnings.push_back("attack-pattern " + stix_id + " has no technique id; skipped");
                continue;
            }
            TechniqueRecord r;
            r.id = *tid;
            r.name = str_or(obj, "name");
            r.description = str_or(obj, "description");
            r.revoked = flag(obj, "revoked") || flag(obj, "x_mitre_deprecated");
            if (auto kcp = obj.find("kill_chain_phases"); kcp != obj.end() && kcp->is_array()) {
                for (const auto& phase : *kcp) {
                    if (str_or(phase, "kill_chain_name").find("mitre") != std::string::npos) {
                        r.tactics.push_back(str_or(phase, "phase_name"));
                    }
                }
            }
            if (auto det = str_or(obj, "x_mitre_detection"); !text::trim(det).empty()) {
                r.detections.push_back(det);
            }
            by_stix_id.emplace(stix_id, std::move(r));
        } else if (type == "course-of-action") {
            coas.emplace(stix_id, CourseOfAction{mitre_external_id(obj).value_or(""), str_or(obj, "name"),
                                                 str_or(obj, "description")});
        } else if (type == "x-mitre-data-component") {
            data_components.emplace(stix_id, str_or(obj, "name"));
        } else if (type == "x-mitre-matrix") {
            if (matrix_name.empty()) {
                matrix_name = str_or(obj, "name");
            }
        } else if (type == "x-mitre-collection") {
            version = str_or(obj, "x_mitre_version", version);
            if (matrix_name.empty()) {
                matrix_name = str_or(obj, "name");
            }
        }
    }

    if (by_stix_id.empty()) {
        fail(ErrorCode::EmptyBundle, "bundle contains no attack-pattern objects");
    }

    for (const json& obj : objects) {
        if (str_or(obj, "type") != "relationship" || flag(obj, "revoked") || flag(obj, "x_mitre_deprecated")) {
            continue;
        }
        const std::string kind = str_or(obj, "relationship_type");
        const std::string source = str_or(obj, "source_ref");
        const std::string target = str_or(obj, "target_ref");
        if (kind != "mitigates" && kind != "detects") {
            continue;
        }
        auto technique = by_stix_id.find(target);
        if (technique == by_stix_id.end()) {
            if (target.rfind("attack-pattern--", 0) == 0) {
                warnings.push_back(kind + " relationship " + str_or(obj, "id") + " targets unknown " + target);
            }
            continue;
        }
        if (kind == "mitigates") {
            auto coa = coas.find(source);
            if (coa == coas.end()) {
                warnings.push_back("mitigates relationship " + str_or(obj, "id") + " references missing " + source +
                                   "; dropped");
                continue;
            }
            std::string text = str_or(obj, "description");
            if (text::trim(text).empty()) {
                text = coa->second.description;
            }
            technique->second.mitigations.push_back({coa->second.external_id, coa->second.name, text});
        } else {
            auto comp = data_components.find(source);
            const std::string name = comp != data_components.end() ? comp->second : std::string();
            std::string text = str_or(obj, "description");
            if (!name.empty()) {
                text = text.empty() ? name : name + ": " + text;
            }
            if (!text::trim(text).empty()) {
                technique->second.detections.push_back(text);
            }
        }
    }

    KnowledgeBase kb(matrix_name.empty() ? "unknown" : matrix_name, version.empty() ? "unknown" : version);
    // Several STIX objects may carry one external id (a revoked object and
    // its replacement); the live one wins.
    std::map<TechniqueId, TechniqueRecord> merged;
    for (auto& [stix_id, r] : by_stix_id) {
        auto sort_key = [](const Mitigation& a, const Mitigation& b) {
            return std::tie(a.id, a.name, a.text) < std::tie(b.id, b.name, b.text);
        };
        std::sort(r.mitigations.begin(), r.mitigations.end(), sort_key);
        r.mitigations.erase(std::unique(r.mitigations.begin(), r.mitigations.end()), r.mitigations.end());
        std::sort(r.detections.begin(), r.detections.end());
        r.detections.erase(std::unique(r.detections.begin(), r.detections.end()), r.detections.end());
        auto it = merged.find(r.id);
        if (it == merged.end()) {
            merged.emplace(r.id, std::move(r));
        } else if (it->second.revoked && !r.revoked) {
            it->second = std::move(r);
        } else if (it->second.revoked == r.revoked && r.name < it->second.name) {
            it->second = std::move(r);
        }
    }
    for (auto& [id, r] : merged) {
        kb.add(std::move(r));
    }
    for (const auto& [id, r] : kb.techniques()) {
        if (id.is_subtechnique() && !kb.find(id.parent())) {
            warnings.push_back(id.str() + " has no parent technique in the bundle");
        }
    }
    std::sort(warnings.begin(), warnings.end());
    for (auto& w : warnings) {
        kb.warn(std::move(w));
    }
    return kb;
}

KnowledgeBase import_stix_bundle(const std::filesystem::path& path)
{
    return parse_stix_bundle(text::read_file(path));
}

// ---------------------------------------------------------------------------
// Snapshots
// ---------------------------------------------------------------------------

std::string kb_to_snapshot_json(const KnowledgeBase& kb)
{
    nlohmann::ordered_json root;
    root["matrix_name"] = kb.matrix_name();
    root["version"] = kb.version();
    auto& list = root["techniques"] = nlohmann::ordered_json::array();
    for (const auto& [id, r] : kb.techniques()) {
        nlohmann::ordered_json t;
        t["id"] = id.str();
        t["name"] = r.name;
        t["description"] = r.description;
        t["tactics"] = r.tactics;
        t["detections"] = r.detections;
        auto& mits = t["mitigations"] = nlohmann::ordered_json::array();
        for (const auto& m : r.mitigations) {
            mits.push_back({{"id", m.id}, {"name", m.name}, {"text", m.text}});
        }
        auto& subs = t["sub_technique_ids"] = nlohmann::ordered_json::array();
        for (const auto& s : r.sub_technique_ids) {
            subs.push_back(s.str());
        }
        t["revoked"] = r.revoked;
        list.push_back(std::move(t));
    }
    return root.dump(1) + "\n";
}

KnowledgeBase kb_from_snapshot_json(std::string_view json_text)
{
    try {
        json root = json::parse(json_text);
        KnowledgeBase kb(root.at("matrix_name").get<std::string>(), root.at("version").get<std::string>());
        const json& list = root.at("techniques");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const json& t = list[i];
            TechniqueRecord r;
            try {
                r.id = TechniqueId::parse(t.at("id").get<std::string>());
            } catch (const Error& e) {
                fail(ErrorCode::SchemaError, "techniques[" + std::to_string(i) + "].id: " + e.what());
            }
            r.name = t.at("name").get<std::string>();
            r.description = t.value("description", std::string());
            r.tactics = t.value("tactics", std::vector<std::string>{});
            r.detections = t.value("detections", std::vector<std::string>{});
            for (const auto& m : t.value("mitigations", json::array())) {
                r.mitigations.push_back(
                    {m.value("id", std::string()), m.value("name", std::string()), m.value("text", std::string())});
            }
            r.revoked = t.value("revoked", false);
            kb.add(std::move(r));
        }
        return kb;
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("snapshot: ") + e.what());
    }
}

void save_snapshot(const KnowledgeBase& kb, const std::filesystem::path& path)
{
    text::write_file(path, kb_to_snapshot_json(kb));
}

KnowledgeBase load_snapshot(const std::filesystem::path& path)
{
    return kb_from_snapshot_json(text::read_file(path));
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& path)
{
    const std::string contents = text::read_file(path);
    json probe;
    try {
        probe = json::parse(contents);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, path.string() + ": invalid JSON: " + e.what());
    }
    if (probe.is_object() && str_or(probe, "type") == "bundle") {
        return parse_stix_bundle(contents);
    }
    return kb_from_snapshot_json(contents);
}

} // namespace tmf
