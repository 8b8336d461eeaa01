#include "support.hpp"

#include "tmf/attack_kb.hpp"
#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

using namespace tmf;
using nlohmann::json;
using testing::data_path;
using testing::sample_kb;

namespace {

json attack_pattern(const std::string& stix, const std::string& id, const std::string& name, bool revoked = false)
{
    return {{"type", "attack-pattern"},
            {"id", stix},
            {"name", name},
            {"description", name + " text"},
            {"revoked", revoked},
            {"kill_chain_phases", json::array({{{"kill_chain_name", "mitre-attack"}, {"phase_name", "discovery"}}})},
            {"external_references", json::array({{{"source_name", "mitre-attack"}, {"external_id", id}}})}};
}

json relationship(const std::string& id, const std::string& kind, const std::string& src, const std::string& dst)
{
    return {{"type", "relationship"},
            {"id", id},
            {"relationship_type", kind},
            {"source_ref", src},
            {"target_ref", dst}};
}

json bundle(json objects) { return {{"type", "bundle"}, {"id", "bundle--1"}, {"objects", std::move(objects)}}; }

} // namespace

TEST_CASE("sample bundle resolves the cited techniques")
{
    const auto& kb = sample_kb();
    CHECK(kb.matrix_name() == "Enterprise ATT&CK");
    CHECK(get_technique(kb, TechniqueId::parse("T1552")).name == "Unsecured Credentials");
    CHECK(get_technique(kb, TechniqueId::parse("T1059")).name == "Command and Scripting Interpreter");
    CHECK(get_technique(kb, TechniqueId::parse("T1486")).name == "Data Encrypted for Impact");
    CHECK_THROWS_AS(get_technique(kb, TechniqueId::parse("T9999")), Error);
    try {
        get_technique(kb, TechniqueId::parse("T9999"));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownTechnique);
    }
}

TEST_CASE("sub-techniques link to their parents")
{
    const auto& kb = sample_kb();
    const auto& sub = kb.get(TechniqueId::parse("T1566.001"));
    CHECK(kb.find(sub.id.parent()) != nullptr);
    const auto& parent = kb.get(TechniqueId::parse("T1566"));
    CHECK(parent.sub_technique_ids ==
          std::vector<TechniqueId>{TechniqueId::parse("T1566.001"), TechniqueId::parse("T1566.002")});
    for (const auto& [id, r] : kb.techniques()) {
        for (const auto& s : r.sub_technique_ids) {
            CHECK(s.parent() == id);
        }
        if (id.is_subtechnique()) {
            CHECK(kb.find(id.parent()) != nullptr);
        }
    }
}

TEST_CASE("revoked techniques are stored but never valid")
{
    const auto& kb = sample_kb();
    const auto id = TechniqueId::parse("T1086");
    REQUIRE(kb.find(id) != nullptr);
    CHECK(kb.find(id)->revoked);
    CHECK_FALSE(kb.is_valid(id));
    for (const auto& [cid, text] : export_corpus(kb)) {
        CHECK(cid != id);
    }
}

TEST_CASE("countermeasures come from relationships")
{
    const auto& kb = sample_kb();
    const auto cm = countermeasures(kb, TechniqueId::parse("T1040"));
    REQUIRE_FALSE(cm.mitigations.empty());
    const bool encryption = std::any_of(cm.mitigations.begin(), cm.mitigations.end(), [](const Mitigation& m) {
        return text::contains_ci(m.name, "encrypt");
    });
    CHECK(encryption);
    CHECK_FALSE(countermeasures(kb, TechniqueId::parse("T1486")).detections.empty());

    KnowledgeBase bare("x", "1");
    bare.add(testing::technique("T1234", "Lonely"));
    const auto none = countermeasures(bare, TechniqueId::parse("T1234"));
    CHECK(none.detections.empty());
    CHECK(none.mitigations.empty());
}

TEST_CASE("corpus has one entry per live technique, text starting with the name")
{
    KnowledgeBase kb("x", "1");
    kb.add(testing::technique("T1001", "One"));
    kb.add(testing::technique("T1002", "Two"));
    kb.add(testing::technique("T1003", "Three", "", true));
    const auto corpus = export_corpus(kb);
    CHECK(corpus.size() == 2);
    for (const auto& [id, text] : corpus) {
        CHECK(text.starts_with(kb.get(id).name));
    }

    const auto& sample = sample_kb();
    std::size_t live = 0;
    for (const auto& [id, r] : sample.techniques()) {
        live += r.revoked ? 0 : 1;
    }
    CHECK(export_corpus(sample).size() == live);
}

TEST_CASE("bundle edge cases")
{
    SUBCASE("zero attack-patterns")
    {
        try {
            parse_stix_bundle(bundle(json::array({{{"type", "course-of-action"}, {"id", "course-of-action--1"}}})).dump());
            FAIL("expected EmptyBundle");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::EmptyBundle);
        }
    }
    SUBCASE("not a bundle")
    {
        CHECK_THROWS_AS(parse_stix_bundle(R"({"type": "identity"})"), Error);
        CHECK_THROWS_AS(parse_stix_bundle("{"), Error);
    }
    SUBCASE("mitigation with a missing course of action is dropped with a warning")
    {
        const auto kb = parse_stix_bundle(bundle(json::array({
                                                     attack_pattern("attack-pattern--a", "T1040", "Network Sniffing"),
                                                     relationship("relationship--1", "mitigates",
                                                                  "course-of-action--gone", "attack-pattern--a"),
                                                 }))
                                              .dump());
        CHECK(kb.get(TechniqueId::parse("T1040")).mitigations.empty());
        REQUIRE(kb.warnings().size() == 1);
        CHECK(kb.warnings()[0].find("course-of-action--gone") != std::string::npos);
    }
    SUBCASE("a revoked duplicate id yields to the live object")
    {
        const auto kb = parse_stix_bundle(bundle(json::array({
                                                     attack_pattern("attack-pattern--old", "T1059", "Old Name", true),
                                                     attack_pattern("attack-pattern--new", "T1059", "New Name"),
                                                 }))
                                              .dump());
        CHECK(kb.get(TechniqueId::parse("T1059")).name == "New Name");
        CHECK(kb.is_valid(TechniqueId::parse("T1059")));
    }
    SUBCASE("tactics and detections are collected")
    {
        json ap = attack_pattern("attack-pattern--a", "T1087", "Account Discovery");
        ap["x_mitre_detection"] = "Watch for enumeration commands.";
        const auto kb = parse_stix_bundle(
            bundle(json::array({ap, {{"type", "x-mitre-data-component"}, {"id", "x-mitre-data-component--1"},
                                     {"name", "Process Creation"}},
                                relationship("relationship--2", "detects", "x-mitre-data-component--1",
                                             "attack-pattern--a")}))
                .dump());
        const auto& r = kb.get(TechniqueId::parse("T1087"));
        CHECK(r.tactics == std::vector<std::string>{"discovery"});
        CHECK(r.detections.size() == 2);
    }
}

TEST_CASE("import is idempotent and snapshots round trip")
{
    const auto path = data_path("attack/sample-bundle.json");
    const auto a = import_stix_bundle(path);
    const auto b = import_stix_bundle(path);
    CHECK(a == b);

    const auto snap = kb_to_snapshot_json(a);
    CHECK(kb_from_snapshot_json(snap) == a);
    CHECK(kb_to_snapshot_json(kb_from_snapshot_json(snap)) == snap);

    testing::TempDir dir;
    save_snapshot(a, dir / "kb.json");
    CHECK(load_snapshot(dir / "kb.json") == a);
    CHECK(load_knowledge_base(dir / "kb.json") == a);
    CHECK(load_knowledge_base(path) == a);
    CHECK_THROWS_AS(kb_from_snapshot_json(R"({"matrix_name": "x"})"), Error);
}
