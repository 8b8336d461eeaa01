#include "support.hpp"

#include "tmf/attack_path.hpp"
#include "tmf/dfd.hpp"
#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <doctest.h>

#include <deque>
#include <set>

using namespace tmf;
using testing::data_path;
using testing::sample_kb;

namespace {

using Seq = std::vector<std::string>;

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected tmf::Error");
    return ErrorCode::InvalidArgument;
}

TechniqueId tid(std::string_view s) { return TechniqueId::parse(s); }

IdentificationResult result_for(const std::string& flow, std::initializer_list<const char*> ids)
{
    IdentificationResult r;
    r.flow_id = flow;
    for (const char* id : ids) {
        r.technique_ids.insert(tid(id));
    }
    return r;
}

const DfdGraph& purdue()
{
    static const DfdGraph g = load_dfd(data_path("scenarios/purdue.dfd"));
    return g;
}

EntityGraph purdue_graph()
{
    return build_entity_graph(purdue(), {result_for("f01", {"T1552", "T1059"}), result_for("f02", {"T1565"})});
}

EntityGraph chain(std::size_t n)
{
    EntityGraph g;
    for (std::size_t i = 0; i < n; ++i) {
        g.nodes["n" + std::to_string(i)] = "Node " + std::to_string(i);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        g.edges.push_back({"n" + std::to_string(i), "n" + std::to_string(i + 1), "f" + std::to_string(i), {}});
    }
    return g;
}

std::vector<Seq> sequences(const std::vector<AttackPath>& paths)
{
    std::vector<Seq> out;
    for (const auto& p : paths) {
        out.push_back(p.node_sequence);
    }
    return out;
}

// Breadth-first over partial paths; independent of the DFS under test.
std::vector<Seq> oracle_paths(const std::set<std::pair<std::string, std::string>>& edges, const std::string& s,
                              const std::string& t, std::size_t max_depth)
{
    std::vector<Seq> out;
    std::deque<Seq> queue{{s}};
    while (!queue.empty()) {
        Seq p = queue.front();
        queue.pop_front();
        if (p.back() == t) {
            out.push_back(p);
            continue;
        }
        if (p.size() - 1 >= max_depth) {
            continue;
        }
        for (const auto& [a, b] : edges) {
            if (a == p.back() && std::find(p.begin(), p.end(), b) == p.end()) {
                Seq q = p;
                q.push_back(b);
                queue.push_back(std::move(q));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

const std::string kReply =
    "Here is the analysis.\n\n"
    "| # | Predicted Attack Path | Execution Steps using ATT&CK Techniques |\n"
    "|---|---|---|\n"
    "| 1 | Human User → VPN Server → Business Servers | 1. Use stored secrets (T1552) or run scripts (T1059). "
    "2. Stage tools (T1105). 3. Watch traffic (T1040). 4. Intercept sessions (T1557). 5. Alter records (T1565) or "
    "damage firmware (T1495). |\n"
    "| 2 | **Human User** -> VPN Server -> Domain Controller1 -> Business Servers | 1. Log in (T1552).<br>2. Relay "
    "(T1557). 3. Escalate (T1548). 4. Sniff (T1040). 5. Break servers (T1495). |\n";

} // namespace

TEST_CASE("entity graph from flows and results")
{
    DfdGraph d = parse_dfd(R"(entity a kind=process name="Alpha"
entity b kind=process name="Beta"
entity c kind=datastore name="Gamma Store"
flow f1 from=a to=b name="one"
flow f2 from=b to=c name="two"
flow f3 from=a to=b name="three"
)");
    const auto g = build_entity_graph(d, {result_for("f1", {"T1040"}), result_for("f3", {"T1557", "T1040"})});
    CHECK(g.nodes.size() == 3);
    REQUIRE(g.edges.size() == 3);
    CHECK(g.has_edge("a", "b"));
    CHECK_FALSE(g.has_edge("b", "a"));
    CHECK(g.techniques("a", "b").items() == std::vector<TechniqueId>{tid("T1040"), tid("T1557")});
    CHECK(g.techniques("b", "c").empty());
    CHECK(g.successors("a") == Seq{"b"});
    CHECK(g.resolve("gamma-store") == "c");
    CHECK(g.resolve("Beta") == "b");
    CHECK(code_of([&] { g.resolve("Delta"); }) == ErrorCode::UnknownEntity);
    CHECK(code_of([&] { build_entity_graph(d, {result_for("f9", {"T1040"})}); }) ==
          ErrorCode::UnknownFlowInResults);
}

TEST_CASE("ICS graph reproduces the adjacency of the scenario")
{
    const auto g = purdue_graph();
    CHECK(g.nodes.size() == 16);
    CHECK(g.edges.size() == 20);
    CHECK(g.has_edge("human_user", "vpn_server"));
    CHECK(g.has_edge("plc", "scada"));
    CHECK_FALSE(g.has_edge("scada", "plc"));
    CHECK(g.techniques("human_user", "vpn_server").items() == std::vector<TechniqueId>{tid("T1552"), tid("T1059")});
}

TEST_CASE("linear chain has exactly one path")
{
    const auto g = chain(5);
    const auto paths = enumerate_paths(g, "n0", "n4");
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].node_sequence == Seq{"n0", "n1", "n2", "n3", "n4"});
    CHECK(paths[0].steps.size() == 4);
    CHECK(paths[0].source == PathSource::Enumerated);
    CHECK(enumerate_paths(g, "n0", "n4", 3).empty());
    CHECK(enumerate_paths(g, "n4", "n0").empty());
    CHECK(enumerate_paths(g, "Node 0", "Node 1").size() == 1);
}

TEST_CASE("ICS reference paths are enumerated")
{
    const auto g = purdue_graph();
    const auto paths = enumerate_paths(g, "Human User", "Business Servers");
    CHECK(sequences(paths) == std::vector<Seq>{
                                  {"human_user", "vpn_server", "business_servers"},
                                  {"human_user", "vpn_server", "dc1", "business_servers"},
                                  {"human_user", "vpn_server", "jump_server", "historian1", "business_servers"},
                              });
    CHECK(paths[0].steps[0].technique_ids.items() == std::vector<TechniqueId>{tid("T1552"), tid("T1059")});
    CHECK(paths[0].steps[1].technique_ids.items() == std::vector<TechniqueId>{tid("T1565")});
    CHECK(enumerate_paths(g, "human_user", "business_servers", 7).size() == 4);
    CHECK(enumerate_paths(g, "human_user", "business_servers", 8).size() == 5);
    CHECK(enumerate_paths(g, "human_user", "business_servers", 1).empty());
}

TEST_CASE("path enumeration edge cases")
{
    EntityGraph g = chain(3);
    g.nodes["x"] = "Island";
    CHECK(enumerate_paths(g, "n0", "x").empty());
    CHECK(code_of([&] { enumerate_paths(g, "n0", "n0"); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { enumerate_paths(g, "n0", "nowhere"); }) == ErrorCode::UnknownEntity);
    CHECK(enumerate_paths(g, "n0", "n2", 0).empty());
}

TEST_CASE("property: enumeration matches a breadth-first oracle")
{
    std::mt19937_64 rng(17);
    for (int round = 0; round < 300; ++round) {
        const std::size_t n = 2 + rng() % 11;
        EntityGraph g;
        for (std::size_t i = 0; i < n; ++i) {
            g.nodes["v" + std::to_string(i)] = "V" + std::to_string(i);
        }
        std::set<std::pair<std::string, std::string>> edges;
        const std::size_t m = rng() % (n * 3);
        for (std::size_t i = 0; i < m; ++i) {
            const auto a = "v" + std::to_string(rng() % n);
            const auto b = "v" + std::to_string(rng() % n);
            if (a == b) {
                continue;
            }
            edges.emplace(a, b);
            g.edges.push_back({a, b, "f" + std::to_string(i), {}});
        }
        const std::string s = "v0";
        const std::string t = "v" + std::to_string(1 + rng() % (n - 1));
        const std::size_t depth = 1 + rng() % 7;
        const auto paths = enumerate_paths(g, s, t, depth);
        CHECK(sequences(paths) == oracle_paths(edges, s, t, depth));

        for (const auto& p : paths) {
            CHECK(p.node_sequence.front() == s);
            CHECK(p.node_sequence.back() == t);
            CHECK(std::set<std::string>(p.node_sequence.begin(), p.node_sequence.end()).size() ==
                  p.node_sequence.size());
            CHECK(p.steps.size() + 1 == p.node_sequence.size());
            for (std::size_t i = 0; i + 1 < p.node_sequence.size(); ++i) {
                CHECK(edges.contains({p.node_sequence[i], p.node_sequence[i + 1]}));
                CHECK(p.steps[i].from == p.node_sequence[i]);
                CHECK(p.steps[i].to == p.node_sequence[i + 1]);
            }
        }
        // Raising the depth bound never loses a path.
        const auto deeper = sequences(enumerate_paths(g, s, t, depth + 1));
        for (const auto& p : sequences(paths)) {
            CHECK(std::find(deeper.begin(), deeper.end(), p) != deeper.end());
        }
    }
}

TEST_CASE("asset prompt")
{
    const auto g = purdue_graph();
    const auto prompt = build_asset_prompt(g, "human_user", "business_servers");
    CHECK(prompt.find("Target asset: Business Servers") != std::string::npos);
    CHECK(prompt.find("Starting point: Human User") != std::string::npos);
    CHECK(prompt.find("| Human User | VPN Server | T1552, T1059 |") != std::string::npos);
    CHECK(prompt.find("| VPN Server | Domain Controller1 | (none) |") != std::string::npos);
    std::size_t rows = 0;
    for (const auto& line : text::split_lines(prompt)) {
        rows += line.starts_with("| ") && !line.starts_with("| Initiator") ? 1 : 0;
    }
    CHECK(rows == g.edges.size());
    CHECK(build_asset_prompt(purdue_graph(), "Human User", "Business Servers") == prompt);

    const auto one = chain(2);
    const auto small = build_asset_prompt(one, "n0", "n1");
    CHECK(small.find("| Node 0 | Node 1 | (none) |") != std::string::npos);
    CHECK(code_of([&] { build_asset_prompt(one, "n0", "n0"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("path table parsing")
{
    const auto g = purdue_graph();
    const auto parsed = parse_path_table(kReply, g, sample_kb());
    REQUIRE(parsed.paths.size() == 2);
    const auto& first = parsed.paths[0];
    CHECK(first.source == PathSource::Llm);
    CHECK(first.node_sequence == Seq{"human_user", "vpn_server", "business_servers"});
    REQUIRE(first.steps.size() == 5);
    const std::vector<std::set<std::string>> expected = {
        {"T1552", "T1059"}, {"T1105"}, {"T1040"}, {"T1557"}, {"T1565", "T1495"}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        std::set<std::string> got;
        for (const auto& id : first.steps[i].technique_ids) {
            got.insert(id.str());
        }
        CHECK(got == expected[i]);
        CHECK(first.steps[i].from.empty());
    }
    CHECK(parsed.paths[1].node_sequence == Seq{"human_user", "vpn_server", "dc1", "business_servers"});
    CHECK(parsed.paths[1].steps.size() == 5);
    CHECK(parsed.warnings.empty());
}

TEST_CASE("path table parsing tolerates bad ids and unknown nodes")
{
    const auto g = purdue_graph();
    const std::string reply = "| Predicted Attack Path | Execution Steps using ATT&CK Techniques |\n"
                              "|---|---|\n"
                              "| Human User → Mystery Box → Business Servers | 1. Encrypt data (T486). 2. Use T1486. "
                              "3. Invent T9999. |\n";
    const auto parsed = parse_path_table(reply, g, sample_kb());
    REQUIRE(parsed.paths.size() == 1);
    const auto& p = parsed.paths[0];
    CHECK(p.node_sequence == Seq{"human_user", "Mystery Box", "business_servers"});
    CHECK(p.unmatched_nodes == Seq{"Mystery Box"});
    REQUIRE(p.steps.size() == 3);
    CHECK(p.steps[0].technique_ids.empty());
    CHECK(p.steps[1].technique_ids.items() == std::vector<TechniqueId>{tid("T1486")});
    CHECK(p.steps[2].technique_ids.empty());
    const auto has = [&](std::string_view s) {
        return std::any_of(parsed.warnings.begin(), parsed.warnings.end(),
                           [&](const std::string& w) { return w.find(s) != std::string::npos; });
    };
    CHECK(has("'T486'"));
    CHECK(has("T9999"));
    CHECK(has("Mystery Box"));

    CHECK(code_of([&] { parse_path_table("", g, sample_kb()); }) == ErrorCode::UnparseableResponse);
    CHECK(code_of([&] { parse_path_table("No table, sorry.", g, sample_kb()); }) == ErrorCode::UnparseableResponse);
    CHECK(code_of([&] { parse_path_table("| Path | Steps |\n|---|---|\n", g, sample_kb()); }) ==
          ErrorCode::UnparseableResponse);
}

TEST_CASE("model paths go through the gateway with the analyst persona")
{
    const auto g = purdue_graph();
    const auto prompt = build_asset_prompt(g, "human_user", "business_servers");
    SUBCASE("direct")
    {
        Gateway gw(script_provider({{{"Starting point: Human User", "Predicted Attack Path"}, kReply}}));
        const auto out = llm_attack_paths(prompt, g, gw, sample_kb());
        CHECK(out.paths.size() == 2);
        REQUIRE(out.transcripts.size() == 1);
        CHECK(out.transcripts[0].prompt.starts_with(std::string(kAnalystPersona)));
    }
    SUBCASE("reprompt")
    {
        Gateway gw(script_provider({{{"Answer again"}, kReply}, {{"Predicted Attack Path"}, "I would rather not."}}));
        const auto out = llm_attack_paths(prompt, g, gw, sample_kb());
        CHECK(out.paths.size() == 2);
        CHECK(out.transcripts.size() == 2);
        CHECK(out.warnings.at(0).find("reprompted") != std::string::npos);
    }
    SUBCASE("gives up after one reprompt")
    {
        Gateway gw(script_provider({{{"Predicted Attack Path"}, "Still no."}}));
        CHECK(code_of([&] { llm_attack_paths(prompt, g, gw, sample_kb()); }) == ErrorCode::UnparseableResponse);
        CHECK(gw.transcript().size() == 2);
    }
}

TEST_CASE("cross-check verdicts")
{
    const auto g = purdue_graph();
    const auto enumerated = enumerate_paths(g, "human_user", "business_servers");
    const auto parsed = parse_path_table(kReply, g, sample_kb());

    SUBCASE("model paths on the graph are present")
    {
        const auto report = cross_check(parsed.paths, enumerated, g);
        CHECK(report.summary.at(CrossVerdict::Present) == 2);
        CHECK(report.summary.size() == 4);
    }
    SUBCASE("a hop with no flow is reported")
    {
        AttackPath p;
        p.source = PathSource::Llm;
        p.node_sequence = {"human_user", "dc1", "business_servers"};
        const auto report = cross_check({p}, enumerated, g);
        REQUIRE(report.entries.size() == 1);
        CHECK(report.entries[0].verdict == CrossVerdict::OffGraphHop);
        CHECK(report.entries[0].off_graph_hops ==
              std::vector<std::pair<std::string, std::string>>{{"human_user", "dc1"}});
    }
    SUBCASE("unmatched names and absent paths")
    {
        AttackPath unknown;
        unknown.node_sequence = {"human_user", "Mystery", "business_servers"};
        AttackPath deep;
        deep.node_sequence = {"human_user", "vpn_server", "jump_server", "eng_ws", "scada", "historian2",
                              "historian1", "business_servers"};
        const auto report = cross_check({unknown, deep}, enumerated, g);
        CHECK(report.entries[0].verdict == CrossVerdict::Unmatched);
        CHECK(report.entries[1].verdict == CrossVerdict::Absent);
    }
    SUBCASE("no model paths")
    {
        const auto report = cross_check({}, enumerated, g);
        CHECK(report.entries.empty());
        for (const auto& [verdict, n] : report.summary) {
            CHECK(n == 0);
        }
    }
}
