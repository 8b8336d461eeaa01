// Acceptance run: one PASS/FAIL line per primary criterion. Tolerances and
// time budgets are fixed here. Exit status is the number of failures.

#include "tmf/attack_kb.hpp"
#include "tmf/attack_path.hpp"
#include "tmf/dfd.hpp"
#include "tmf/error.hpp"
#include "tmf/evalreport.hpp"
#include "tmf/identify.hpp"
#include "tmf/llm.hpp"
#include "tmf/retrieval.hpp"
#include "tmf/stride.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tmf;
using nlohmann::json;

namespace {

constexpr double kMetricsTolerance = 1e-4;
constexpr double kMetricsBudgetSeconds = 1.0;
constexpr double kRetrievalBudgetSeconds = 5.0;
constexpr double kPathsBudgetSeconds = 5.0;
constexpr std::size_t kTopK = 3;
constexpr double kCutoff = 0.6;

fs::path data_path(const std::string& rel) { return fs::path(TMF_DATA_DIR) / rel; }

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects the first failing check of a criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && out_.pass) {
            out_.pass = false;
            out_.detail = what;
        }
    }
    void note(const std::string& s)
    {
        if (out_.pass) {
            out_.detail = s;
        }
    }
    Outcome result() const { return out_; }

private:
    Outcome out_;
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4)
{
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

const KnowledgeBase& sample_kb()
{
    static const KnowledgeBase kb = import_stix_bundle(data_path("attack/sample-bundle.json"));
    return kb;
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("tmf-acceptance-" + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Outcome metrics_oracle()
{
    Checks c;
    Stopwatch clock;
    const auto id = [](const char* s) { return TechniqueId::parse(s); };
    const auto m = multilabel_metrics(
        {make_instance("1", {id("T1552"), id("T1059"), id("T1105")}, {id("T1059"), id("T1040")}),
         make_instance("2", {id("T1486")}, {id("T1486")})});
    c.expect(std::abs(m.precision - 0.6667) <= kMetricsTolerance, "precision " + fmt(m.precision));
    c.expect(std::abs(m.recall - 0.75) <= kMetricsTolerance, "recall " + fmt(m.recall));
    c.expect(std::abs(m.f1 - 0.7059) <= kMetricsTolerance, "f1 " + fmt(m.f1));

    std::mt19937_64 rng(2024);
    std::size_t mismatches = 0;
    for (int round = 0; round < 1000; ++round) {
        std::vector<EvalInstance> set(1 + rng() % 15);
        std::vector<double> p_terms;
        std::vector<double> r_terms;
        for (std::size_t i = 0; i < set.size(); ++i) {
            set[i].flow_id = std::to_string(i);
            for (auto* side : {&set[i].predicted, &set[i].truth}) {
                const std::size_t n = rng() % 7;
                for (std::size_t k = 0; k < n; ++k) {
                    side->insert(TechniqueId::parse("T1" + std::to_string(100 + rng() % 10)));
                }
            }
            // Brute force: count shared ids by scanning both sets.
            std::size_t overlap = 0;
            for (const auto& a : set[i].predicted) {
                overlap += static_cast<std::size_t>(std::count(set[i].truth.begin(), set[i].truth.end(), a));
            }
            const double np = static_cast<double>(set[i].predicted.size());
            const double ng = static_cast<double>(set[i].truth.size());
            p_terms.push_back(np == 0 ? (ng == 0 ? 1.0 : 0.0) : static_cast<double>(overlap) / np);
            r_terms.push_back(ng == 0 ? (np == 0 ? 1.0 : 0.0) : static_cast<double>(overlap) / ng);
        }
        const auto mean = [](std::vector<double> v) {
            std::sort(v.begin(), v.end());
            double s = 0.0;
            for (double x : v) {
                s += x;
            }
            return s / static_cast<double>(v.size());
        };
        const double p = mean(p_terms);
        const double r = mean(r_terms);
        const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        const auto got = multilabel_metrics(set);
        mismatches += (got.precision != p || got.recall != r || got.f1 != f) ? 1 : 0;
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " of 1000 random sets differ from the brute force");
    const double t = clock.seconds();
    c.expect(t < kMetricsBudgetSeconds, "took " + fmt(t, 3) + " s");
    c.note("P " + fmt(m.precision) + " R " + fmt(m.recall) + " F1 " + fmt(m.f1) + ", 1000/1000 sets exact, " +
           fmt(t, 3) + " s");
    return c.result();
}

// ---------------------------------------------------------------------------
// STRIDE
// ---------------------------------------------------------------------------

Outcome stride_golden()
{
    Checks c;
    const auto g = load_dfd(data_path("scenarios/cvo03.dfd"));
    const auto table = default_rule_table();
    const auto report = generate_threats(g, table);
    const auto* it = report.find("f_1a");
    c.expect(it != nullptr, "flow f_1a missing");
    if (!it) {
        return c.result();
    }
    c.expect(it->flow_name == "(1A) electronic screening request", "flow name " + it->flow_name);
    std::set<std::pair<ThreatCategory, SubjectRole>> pairs;
    bool sanctioned = true;
    for (const auto& t : it->threats) {
        pairs.emplace(t.category, t.subject_role);
        const StrideRole role = t.subject_role == SubjectRole::Flow ? StrideRole::flow_edge()
                                : t.subject_role == SubjectRole::Source
                                    ? StrideRole::source(g.entity(t.subject_element).kind)
                                    : StrideRole::target(g.entity(t.subject_element).kind);
        sanctioned = sanctioned && table.sanctions(role, t.category);
    }
    c.expect(pairs.contains({ThreatCategory::InformationDisclosure, SubjectRole::Flow}),
             "missing (InformationDisclosure, flow)");
    c.expect(pairs.contains({ThreatCategory::Repudiation, SubjectRole::Target}), "missing (Repudiation, acceptor)");
    c.expect(pairs.contains({ThreatCategory::Tampering, SubjectRole::Flow}), "missing (Tampering, flow)");
    c.expect(sanctioned, "a threat is not sanctioned by the rule table");
    const bool sniffed = std::any_of(it->threats.begin(), it->threats.end(), [](const StrideThreat& t) {
        return t.description.find("may be sniffed by an attacker") != std::string::npos;
    });
    c.expect(sniffed, "no sniffing description");

    const auto js = emit_report(report, ReportFormat::Json);
    const auto md = emit_report(report, ReportFormat::Markdown);
    bool identical = true;
    for (int i = 0; i < 5; ++i) {
        const auto again = generate_threats(load_dfd(data_path("scenarios/cvo03.dfd")), default_rule_table());
        identical = identical && emit_report(again, ReportFormat::Json) == js &&
                    emit_report(again, ReportFormat::Markdown) == md;
    }
    c.expect(identical, "repeat runs differ");
    c.note("3 required pairs present, " + std::to_string(it->threats.size()) +
           " threats all sanctioned, 5 repeats byte-identical");
    return c.result();
}

// ---------------------------------------------------------------------------
// Retrieval
// ---------------------------------------------------------------------------

struct Hit {
    std::string id;
    double sim;
    bool operator==(const Hit&) const = default;
};

std::vector<Hit> brute_force(const VectorIndex& index, const Embedding& probe)
{
    std::vector<Hit> all;
    for (const auto& e : index.entries()) {
        double dot = 0;
        double na = 0;
        double nb = 0;
        for (std::size_t i = 0; i < probe.values.size(); ++i) {
            dot += double(probe.values[i]) * e.embedding.values[i];
            na += double(probe.values[i]) * probe.values[i];
            nb += double(e.embedding.values[i]) * e.embedding.values[i];
        }
        const double sim = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
        if (sim >= kCutoff) {
            all.push_back({e.id.str(), sim});
        }
    }
    std::sort(all.begin(), all.end(),
              [](const Hit& a, const Hit& b) { return a.sim != b.sim ? a.sim > b.sim : a.id < b.id; });
    if (all.size() > kTopK) {
        all.resize(kTopK);
    }
    return all;
}

std::vector<Hit> hits_of(const std::vector<Candidate>& cands)
{
    std::vector<Hit> out;
    for (const auto& c : cands) {
        out.push_back({c.id.str(), c.similarity});
    }
    return out;
}

std::vector<std::string> ids_of(const std::vector<Candidate>& cands)
{
    std::vector<std::string> out;
    for (const auto& c : cands) {
        out.push_back(c.id.str());
    }
    return out;
}

Outcome retrieval_oracle()
{
    Checks c;
    Stopwatch clock;
    std::mt19937_64 rng(77);
    std::vector<std::string> vocab;
    for (int i = 0; i < 80; ++i) {
        vocab.push_back("tok" + std::to_string(i));
    }
    const auto sentence = [&](std::size_t n) {
        std::vector<std::string> w;
        for (std::size_t i = 0; i < n; ++i) {
            w.push_back(vocab[rng() % vocab.size()]);
        }
        return w;
    };
    const auto join = [](const std::vector<std::string>& w) {
        std::string s;
        for (const auto& x : w) {
            s += (s.empty() ? "" : " ") + x;
        }
        return s;
    };

    Corpus corpus;
    std::vector<std::vector<std::string>> words;
    for (int i = 0; i < 200; ++i) {
        words.push_back(sentence(6 + rng() % 8));
        corpus.emplace_back(TechniqueId::parse("T" + std::to_string(1000 + i)), join(words.back()));
    }
    HashEmbedder embedder;
    RetrievalConfig cfg;
    cfg.top_k = kTopK;
    cfg.cutoff = kCutoff;
    const auto index = build_index(corpus, embedder, cfg);

    std::vector<Embedding> probes;
    for (int i = 0; i < 500; ++i) {
        std::vector<std::string> w;
        if (i % 2 == 0) {
            // Perturbed copy of a corpus entry, so that hits exist.
            w = words[rng() % words.size()];
            const std::size_t edits = rng() % 4;
            for (std::size_t e = 0; e < edits; ++e) {
                w[rng() % w.size()] = vocab[rng() % vocab.size()];
            }
        } else {
            w = sentence(3 + rng() % 10);
        }
        probes.push_back(embedder.embed_one(join(w)));
    }

    std::size_t mismatches = 0;
    std::size_t with_hits = 0;
    std::size_t scale_breaks = 0;
    std::vector<std::vector<Candidate>> results;
    const float scales[] = {0.5f, 3.0f, 7.25f, 1024.0f};
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto got = query(index, probes[i], cfg);
        mismatches += hits_of(got) == brute_force(index, probes[i]) ? 0 : 1;
        with_hits += got.empty() ? 0 : 1;
        for (float s : scales) {
            Embedding scaled = probes[i];
            for (auto& v : scaled.values) {
                v *= s;
            }
            scale_breaks += ids_of(query(index, scaled, cfg)) == ids_of(got) ? 0 : 1;
        }
        results.push_back(got);
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " of 500 probes differ from the brute force");
    c.expect(with_hits >= 100, "only " + std::to_string(with_hits) + " probes had any hit");
    c.expect(scale_breaks == 0, std::to_string(scale_breaks) + " scaled probes changed ranking");

    TempDir dir;
    save_index(index, dir.path() / "index.json");
    const auto loaded = load_index(dir.path() / "index.json");
    std::size_t reload_breaks = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        reload_breaks += query(loaded, probes[i], cfg) == results[i] ? 0 : 1;
    }
    c.expect(loaded == index, "reloaded index differs");
    c.expect(reload_breaks == 0, std::to_string(reload_breaks) + " probes differ after reload");
    const double t = clock.seconds();
    c.expect(t < kRetrievalBudgetSeconds, "took " + fmt(t, 3) + " s");
    c.note("500/500 probes match brute force (" + std::to_string(with_hits) +
           " with hits), scaling and reload stable, " + fmt(t, 3) + " s");
    return c.result();
}

// ---------------------------------------------------------------------------
// RAG end to end
// ---------------------------------------------------------------------------

// Agent-2 reply the script gives for a flow; the expected ids are read from
// it independently of the parser under test.
std::set<std::string> scripted_selection(const json& rules, const std::string& flow_name)
{
    const std::string key = "Data Flow: " + flow_name + "\n";
    for (const auto& r : rules) {
        const auto& m = r.at("match");
        if (!m.is_array()) {
            continue;
        }
        const bool agent2 = std::find(m.begin(), m.end(), "from the table above") != m.end();
        const bool this_flow = std::find(m.begin(), m.end(), key) != m.end();
        if (agent2 && this_flow) {
            const std::string reply = r.at("response");
            std::set<std::string> out;
            const std::regex id_re("[\"'](T[0-9]{4}(\\.[0-9]{3})?)[\"']");
            for (auto i = std::sregex_iterator(reply.begin(), reply.end(), id_re); i != std::sregex_iterator(); ++i) {
                const auto parsed = TechniqueId::parse((*i)[1].str());
                if (sample_kb().is_valid(parsed) && sample_kb().is_valid(parsed.parent())) {
                    out.insert(parsed.parent().str());
                }
            }
            return out;
        }
    }
    return {};
}

Outcome rag_offline()
{
    Checks c;
    const auto script_path = data_path("scripts/purdue-rag.json");
    const auto rules_json = json::parse(text::read_file(script_path));
    const auto rules = load_script_rules(script_path);
    const auto g = load_dfd(data_path("scenarios/purdue.dfd"));
    const auto stride = generate_threats(g, default_rule_table());
    HashEmbedder embedder;
    RetrievalConfig cfg;
    const auto index = build_index(export_corpus(sample_kb()), embedder, cfg);
    StrategyConfig strategy;
    strategy.retrieval.top_k = kTopK;
    strategy.retrieval.cutoff = kCutoff;

    std::size_t dropped_seen = 0;
    std::size_t flagged_seen = 0;
    for (const std::string flow : {"f01", "f02", "f05"}) {
        const auto bi = make_basic_input(g, stride, flow);
        std::string first;
        IdentificationResult r;
        bool identical = true;
        for (int run = 0; run < 10; ++run) {
            Gateway gw(script_provider(rules));
            r = rag_identify(bi, sample_kb(), index, embedder, gw, strategy);
            IdentifyReport rep;
            rep.graph_id = g.graph_id;
            rep.results = {r};
            const auto doc = emit_report(rep, sample_kb(), ReportFormat::Json);
            if (run == 0) {
                first = doc;
            }
            identical = identical && doc == first;
        }
        c.expect(identical, flow + ": runs are not byte-identical");

        std::set<std::string> got;
        for (const auto& id : r.technique_ids) {
            got.insert(id.str());
        }
        c.expect(got == scripted_selection(rules_json, bi.flow.name), flow + ": technique set differs from script");

        // Candidate list: per attack at most top_k hits, all above the
        // cutoff, equal to a brute-force scan; union equals the candidates.
        std::set<std::string> uni;
        for (const auto& probe : r.retrieval) {
            c.expect(probe.hits.size() <= kTopK, flow + ": more than top_k hits");
            c.expect(hits_of(probe.hits) == brute_force(index, embedder.embed_one(probe.attack)),
                     flow + ": retrieval differs from brute force");
            for (const auto& h : probe.hits) {
                c.expect(h.similarity >= kCutoff, flow + ": hit below cutoff");
                uni.insert(h.id.str());
            }
        }
        std::set<std::string> cands;
        for (const auto& cand : r.candidates.value_or(std::vector<Candidate>{})) {
            cands.insert(cand.id.str());
        }
        c.expect(cands == uni, flow + ": candidates are not the union of per-attack hits");

        // Out-of-candidate ids are exactly the kept ids with no candidate
        // (or candidate sub-technique) behind them.
        std::set<std::string> expect_ooc;
        for (const auto& id : r.technique_ids) {
            const bool backed = std::any_of(cands.begin(), cands.end(), [&](const std::string& cid) {
                return TechniqueId::parse(cid).parent() == id || cid == id.str();
            });
            if (!backed) {
                expect_ooc.insert(id.str());
            }
        }
        std::set<std::string> ooc;
        for (const auto& id : r.out_of_candidate) {
            ooc.insert(id.str());
            c.expect(r.technique_ids.contains(id), flow + ": flagged id was not kept");
        }
        c.expect(ooc == expect_ooc, flow + ": out-of-candidate flags wrong");
        flagged_seen += ooc.size();
        dropped_seen += static_cast<std::size_t>(std::count_if(r.warnings.begin(), r.warnings.end(), [](const std::string& w) {
            return w.starts_with("dropped T9999");
        }));
    }
    c.expect(dropped_seen >= 1, "the invalid id T9999 was never dropped");
    c.expect(flagged_seen >= 1, "no out-of-candidate id was exercised");
    c.note("3 flows x 10 runs byte-identical, sets match script, " + std::to_string(flagged_seen) +
           " out-of-candidate ids flagged and kept, invalid id dropped");
    return c.result();
}

// ---------------------------------------------------------------------------
// ICL
// ---------------------------------------------------------------------------

Outcome icl_shape()
{
    Checks c;
    const auto examples = load_icl_examples(data_path("icl/examples.jsonl"));
    const auto g = load_dfd(data_path("scenarios/cvo03.dfd"));
    const auto bi = make_basic_input(g, generate_threats(g, default_rule_table()), "f_1a");
    std::string counts;
    for (std::size_t shots : {0u, 1u, 8u}) {
        const auto prompt = render_icl_prompt(bi, examples, shots, default_templates());
        std::size_t n = 0;
        for (auto p = prompt.find(kIclExampleHeading); p != std::string::npos;
             p = prompt.find(kIclExampleHeading, p + 1)) {
            ++n;
        }
        c.expect(n == shots, std::to_string(shots) + " shots gave " + std::to_string(n) + " example blocks");
        if (shots == 0) {
            c.expect(prompt.find("MITRE ATT&CK techniques: [") == std::string::npos,
                     "zero-shot prompt carries an example answer");
        }
        counts += (counts.empty() ? "" : ", ") + std::to_string(shots) + "->" + std::to_string(n);
    }
    c.note("example blocks " + counts);
    return c.result();
}

// ---------------------------------------------------------------------------
// Attack paths
// ---------------------------------------------------------------------------

using Seq = std::vector<std::string>;

void dfs_oracle(const std::map<std::string, std::set<std::string>>& adj, const std::string& t, std::size_t depth,
                Seq& path, std::vector<Seq>& out)
{
    if (path.back() == t) {
        out.push_back(path);
        return;
    }
    if (path.size() > depth) {
        return;
    }
    auto it = adj.find(path.back());
    if (it == adj.end()) {
        return;
    }
    for (const auto& n : it->second) {
        if (std::find(path.begin(), path.end(), n) != path.end()) {
            continue;
        }
        path.push_back(n);
        dfs_oracle(adj, t, depth, path, out);
        path.pop_back();
    }
}

Outcome path_oracle()
{
    Checks c;
    Stopwatch clock;
    const auto g = build_entity_graph(load_dfd(data_path("scenarios/purdue.dfd")), {});
    const auto paths = enumerate_paths(g, "Human User", "Business Servers", 6);
    std::vector<Seq> named;
    for (const auto& p : paths) {
        Seq s;
        for (const auto& id : p.node_sequence) {
            s.push_back(g.name(id));
        }
        named.push_back(s);
    }
    const std::vector<Seq> reference = {
        {"Human User", "VPN Server", "Business Servers"},
        {"Human User", "VPN Server", "Domain Controller1", "Business Servers"},
        {"Human User", "VPN Server", "Remote Access/Jump Server", "Historian1", "Business Servers"},
    };
    for (const auto& r : reference) {
        c.expect(std::find(named.begin(), named.end(), r) != named.end(), "missing reference path via " + r[2]);
    }
    const auto well_formed = [&](const EntityGraph& graph, const AttackPath& p) {
        std::set<std::string> seen(p.node_sequence.begin(), p.node_sequence.end());
        if (seen.size() != p.node_sequence.size()) {
            return false;
        }
        for (std::size_t i = 0; i + 1 < p.node_sequence.size(); ++i) {
            if (!graph.has_edge(p.node_sequence[i], p.node_sequence[i + 1])) {
                return false;
            }
        }
        return true;
    };
    for (const auto& p : paths) {
        c.expect(well_formed(g, p), "Purdue path not simple or not on the graph");
    }

    std::mt19937_64 rng(404);
    std::size_t mismatches = 0;
    std::size_t total = 0;
    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 2 + rng() % 11;
        EntityGraph rg;
        std::map<std::string, std::set<std::string>> adj;
        for (std::size_t i = 0; i < n; ++i) {
            rg.nodes["v" + std::to_string(i)] = "V" + std::to_string(i);
        }
        const std::size_t m = rng() % (3 * n);
        for (std::size_t i = 0; i < m; ++i) {
            const auto a = "v" + std::to_string(rng() % n);
            const auto b = "v" + std::to_string(rng() % n);
            if (a != b) {
                rg.edges.push_back({a, b, "f" + std::to_string(i), {}});
                adj[a].insert(b);
            }
        }
        const std::string s = "v0";
        const std::string t = "v" + std::to_string(1 + rng() % (n - 1));
        const auto got = enumerate_paths(rg, s, t, kDefaultMaxDepth);
        std::vector<Seq> expected;
        Seq start{s};
        dfs_oracle(adj, t, kDefaultMaxDepth, start, expected);
        std::sort(expected.begin(), expected.end());
        std::vector<Seq> seqs;
        for (const auto& p : got) {
            seqs.push_back(p.node_sequence);
            if (!well_formed(rg, p)) {
                ++mismatches;
            }
        }
        mismatches += seqs == expected ? 0 : 1;
        total += got.size();
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " of 200 random graphs differ from the DFS oracle");
    const double t = clock.seconds();
    c.expect(t < kPathsBudgetSeconds, "took " + fmt(t, 3) + " s");
    c.note(std::to_string(paths.size()) + " Purdue paths incl. 3 reference sequences, 200/200 random graphs match (" +
           std::to_string(total) + " paths), " + fmt(t, 3) + " s");
    return c.result();
}

// ---------------------------------------------------------------------------
// Knowledge base
// ---------------------------------------------------------------------------

Outcome kb_official()
{
    Checks c;
    const char* env = std::getenv("TMF_ENTERPRISE_BUNDLE");
    const fs::path bundle = env && *env ? fs::path(env) : data_path("attack/enterprise-attack.json");
    if (!fs::exists(bundle)) {
        c.expect(false, "official enterprise bundle not found at " + bundle.string() +
                            " (set TMF_ENTERPRISE_BUNDLE)");
        return c.result();
    }
    const auto kb = import_stix_bundle(bundle);
    const std::pair<const char*, const char*> cited[] = {
        {"T1552", "Unsecured Credentials"},
        {"T1059", "Command and Scripting Interpreter"},
        {"T1486", "Data Encrypted for Impact"},
    };
    for (const auto& [id, name] : cited) {
        const auto* rec = kb.find(TechniqueId::parse(id));
        c.expect(rec != nullptr && rec->name == name,
                 std::string(id) + " resolves to '" + (rec ? rec->name : "(missing)") + "'");
    }
    c.note(std::to_string(kb.techniques().size()) + " techniques, cited names resolve");
    return c.result();
}

// ---------------------------------------------------------------------------
// Offline CLI pipeline
// ---------------------------------------------------------------------------

std::string quote(const std::string& s)
{
    std::string out = "'";
    for (char ch : s) {
        out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
    }
    return out + "'";
}

int run_guarded(const std::string& args, const fs::path& log, const fs::path& out, const std::string& extra_env = "")
{
    const std::string cmd = "env " + extra_env + " LD_PRELOAD=" + quote(TMF_NETGUARD_PATH) +
                            " TMF_NETGUARD_LOG=" + quote(log.string()) + " " + quote(TMF_CLI_PATH) + " " + args +
                            " >>" + quote(out.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome offline_pipeline()
{
    Checks c;
    TempDir dir;
    const auto out = dir.path() / "out";
    const auto log = dir.path() / "net.log";
    const auto console = dir.path() / "console.txt";
    const std::string o = "--out " + quote(out.string()) + " ";
    const std::string dfd = quote(data_path("scenarios/purdue.dfd").string());
    const std::string kb = quote((out / "kb.json").string());
    const std::string script = "--scripted " + quote(data_path("scripts/purdue-rag.json").string()) + " ";

    const std::vector<std::pair<std::string, std::string>> stages = {
        {"kb-import", o + "kb-import --bundle " + quote(data_path("attack/sample-bundle.json").string())},
        {"index-build", o + "--offline index-build --kb " + kb},
        {"stride", o + "stride --input " + dfd},
        {"identify", o + script + "identify --input " + dfd + " --kb " + kb + " --index " +
                         quote((out / "index.json").string())},
        {"paths", o + script + "paths --input " + dfd + " --kb " + kb + " --identify " +
                      quote((out / "identify.json").string()) + " --start 'Human User' --target 'Business Servers'"},
        {"eval", o + "eval --predictions " + quote((out / "identify.json").string()) + " --truth " +
                     quote(data_path("truth/purdue.jsonl").string())},
    };
    for (const auto& [name, args] : stages) {
        const int code = run_guarded(args, log, console);
        c.expect(code == 0, name + " exited " + std::to_string(code) + ": " +
                                (fs::exists(console) ? text::read_file(console).substr(0, 300) : ""));
    }
    for (const char* f : {"kb.json", "index.json", "stride.json", "identify.json", "paths.json", "metrics.json"}) {
        c.expect(fs::exists(out / f), std::string("missing output ") + f);
    }
    const std::string net_log = fs::exists(log) ? text::read_file(log) : "";
    c.expect(net_log.empty(), "network activity logged: " + net_log.substr(0, 200));

    // Positive control: the guard does record an attempted connection. The
    // client resolves even numeric hosts, so either log line counts.
    const auto control_log = dir.path() / "control.log";
    const int control = run_guarded(o + "--embedder remote --base-url http://127.0.0.1:9 index-build --kb " + kb,
                                    control_log, console, "TMF_API_KEY=unused");
    const std::string control_text = fs::exists(control_log) ? text::read_file(control_log) : "";
    c.expect(control == 2 && control_text.find(" 127.0.0.1 ") != std::string::npos,
             "netguard control run did not record its connection (exit " + std::to_string(control) + ")");
    c.note("6 stages exit 0, 0 connections logged (control run logged its connection)");
    return c.result();
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"metrics oracle", metrics_oracle},
        {"STRIDE golden", stride_golden},
        {"retrieval oracle", retrieval_oracle},
        {"RAG offline end-to-end", rag_offline},
        {"ICL prompt shape", icl_shape},
        {"attack-path oracle", path_oracle},
        {"KB official bundle", kb_official},
        {"offline CLI pipeline", offline_pipeline},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failures;
}
