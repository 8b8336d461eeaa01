// tmf: command-line driver for the three-stage threat-modeling workflow.
//
//   tmf kb-import    --bundle enterprise-attack.json
//   tmf index-build  --kb out/kb.json
//   tmf stride       --input system.dfd
//   tmf identify     --input system.dfd --kb out/kb.json --strategy rag --index out/index.json
//   tmf paths        --input system.dfd --kb out/kb.json --identify out/identify.json --start ... --target ...
//   tmf eval         --predictions out/identify.json --truth truth.jsonl
//
// Exit status: 0 success, 1 invalid input, 2 provider or I/O failure.

#include "tmf/attack_kb.hpp"
#include "tmf/attack_path.hpp"
#include "tmf/dfd.hpp"
#include "tmf/error.hpp"
#include "tmf/evalreport.hpp"
#include "tmf/identify.hpp"
#include "tmf/llm.hpp"
#include "tmf/net.hpp"
#include "tmf/retrieval.hpp"
#include "tmf/stride.hpp"
#include "tmf/text.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
namespace text = tmf::text;

namespace {

// CLI11 reads configuration through this adapter: top-level keys set global
// options, objects named after a subcommand set that subcommand's options.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(input);
        } catch (const nlohmann::json::parse_error& e) {
            throw CLI::ConversionError(std::string("config file: ") + e.what());
        }
        if (!doc.is_object()) {
            throw CLI::ConversionError("config file: expected a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        collect(doc, {}, items);
        return items;
    }

private:
    static std::string scalar(const nlohmann::json& v)
    {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_boolean()) {
            return v.get<bool>() ? "true" : "false";
        }
        return v.dump();
    }

    static void collect(const nlohmann::json& obj, const std::vector<std::string>& parents,
                        std::vector<CLI::ConfigItem>& items)
    {
        for (const auto& [key, value] : obj.items()) {
            if (value.is_object()) {
                auto p = parents;
                p.push_back(key);
                collect(value, p, items);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& v : value) {
                    item.inputs.push_back(scalar(v));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            items.push_back(std::move(item));
        }
    }
};

struct Globals {
    std::string out_dir = "out";
    std::size_t jobs = 4;
    bool offline = false;
    std::string scripted;
    std::string model = "gpt-4o";
    std::string base_url;
    std::string key_file;
    std::string embedder = "hash";
    std::string embedding_model = "text-embedding-3-small";
    std::size_t dim = 256;
    int timeout_s = 60;
    std::string templates;
};

// Records what a command read and wrote so the run can be repeated.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)) {}

    void input(const fs::path& path)
    {
        inputs_.push_back({{"path", path.string()}, {"sha256", text::sha256_hex(text::read_file(path))}});
    }

    void write(const fs::path& path, const std::string& contents)
    {
        text::write_file(path, contents);
        outputs_.push_back({{"path", path.string()}, {"sha256", text::sha256_hex(contents)}});
    }

    ojson& config() { return config_; }

    void save(const fs::path& out_dir, const std::vector<std::string>& argv)
    {
        ojson doc;
        doc["schema_version"] = tmf::kReportSchemaVersion;
        doc["command"] = command_;
        doc["argv"] = argv;
        doc["config"] = config_;
        doc["inputs"] = inputs_;
        doc["outputs"] = outputs_;
        text::write_file(out_dir / ("manifest-" + command_ + ".json"), doc.dump(2) + "\n");
    }

private:
    std::string command_;
    ojson config_ = ojson::object();
    ojson inputs_ = ojson::array();
    ojson outputs_ = ojson::array();
};

fs::path require_file(const std::string& path, const std::string& what)
{
    if (path.empty()) {
        tmf::fail(tmf::ErrorCode::InvalidArgument, what + " is required");
    }
    if (!fs::is_regular_file(path)) {
        tmf::fail(tmf::ErrorCode::IoError, what + " '" + path + "' does not exist");
    }
    return path;
}

std::string api_key(const Globals& g)
{
    if (const char* env = std::getenv("TMF_API_KEY"); env && *env) {
        return env;
    }
    if (!g.key_file.empty()) {
        return std::string(text::trim(text::read_file(g.key_file)));
    }
    return {};
}

tmf::net::Endpoint endpoint(const Globals& g)
{
    tmf::net::Endpoint ep;
    ep.base_url = g.base_url;
    if (ep.base_url.empty()) {
        const char* env = std::getenv("TMF_BASE_URL");
        ep.base_url = env && *env ? env : "https://api.openai.com/v1";
    }
    ep.api_key = api_key(g);
    ep.timeout = std::chrono::seconds(g.timeout_s);
    return ep;
}

bool offline_mode(const Globals& g) { return g.offline || (!g.scripted.empty() && g.embedder == "hash"); }

std::unique_ptr<tmf::Embedder> make_embedder(const Globals& g, Manifest& m)
{
    m.config()["embedder"] = g.embedder;
    if (g.embedder == "hash") {
        m.config()["dim"] = g.dim;
        return std::make_unique<tmf::HashEmbedder>(g.dim);
    }
    if (g.embedder == "remote") {
        m.config()["embedding_model"] = g.embedding_model;
        return std::make_unique<tmf::RemoteEmbedder>(endpoint(g), g.embedding_model);
    }
    tmf::fail(tmf::ErrorCode::InvalidArgument, "unknown embedder '" + g.embedder + "' (expected hash or remote)");
}

std::shared_ptr<tmf::Provider> make_provider(const Globals& g, Manifest& m)
{
    m.config()["model"] = g.model;
    if (!g.scripted.empty()) {
        m.input(require_file(g.scripted, "scripted rules file"));
        m.config()["provider"] = "scripted";
        return tmf::script_provider(tmf::load_script_rules(g.scripted));
    }
    m.config()["provider"] = "remote";
    auto ep = endpoint(g);
    m.config()["base_url"] = ep.base_url;
    return std::make_shared<tmf::RemoteProvider>(ep, g.model);
}

tmf::PromptTemplates templates(const Globals& g, Manifest& m)
{
    if (g.templates.empty()) {
        return tmf::default_templates();
    }
    m.config()["templates"] = g.templates;
    for (const auto& entry : fs::directory_iterator(g.templates)) {
        if (entry.path().extension() == ".txt") {
            m.input(entry.path());
        }
    }
    return tmf::load_templates(g.templates);
}

void write_transcript(Manifest& m, const fs::path& out_dir, const std::string& command, const tmf::Gateway& gw)
{
    auto entries = gw.transcript().entries();
    // Concurrent flows finish in any order; sort for a stable artifact.
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
    m.write(out_dir / ("transcript-" + command + ".json"), tmf::transcript_to_json(entries));
}

tmf::StrideRuleTable rule_table(const std::string& rules, Manifest& m)
{
    if (rules.empty()) {
        return tmf::default_rule_table();
    }
    m.input(require_file(rules, "rule table"));
    m.config()["rules"] = rules;
    return tmf::parse_rule_table(text::read_file(rules));
}

tmf::DfdGraph architecture(const std::string& input, Manifest& m)
{
    m.input(require_file(input, "--input"));
    return tmf::load_architecture(input);
}

tmf::KnowledgeBase knowledge_base(const std::string& path, Manifest& m)
{
    m.input(require_file(path, "--kb"));
    return tmf::load_knowledge_base(path);
}

void write_pair(Manifest& m, const fs::path& out_dir, const std::string& stem, const std::string& json,
                const std::string& markdown)
{
    m.write(out_dir / (stem + ".json"), json);
    m.write(out_dir / (stem + ".md"), markdown);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct KbImportArgs {
    std::string bundle;
    std::string output;
};

void cmd_kb_import(const Globals& g, const KbImportArgs& a, Manifest& m)
{
    m.input(require_file(a.bundle, "--bundle"));
    const auto kb = tmf::import_stix_bundle(a.bundle);
    for (const auto& w : kb.warnings()) {
        std::cerr << "kb-import: warning: " << w << "\n";
    }
    const fs::path out = a.output.empty() ? fs::path(g.out_dir) / "kb.json" : fs::path(a.output);
    m.write(out, tmf::kb_to_snapshot_json(kb));
    std::cout << "imported " << kb.size() << " techniques (" << kb.matrix_name() << " " << kb.version() << ") -> "
              << out.string() << "\n";
}

struct IndexArgs {
    std::string kb;
    std::string output;
    std::size_t batch_size = 64;
};

void cmd_index_build(const Globals& g, const IndexArgs& a, Manifest& m)
{
    const auto kb = knowledge_base(a.kb, m);
    auto embedder = make_embedder(g, m);
    tmf::RetrievalConfig cfg;
    cfg.batch_size = a.batch_size;
    m.config()["batch_size"] = a.batch_size;
    tmf::BuildStats stats;
    const auto index = tmf::build_index(tmf::export_corpus(kb), *embedder, cfg, &stats);
    const fs::path out = a.output.empty() ? fs::path(g.out_dir) / "index.json" : fs::path(a.output);
    m.write(out, tmf::index_to_json(index));
    std::cout << "indexed " << stats.inserted << " techniques in " << stats.embedder_calls << " batches -> "
              << out.string() << "\n";
}

struct StrideArgs {
    std::string input;
    std::string rules;
};

void cmd_stride(const Globals& g, const StrideArgs& a, Manifest& m)
{
    const auto graph = architecture(a.input, m);
    const auto report = tmf::generate_threats(graph, rule_table(a.rules, m));
    write_pair(m, g.out_dir, "stride", tmf::emit_report(report, tmf::ReportFormat::Json),
               tmf::emit_report(report, tmf::ReportFormat::Markdown));
    std::cout << "stride: " << report.total() << " threats over " << report.interactions.size() << " interactions\n";
}

struct IdentifyArgs {
    std::string input;
    std::string rules;
    std::string kb;
    std::string strategy = "rag";
    std::string index;
    std::string examples;
    std::string predictions;
    std::string predictions_url;
    std::size_t shots = 8;
    double cutoff = 0.6;
    std::size_t top_k = 3;
    double threshold = 0.5;
    bool keep_subtechniques = false;
    std::vector<std::string> flows;
};

void cmd_identify(const Globals& g, const IdentifyArgs& a, Manifest& m)
{
    const auto graph = architecture(a.input, m);
    const auto stride = tmf::generate_threats(graph, rule_table(a.rules, m));
    const auto kb = knowledge_base(a.kb, m);

    tmf::StrategyConfig cfg;
    cfg.strategy = tmf::parse_strategy(a.strategy);
    cfg.shots = a.shots;
    cfg.retrieval.cutoff = a.cutoff;
    cfg.retrieval.top_k = a.top_k;
    cfg.threshold = a.threshold;
    cfg.keep_subtechniques = a.keep_subtechniques;
    cfg.validate();
    m.config()["strategy"] = a.strategy;
    m.config()["keep_subtechniques"] = a.keep_subtechniques;
    m.config()["jobs"] = g.jobs;

    std::vector<std::string> flow_ids;
    if (a.flows.empty()) {
        for (const auto& [id, f] : graph.flows) {
            flow_ids.push_back(id);
        }
    } else {
        for (const auto& id : a.flows) {
            graph.flow(id); // DanglingReference for unknown ids
            flow_ids.push_back(id);
        }
        std::sort(flow_ids.begin(), flow_ids.end());
        flow_ids.erase(std::unique(flow_ids.begin(), flow_ids.end()), flow_ids.end());
    }
    std::vector<tmf::BasicInput> inputs;
    for (const auto& id : flow_ids) {
        inputs.push_back(tmf::make_basic_input(graph, stride, id));
    }

    std::vector<tmf::IdentificationResult> results;
    std::optional<tmf::Gateway> gateway;
    if (cfg.strategy == tmf::Strategy::Classifier) {
        m.config()["threshold"] = a.threshold;
        std::unique_ptr<tmf::PredictionSource> source;
        if (!a.predictions.empty()) {
            m.input(require_file(a.predictions, "--predictions"));
            source = std::make_unique<tmf::FilePredictionSource>(a.predictions);
        } else if (!a.predictions_url.empty()) {
            m.config()["predictions_url"] = a.predictions_url;
            tmf::net::Endpoint ep{a.predictions_url, {}, std::chrono::seconds(g.timeout_s)};
            source = std::make_unique<tmf::HttpPredictionSource>(ep, "");
        } else {
            tmf::fail(tmf::ErrorCode::InvalidArgument, "classifier strategy needs --predictions or --predictions-url");
        }
        for (const auto& bi : inputs) {
            results.push_back(tmf::classifier_identify(bi, *source, kb, cfg));
        }
    } else {
        const auto prompts = templates(g, m);
        tmf::GatewayConfig gcfg;
        gcfg.max_in_flight = g.jobs;
        gcfg.default_model = g.model;
        gateway.emplace(make_provider(g, m), gcfg);

        if (cfg.strategy == tmf::Strategy::Rag) {
            m.config()["top_k"] = a.top_k;
            m.config()["cutoff"] = a.cutoff;
            m.input(require_file(a.index, "--index"));
            const auto index = tmf::load_index(a.index);
            auto embedder = make_embedder(g, m);
            tmf::ensure_compatible(index, *embedder);
            std::mutex embed_mu;
            struct Locked final : tmf::Embedder {
                tmf::Embedder& inner;
                std::mutex& mu;
                Locked(tmf::Embedder& e, std::mutex& m) : inner(e), mu(m) {}
                std::vector<tmf::Embedding> embed(std::span<const std::string> texts) override
                {
                    std::lock_guard lock(mu);
                    return inner.embed(texts);
                }
                std::string tag() const override { return inner.tag(); }
            } locked(*embedder, embed_mu);
            results = tmf::run_per_flow(inputs.size(), g.jobs, [&](std::size_t i) {
                return tmf::rag_identify(inputs[i], kb, index, locked, *gateway, cfg, prompts);
            });
        } else {
            m.config()["shots"] = a.shots;
            m.input(require_file(a.examples, "--examples"));
            const auto examples = tmf::load_icl_examples(a.examples);
            tmf::validate_examples(examples, kb);
            if (a.shots > examples.size()) {
                tmf::fail(tmf::ErrorCode::InvalidArgument, "--shots=" + std::to_string(a.shots) + " but only " +
                                                               std::to_string(examples.size()) +
                                                               " examples are on file");
            }
            results = tmf::run_per_flow(inputs.size(), g.jobs, [&](std::size_t i) {
                return tmf::icl_identify(inputs[i], examples, kb, *gateway, cfg, prompts);
            });
        }
    }

    tmf::IdentifyReport report;
    report.graph_id = graph.graph_id;
    report.strategy = cfg.strategy;
    for (const auto& [id, f] : graph.flows) {
        report.flow_names[id] = f.name;
    }
    report.results = std::move(results);
    write_pair(m, g.out_dir, "identify", tmf::emit_report(report, kb, tmf::ReportFormat::Json),
               tmf::emit_report(report, kb, tmf::ReportFormat::Markdown));
    if (gateway) {
        write_transcript(m, g.out_dir, "identify", *gateway);
    }
    std::size_t total = 0;
    for (const auto& r : report.results) {
        total += r.technique_ids.size();
    }
    std::cout << "identify: " << total << " technique assignments over " << report.results.size() << " flows\n";
}

struct PathsArgs {
    std::string input;
    std::string kb;
    std::string identify;
    std::string start;
    std::string target;
    std::size_t max_depth = tmf::kDefaultMaxDepth;
    std::string mode = "both";
};

void cmd_paths(const Globals& g, const PathsArgs& a, Manifest& m)
{
    if (a.mode != "enumerate" && a.mode != "llm" && a.mode != "both") {
        tmf::fail(tmf::ErrorCode::InvalidArgument, "--mode must be enumerate, llm or both");
    }
    const auto graph = architecture(a.input, m);
    const auto kb = knowledge_base(a.kb, m);
    m.config()["mode"] = a.mode;
    m.config()["max_depth"] = a.max_depth;

    tmf::PathsReport report;
    std::vector<tmf::IdentificationResult> results;
    if (!a.identify.empty()) {
        m.input(require_file(a.identify, "--identify"));
        for (const auto& [flow, ids] : tmf::parse_identification_report(text::read_file(a.identify))) {
            tmf::IdentificationResult r;
            r.flow_id = flow;
            r.technique_ids = tmf::validate_against_kb(ids, kb, true, report.warnings);
            results.push_back(std::move(r));
        }
    }
    const auto eg = tmf::build_entity_graph(graph, results);
    report.graph_id = graph.graph_id;
    report.start = eg.resolve(a.start);
    report.target = eg.resolve(a.target);
    report.max_depth = a.max_depth;
    report.names = eg.nodes;

    const auto enumerated = tmf::enumerate_paths(eg, report.start, report.target, a.max_depth);
    if (a.mode != "llm") {
        report.enumerated = enumerated;
    }
    std::optional<tmf::Gateway> gateway;
    if (a.mode != "enumerate") {
        const auto prompts = templates(g, m);
        tmf::GatewayConfig gcfg;
        gcfg.max_in_flight = g.jobs;
        gcfg.default_model = g.model;
        gateway.emplace(make_provider(g, m), gcfg);
        const std::string prompt = tmf::build_asset_prompt(eg, report.start, report.target, prompts);
        auto llm = tmf::llm_attack_paths(prompt, eg, *gateway, kb, prompts);
        report.cross = tmf::cross_check(llm.paths, enumerated, eg);
        report.llm = std::move(llm.paths);
        report.warnings.insert(report.warnings.end(), llm.warnings.begin(), llm.warnings.end());
    }
    write_pair(m, g.out_dir, "paths", tmf::emit_report(report, tmf::ReportFormat::Json),
               tmf::emit_report(report, tmf::ReportFormat::Markdown));
    if (gateway) {
        write_transcript(m, g.out_dir, "paths", *gateway);
    }
    std::cout << "paths: " << enumerated.size() << " enumerated";
    if (report.llm) {
        std::cout << ", " << report.llm->size() << " proposed by the model";
    }
    std::cout << "\n";
}

struct EvalArgs {
    std::string predictions;
    std::string truth;
    std::string label;
    bool keep_subtechniques = false;
};

void cmd_eval(const Globals& g, const EvalArgs& a, Manifest& m)
{
    m.input(require_file(a.predictions, "--predictions"));
    m.input(require_file(a.truth, "--truth"));
    m.config()["keep_subtechniques"] = a.keep_subtechniques;
    const auto predicted = tmf::parse_identification_report(text::read_file(a.predictions));
    const auto truth = tmf::load_ground_truth(a.truth);
    const auto joined = tmf::join_predictions(predicted, truth, a.keep_subtechniques);
    tmf::MetricsPayload payload;
    payload.label = a.label.empty() ? fs::path(a.predictions).filename().string() : a.label;
    payload.metrics = tmf::multilabel_metrics(joined.instances);
    payload.warnings = joined.warnings;
    write_pair(m, g.out_dir, "metrics", tmf::emit_report(payload, tmf::ReportFormat::Json),
               tmf::emit_report(payload, tmf::ReportFormat::Markdown));
    std::cout << "eval: precision " << payload.metrics.precision << " recall " << payload.metrics.recall << " f1 "
              << payload.metrics.f1 << " over " << payload.metrics.n_instances << " flows\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"LLM-supported threat modeling: STRIDE threats, ATT&CK technique identification, attack paths"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");

    Globals g;
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Concurrent flows / in-flight model requests")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_flag("--offline", g.offline, "Refuse every network request");
    app.add_option("--scripted", g.scripted, "Scripted provider rules (JSON); replaces the remote model");
    app.add_option("--model", g.model, "Chat model name")->capture_default_str();
    app.add_option("--base-url", g.base_url, "Endpoint base URL (default: $TMF_BASE_URL)");
    app.add_option("--key-file", g.key_file, "File holding the API key (when $TMF_API_KEY is unset)");
    app.add_option("--embedder", g.embedder, "hash or remote")->capture_default_str();
    app.add_option("--embedding-model", g.embedding_model, "Remote embedding model")->capture_default_str();
    app.add_option("--dim", g.dim, "Hash embedder dimension")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--timeout", g.timeout_s, "Request timeout in seconds")->capture_default_str();
    app.add_option("--templates", g.templates, "Directory of prompt template overrides");

    KbImportArgs kb_args;
    auto* kb_cmd = app.add_subcommand("kb-import", "Import an ATT&CK STIX bundle into a snapshot");
    kb_cmd->add_option("--bundle", kb_args.bundle, "STIX 2.1 bundle")->required();
    kb_cmd->add_option("--output", kb_args.output, "Snapshot path (default: <out>/kb.json)");

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index-build", "Embed the technique corpus into a vector index");
    index_cmd->add_option("--kb", index_args.kb, "KB snapshot or bundle")->required();
    index_cmd->add_option("--output", index_args.output, "Index path (default: <out>/index.json)");
    index_cmd->add_option("--batch-size", index_args.batch_size, "Texts per embedding request")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    StrideArgs stride_args;
    auto* stride_cmd = app.add_subcommand("stride", "Generate STRIDE threats for every interaction");
    stride_cmd->add_option("--input", stride_args.input, "DFD file or service package (.json)")->required();
    stride_cmd->add_option("--rules", stride_args.rules, "Rule table JSON (default: built-in table)");

    IdentifyArgs id_args;
    auto* id_cmd = app.add_subcommand("identify", "Map each data flow to ATT&CK techniques");
    id_cmd->add_option("--input", id_args.input, "DFD file or service package (.json)")->required();
    id_cmd->add_option("--rules", id_args.rules, "STRIDE rule table JSON");
    id_cmd->add_option("--kb", id_args.kb, "KB snapshot or bundle")->required();
    id_cmd->add_option("--strategy", id_args.strategy, "rag, icl or classifier")->capture_default_str();
    id_cmd->add_option("--index", id_args.index, "Vector index (rag)");
    id_cmd->add_option("--examples", id_args.examples, "ICL examples JSON-lines (icl)");
    id_cmd->add_option("--shots", id_args.shots, "Examples placed in the prompt (icl)")->capture_default_str();
    id_cmd->add_option("--cutoff", id_args.cutoff, "Similarity cutoff (rag)")->capture_default_str();
    id_cmd->add_option("--top-k", id_args.top_k, "Candidates per general attack (rag)")->capture_default_str();
    id_cmd->add_option("--threshold", id_args.threshold, "Score threshold (classifier)")->capture_default_str();
    id_cmd->add_option("--predictions", id_args.predictions, "Predictions JSON-lines (classifier)");
    id_cmd->add_option("--predictions-url", id_args.predictions_url, "Prediction endpoint URL (classifier)");
    id_cmd->add_flag("--keep-subtechniques", id_args.keep_subtechniques, "Do not fold sub-techniques into parents");
    id_cmd->add_option("--flows", id_args.flows, "Restrict to these flow ids")->delimiter(',');

    PathsArgs path_args;
    auto* paths_cmd = app.add_subcommand("paths", "Attack paths toward a target asset");
    paths_cmd->add_option("--input", path_args.input, "DFD file or service package (.json)")->required();
    paths_cmd->add_option("--kb", path_args.kb, "KB snapshot or bundle")->required();
    paths_cmd->add_option("--identify", path_args.identify, "Identification report JSON annotating the flows");
    paths_cmd->add_option("--start", path_args.start, "Starting entity (id or name)")->required();
    paths_cmd->add_option("--target", path_args.target, "Target asset (id or name)")->required();
    paths_cmd->add_option("--max-depth", path_args.max_depth, "Maximum hops per path")->capture_default_str();
    paths_cmd->add_option("--mode", path_args.mode, "enumerate, llm or both")->capture_default_str();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score an identification report against ground truth");
    eval_cmd->add_option("--predictions", eval_args.predictions, "Identification report JSON")->required();
    eval_cmd->add_option("--truth", eval_args.truth, "Ground truth JSON-lines")->required();
    eval_cmd->add_option("--label", eval_args.label, "Name shown in the report");
    eval_cmd->add_flag("--keep-subtechniques", eval_args.keep_subtechniques, "Compare sub-techniques as given");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::string command;
    for (auto* sub : {kb_cmd, index_cmd, stride_cmd, id_cmd, paths_cmd, eval_cmd}) {
        if (sub->parsed()) {
            command = sub->get_name();
        }
    }

    try {
        if (offline_mode(g)) {
            tmf::net::set_offline(true);
        }
        fs::create_directories(g.out_dir);
        Manifest manifest(command);
        manifest.config()["offline"] = offline_mode(g);
        if (command == "kb-import") {
            cmd_kb_import(g, kb_args, manifest);
        } else if (command == "index-build") {
            cmd_index_build(g, index_args, manifest);
        } else if (command == "stride") {
            cmd_stride(g, stride_args, manifest);
        } else if (command == "identify") {
            cmd_identify(g, id_args, manifest);
        } else if (command == "paths") {
            cmd_paths(g, path_args, manifest);
        } else {
            cmd_eval(g, eval_args, manifest);
        }
        manifest.save(g.out_dir, std::vector<std::string>(argv, argv + argc));
        return 0;
    } catch (const tmf::Error& e) {
        std::cerr << "tmf " << command << ": " << e.what() << "\n";
        return tmf::is_environmental(e.code()) ? 2 : 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "tmf " << command << ": IoError: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "tmf " << command << ": " << e.what() << "\n";
        return 2;
    }
}
