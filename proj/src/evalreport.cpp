#include "tmf/evalreport.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace tmf {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

EvalInstance make_instance(std::string flow_id, const std::vector<TechniqueId>& predicted,
                           const std::vector<TechniqueId>& truth, bool keep_subtechniques)
{
    EvalInstance inst;
    inst.flow_id = std::move(flow_id);
    for (const auto& id : predicted) {
        inst.predicted.insert(keep_subtechniques ? id : id.parent());
    }
    for (const auto& id : truth) {
        inst.truth.insert(keep_subtechniques ? id : id.parent());
    }
    return inst;
}

double f1_score(double precision, double recall)
{
    const double sum = precision + recall;
    return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

namespace {

double ordered_mean(std::vector<double> terms)
{
    std::sort(terms.begin(), terms.end());
    return std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
}

} // namespace

MetricsReport multilabel_metrics(const std::vector<EvalInstance>& instances)
{
    if (instances.empty()) {
        fail(ErrorCode::EmptyEvaluation, "no instances to evaluate");
    }
    MetricsReport report;
    report.n_instances = instances.size();
    std::vector<double> p_terms;
    std::vector<double> r_terms;
    for (const auto& inst : instances) {
        InstanceBreakdown b;
        b.flow_id = inst.flow_id;
        b.predicted = inst.predicted.size();
        b.truth = inst.truth.size();
        std::vector<TechniqueId> overlap;
        std::set_intersection(inst.predicted.begin(), inst.predicted.end(), inst.truth.begin(), inst.truth.end(),
                              std::back_inserter(overlap));
        b.overlap = overlap.size();
        if (b.predicted == 0) {
            b.empty_predicted = true;
            b.precision_term = b.truth == 0 ? 1.0 : 0.0;
        } else {
            b.precision_term = static_cast<double>(b.overlap) / static_cast<double>(b.predicted);
        }
        if (b.truth == 0) {
            b.empty_truth = true;
            b.recall_term = b.predicted == 0 ? 1.0 : 0.0;
        } else {
            b.recall_term = static_cast<double>(b.overlap) / static_cast<double>(b.truth);
        }
        p_terms.push_back(b.precision_term);
        r_terms.push_back(b.recall_term);
        report.instances.push_back(std::move(b));
    }
    report.precision = ordered_mean(std::move(p_terms));
    report.recall = ordered_mean(std::move(r_terms));
    report.f1 = f1_score(report.precision, report.recall);
    return report;
}

BinaryMetrics binary_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn)
{
    BinaryMetrics m;
    if (tp + fp == 0 || tp + fn == 0) {
        m.zero_denominator = true;
    }
    m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision + m.recall == 0.0) {
        m.zero_denominator = true;
    }
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

// ---------------------------------------------------------------------------
// Label files
// ---------------------------------------------------------------------------

LabelMap parse_ground_truth(std::string_view jsonl)
{
    LabelMap out;
    const auto lines = text::split_lines(jsonl);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) {
            continue;
        }
        const std::string where = "ground truth line " + std::to_string(n + 1);
        std::string flow_id;
        std::vector<TechniqueId> ids;
        try {
            const json row = json::parse(lines[n]);
            flow_id = row.at("flow_id").get<std::string>();
            for (const auto& id : row.at("technique_ids")) {
                ids.push_back(TechniqueId::parse(id.get<std::string>()));
            }
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaError, where + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorCode::SchemaError, where + ": " + e.what());
        }
        if (out.contains(flow_id)) {
            fail(ErrorCode::DuplicateId, where + ": flow " + flow_id + " appears twice");
        }
        out[flow_id] = std::move(ids);
    }
    return out;
}

LabelMap load_ground_truth(const std::filesystem::path& path)
{
    return parse_ground_truth(text::read_file(path));
}

LabelMap parse_identification_report(std::string_view json_text)
{
    LabelMap out;
    try {
        const json doc = json::parse(json_text);
        if (doc.value("kind", std::string()) != "identify") {
            fail(ErrorCode::SchemaError, "predictions report: not an identification report");
        }
        if (doc.at("schema_version").get<int>() != kReportSchemaVersion) {
            fail(ErrorCode::FormatVersionMismatch, "predictions report: unsupported schema_version");
        }
        for (const auto& r : doc.at("results")) {
            std::vector<TechniqueId> ids;
            for (const auto& id : r.at("technique_ids")) {
                ids.push_back(TechniqueId::parse(id.get<std::string>()));
            }
            out[r.at("flow_id").get<std::string>()] = std::move(ids);
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("predictions report: ") + e.what());
    }
    return out;
}

Joined join_predictions(const LabelMap& predicted, const LabelMap& truth, bool keep_subtechniques)
{
    Joined out;
    for (const auto& [flow, ids] : predicted) {
        auto it = truth.find(flow);
        if (it == truth.end()) {
            out.warnings.push_back("flow " + flow + " has predictions but no ground truth");
            continue;
        }
        out.instances.push_back(make_instance(flow, ids, it->second, keep_subtechniques));
    }
    for (const auto& [flow, ids] : truth) {
        if (!predicted.contains(flow)) {
            out.warnings.push_back("flow " + flow + " has ground truth but no predictions");
        }
    }
    if (out.instances.empty()) {
        fail(ErrorCode::EmptyEvaluation, "no flow id is shared by the predictions and the ground truth");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace {

std::string fixed4(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

ojson header(std::string_view kind)
{
    ojson doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["kind"] = kind;
    return doc;
}

ojson ids_json(const TechniqueSet& ids)
{
    ojson out = ojson::array();
    for (const auto& id : ids) {
        out.push_back(id.str());
    }
    return out;
}

std::string md_cell(std::string_view s)
{
    std::string out = text::replace_all(std::string(s), "\r", "");
    out = text::replace_all(std::move(out), "\n", "<br>");
    return text::replace_all(std::move(out), "|", "\\|");
}

std::string ids_text(const TechniqueSet& ids)
{
    std::string out;
    for (const auto& id : ids) {
        out += (out.empty() ? "" : ", ") + id.str();
    }
    return out.empty() ? "(none)" : out;
}

std::string dump(const ojson& doc) { return doc.dump(2) + "\n"; }

} // namespace

std::string emit_report(const StrideReport& report, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        ojson doc = header("stride");
        doc["graph_id"] = report.graph_id;
        ojson summary;
        for (auto s : kAllThreatStates) {
            auto it = report.summary.find(s);
            summary[std::string(to_string(s))] = it == report.summary.end() ? 0 : it->second;
        }
        summary["Total"] = report.total();
        doc["summary"] = summary;
        ojson interactions = ojson::array();
        for (const auto& it : report.interactions) {
            ojson threats = ojson::array();
            for (const auto& t : it.threats) {
                threats.push_back({{"id", t.id},
                                   {"title", t.title},
                                   {"category", to_string(t.category)},
                                   {"description", t.description},
                                   {"subject_role", to_string(t.subject_role)},
                                   {"subject_element", t.subject_element},
                                   {"priority", to_string(t.priority)},
                                   {"state", to_string(t.state)}});
            }
            interactions.push_back({{"flow_id", it.flow_id},
                                    {"flow_name", it.flow_name},
                                    {"source", it.source_name},
                                    {"target", it.target_name},
                                    {"crosses_boundary", it.crosses_boundary},
                                    {"threats", threats}});
        }
        doc["interactions"] = interactions;
        return dump(doc);
    }

    std::ostringstream out;
    out << "# STRIDE Threat Report: " << report.graph_id << "\n\n";
    out << "## Threat Summary\n\n";
    out << "| State | Count |\n|-------|-------|\n";
    for (auto s : kAllThreatStates) {
        auto it = report.summary.find(s);
        out << "| " << to_string(s) << " | " << (it == report.summary.end() ? 0 : it->second) << " |\n";
    }
    out << "| Total | " << report.total() << " |\n";
    for (const auto& it : report.interactions) {
        out << "\n## Interaction: " << it.flow_name << "\n\n";
        out << "Flow `" << it.flow_id << "`: " << it.source_name << " \xE2\x86\x92 " << it.target_name;
        if (it.crosses_boundary) {
            out << " (crosses a trust boundary)";
        }
        out << "\n\n";
        for (std::size_t i = 0; i < it.threats.size(); ++i) {
            const auto& t = it.threats[i];
            out << (i + 1) << ". " << t.title << " [State: " << to_string(t.state)
                << "] [Priority: " << to_string(t.priority) << "]\n\n";
            out << "   Category: " << display_name(t.category) << "\n\n";
            out << "   Description: " << t.description << "\n\n";
        }
        if (it.threats.empty()) {
            out << "No threats.\n";
        }
    }
    return out.str();
}

std::string emit_report(const IdentifyReport& report, const KnowledgeBase& kb, ReportFormat format)
{
    auto flow_name = [&](const std::string& id) {
        auto it = report.flow_names.find(id);
        return it == report.flow_names.end() ? id : it->second;
    };

    if (format == ReportFormat::Json) {
        ojson doc = header("identify");
        doc["graph_id"] = report.graph_id;
        doc["strategy"] = to_string(report.strategy);
        doc["kb"] = {{"matrix", kb.matrix_name()}, {"version", kb.version()}};
        ojson results = ojson::array();
        for (const auto& r : report.results) {
            ojson item;
            item["flow_id"] = r.flow_id;
            item["flow_name"] = flow_name(r.flow_id);
            item["technique_ids"] = ids_json(r.technique_ids);
            ojson techniques = ojson::array();
            for (const auto& id : r.technique_ids) {
                const auto* rec = kb.find(id);
                const auto cm = rec ? countermeasures(kb, id) : Countermeasures{};
                ojson mitigations = ojson::array();
                for (const auto& m : cm.mitigations) {
                    mitigations.push_back({{"id", m.id}, {"name", m.name}, {"text", m.text}});
                }
                techniques.push_back({{"id", id.str()},
                                      {"name", rec ? rec->name : ""},
                                      {"tactics", rec ? rec->tactics : std::vector<std::string>{}},
                                      {"detections", cm.detections},
                                      {"mitigations", mitigations}});
            }
            item["techniques"] = techniques;
            if (r.candidates) {
                ojson cands = ojson::array();
                for (const auto& c : *r.candidates) {
                    cands.push_back({{"id", c.id.str()}, {"similarity", c.similarity}});
                }
                item["candidates"] = cands;
                ojson retrieval = ojson::array();
                for (const auto& hit : r.retrieval) {
                    ojson hits = ojson::array();
                    for (const auto& c : hit.hits) {
                        hits.push_back({{"id", c.id.str()}, {"similarity", c.similarity}});
                    }
                    retrieval.push_back({{"attack", hit.attack}, {"hits", hits}});
                }
                item["retrieval"] = retrieval;
            } else {
                item["candidates"] = nullptr;
            }
            ojson ooc = ojson::array();
            for (const auto& id : r.out_of_candidate) {
                ooc.push_back(id.str());
            }
            item["out_of_candidate"] = ooc;
            item["empty_flagged"] = r.empty_flagged;
            item["warnings"] = r.warnings;
            ojson transcripts = ojson::array();
            for (const auto& e : r.transcripts) {
                transcripts.push_back({{"prompt", e.prompt}, {"response", e.response}});
            }
            item["transcripts"] = transcripts;
            results.push_back(std::move(item));
        }
        doc["results"] = results;
        return dump(doc);
    }

    std::ostringstream out;
    out << "# ATT&CK Technique Identification: " << report.graph_id << "\n\n";
    out << "Strategy: " << to_string(report.strategy) << "  \n";
    out << "Knowledge base: " << kb.matrix_name() << " " << kb.version() << "\n";
    for (const auto& r : report.results) {
        out << "\n## Data Flow: " << flow_name(r.flow_id) << " (`" << r.flow_id << "`)\n\n";
        if (r.technique_ids.empty()) {
            out << "No techniques identified.\n";
        }
        for (const auto& id : r.technique_ids) {
            const auto* rec = kb.find(id);
            out << "### " << id.str() << (rec ? " " + rec->name : std::string()) << "\n\n";
            if (rec && !rec->tactics.empty()) {
                out << "Tactics: ";
                for (std::size_t i = 0; i < rec->tactics.size(); ++i) {
                    out << (i ? ", " : "") << rec->tactics[i];
                }
                out << "\n\n";
            }
            const auto cm = rec ? countermeasures(kb, id) : Countermeasures{};
            out << "Detection:\n";
            if (cm.detections.empty()) {
                out << "- (none recorded)\n";
            }
            for (const auto& d : cm.detections) {
                out << "- " << md_cell(d) << "\n";
            }
            out << "\nMitigations:\n";
            if (cm.mitigations.empty()) {
                out << "- (none recorded)\n";
            }
            for (const auto& m : cm.mitigations) {
                out << "- " << m.id << " " << m.name;
                if (!m.text.empty()) {
                    out << ": " << md_cell(m.text);
                }
                out << "\n";
            }
            out << "\n";
        }
        if (r.candidates) {
            out << "Retrieval candidates:\n\n| ID | Similarity |\n|----|------------|\n";
            for (const auto& c : *r.candidates) {
                out << "| " << c.id.str() << " | " << fixed4(c.similarity) << " |\n";
            }
            out << "\n";
        }
        if (!r.out_of_candidate.empty()) {
            out << "Named outside the candidate table:";
            for (const auto& id : r.out_of_candidate) {
                out << " " << id.str();
            }
            out << "\n\n";
        }
        if (!r.warnings.empty()) {
            out << "Warnings:\n";
            for (const auto& w : r.warnings) {
                out << "- " << w << "\n";
            }
        }
    }
    return out.str();
}

namespace {

std::string node_name(const PathsReport& r, const std::string& id)
{
    auto it = r.names.find(id);
    return it == r.names.end() ? id : it->second;
}

std::string path_text(const PathsReport& r, const AttackPath& p)
{
    std::string out;
    for (const auto& n : p.node_sequence) {
        out += (out.empty() ? "" : " \xE2\x86\x92 ") + node_name(r, n);
    }
    return out;
}

ojson path_json(const PathsReport& r, const AttackPath& p)
{
    ojson steps = ojson::array();
    for (const auto& s : p.steps) {
        ojson step;
        if (!s.from.empty()) {
            step["from"] = s.from;
            step["to"] = s.to;
        }
        step["technique_ids"] = ids_json(s.technique_ids);
        if (!s.narrative.empty()) {
            step["narrative"] = s.narrative;
        }
        steps.push_back(std::move(step));
    }
    return {{"source", to_string(p.source)},
            {"node_sequence", p.node_sequence},
            {"path", path_text(r, p)},
            {"steps", steps},
            {"unmatched_nodes", p.unmatched_nodes}};
}

void path_table(std::ostringstream& out, const PathsReport& r, const std::vector<AttackPath>& paths)
{
    out << "| # | Predicted Attack Path | Execution Steps using ATT&CK Techniques |\n";
    out << "|---|-----------------------|-----------------------------------------|\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        std::string steps;
        for (std::size_t k = 0; k < p.steps.size(); ++k) {
            const auto& s = p.steps[k];
            std::string line = std::to_string(k + 1) + ". ";
            if (!s.narrative.empty()) {
                line += s.narrative;
            } else {
                line += node_name(r, s.from) + " \xE2\x86\x92 " + node_name(r, s.to) + ": " +
                        ids_text(s.technique_ids);
            }
            steps += (k ? "<br>" : "") + md_cell(line);
        }
        out << "| " << (i + 1) << " | " << md_cell(path_text(r, p)) << " | " << steps << " |\n";
    }
    if (paths.empty()) {
        out << "| - | (no paths) | |\n";
    }
}

} // namespace

std::string emit_report(const PathsReport& report, ReportFormat format)
{
    if (format == ReportFormat::Json) {
        ojson doc = header("paths");
        doc["graph_id"] = report.graph_id;
        doc["start"] = report.start;
        doc["target"] = report.target;
        doc["max_depth"] = report.max_depth;
        auto list = [&](const std::optional<std::vector<AttackPath>>& paths) {
            if (!paths) {
                return ojson(nullptr);
            }
            ojson arr = ojson::array();
            for (const auto& p : *paths) {
                arr.push_back(path_json(report, p));
            }
            return arr;
        };
        doc["enumerated"] = list(report.enumerated);
        doc["llm"] = list(report.llm);
        if (report.cross) {
            ojson entries = ojson::array();
            for (const auto& e : report.cross->entries) {
                ojson hops = ojson::array();
                for (const auto& [a, b] : e.off_graph_hops) {
                    hops.push_back({a, b});
                }
                entries.push_back({{"node_sequence", e.node_sequence},
                                   {"verdict", to_string(e.verdict)},
                                   {"off_graph_hops", hops},
                                   {"unmatched_nodes", e.unmatched_nodes}});
            }
            ojson summary;
            for (const auto& [v, n] : report.cross->summary) {
                summary[std::string(to_string(v))] = n;
            }
            doc["cross_check"] = {{"entries", entries}, {"summary", summary}};
        } else {
            doc["cross_check"] = nullptr;
        }
        doc["warnings"] = report.warnings;
        return dump(doc);
    }

    std::ostringstream out;
    out << "# Asset-Centric Attack Paths: " << report.graph_id << "\n\n";
    out << "Target asset: " << node_name(report, report.target) << "  \n";
    out << "Starting point: " << node_name(report, report.start) << "  \n";
    out << "Maximum depth: " << report.max_depth << "\n";
    if (report.llm) {
        out << "\n## Predicted Attack Paths\n\n";
        path_table(out, report, *report.llm);
    }
    if (report.cross) {
        out << "\n## Cross-Check Against the Graph\n\n| # | Verdict | Detail |\n|---|---------|--------|\n";
        for (std::size_t i = 0; i < report.cross->entries.size(); ++i) {
            const auto& e = report.cross->entries[i];
            std::string detail;
            for (const auto& [a, b] : e.off_graph_hops) {
                detail += (detail.empty() ? "no edge " : ", ") + node_name(report, a) + " \xE2\x86\x92 " +
                          node_name(report, b);
            }
            for (const auto& n : e.unmatched_nodes) {
                detail += (detail.empty() ? "unmatched " : ", ") + n;
            }
            out << "| " << (i + 1) << " | " << to_string(e.verdict) << " | " << md_cell(detail) << " |\n";
        }
    }
    if (report.enumerated) {
        out << "\n## Enumerated Paths\n\n";
        path_table(out, report, *report.enumerated);
    }
    if (!report.warnings.empty()) {
        out << "\n## Warnings\n\n";
        for (const auto& w : report.warnings) {
            out << "- " << w << "\n";
        }
    }
    return out.str();
}

std::string emit_report(const MetricsPayload& payload, ReportFormat format)
{
    const auto& m = payload.metrics;
    if (format == ReportFormat::Json) {
        ojson doc = header("metrics");
        doc["label"] = payload.label;
        doc["precision"] = m.precision;
        doc["recall"] = m.recall;
        doc["f1"] = m.f1;
        doc["n_instances"] = m.n_instances;
        ojson rows = ojson::array();
        for (const auto& b : m.instances) {
            rows.push_back({{"flow_id", b.flow_id},
                            {"predicted", b.predicted},
                            {"truth", b.truth},
                            {"overlap", b.overlap},
                            {"precision_term", b.precision_term},
                            {"recall_term", b.recall_term},
                            {"empty_predicted", b.empty_predicted},
                            {"empty_truth", b.empty_truth}});
        }
        doc["instances"] = rows;
        doc["warnings"] = payload.warnings;
        return dump(doc);
    }
    std::ostringstream out;
    out << "# Evaluation: " << payload.label << "\n\n";
    out << "| Precision | Recall | F1 | Instances |\n|-----------|--------|----|-----------|\n";
    out << "| " << fixed4(m.precision) << " | " << fixed4(m.recall) << " | " << fixed4(m.f1) << " | "
        << m.n_instances << " |\n\n";
    out << "## Per-flow breakdown\n\n| Flow | \\|P\\| | \\|G\\| | \\|O\\| | Precision term | Recall term | Note |\n";
    out << "|------|-----|-----|-----|----------------|-------------|------|\n";
    for (const auto& b : m.instances) {
        std::string note;
        if (b.empty_predicted) {
            note = "empty prediction";
        }
        if (b.empty_truth) {
            note += (note.empty() ? "" : ", ") + std::string("empty truth");
        }
        out << "| " << md_cell(b.flow_id) << " | " << b.predicted << " | " << b.truth << " | " << b.overlap << " | "
            << fixed4(b.precision_term) << " | " << fixed4(b.recall_term) << " | " << note << " |\n";
    }
    if (!payload.warnings.empty()) {
        out << "\n## Warnings\n\n";
        for (const auto& w : payload.warnings) {
            out << "- " << w << "\n";
        }
    }
    return out.str();
}

} // namespace tmf
