#pragma once

// Multi-label evaluation against ground truth, and JSON / Markdown
// rendering of every report the pipeline produces.

#include "tmf/attack_kb.hpp"
#include "tmf/attack_path.hpp"
#include "tmf/model.hpp"
#include "tmf/stride.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

struct EvalInstance {
    std::string flow_id;
    std::set<TechniqueId> predicted; // P_i
    std::set<TechniqueId> truth;     // G_i
};

/// Builds an instance with ids normalized to their parent technique unless
/// keep_subtechniques is set.
EvalInstance make_instance(std::string flow_id, const std::vector<TechniqueId>& predicted,
                           const std::vector<TechniqueId>& truth, bool keep_subtechniques = false);

struct InstanceBreakdown {
    std::string flow_id;
    std::size_t predicted = 0; // |P_i|
    std::size_t truth = 0;     // |G_i|
    std::size_t overlap = 0;   // |O_i|
    double precision_term = 0.0;
    double recall_term = 0.0;
    // Set when a term came from the empty-set convention.
    bool empty_predicted = false;
    bool empty_truth = false;
};

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t n_instances = 0;
    std::vector<InstanceBreakdown> instances;
};

/// Per-instance terms are summed in ascending order so the result does not
/// depend on instance order. Throws EmptyEvaluation.
MetricsReport multilabel_metrics(const std::vector<EvalInstance>& instances);

struct BinaryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool zero_denominator = false;
};

BinaryMetrics binary_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);

/// 0 when p + r == 0.
double f1_score(double precision, double recall);

using LabelMap = std::map<std::string, std::vector<TechniqueId>>;

/// Ground truth JSON-lines: {"flow_id": "...", "technique_ids": [...]}.
/// Throws SchemaError / DuplicateId naming the line.
LabelMap parse_ground_truth(std::string_view jsonl);
LabelMap load_ground_truth(const std::filesystem::path& path);

/// Flow -> technique ids from an identification report JSON document.
LabelMap parse_identification_report(std::string_view json_text);

struct Joined {
    std::vector<EvalInstance> instances;
    std::vector<std::string> warnings; // flows present on only one side
};

/// Inner join on flow id. Throws EmptyEvaluation when nothing overlaps.
Joined join_predictions(const LabelMap& predicted, const LabelMap& truth, bool keep_subtechniques = false);

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline constexpr int kReportSchemaVersion = 1;

enum class ReportFormat { Json, Markdown };

struct IdentifyReport {
    std::string graph_id;
    Strategy strategy = Strategy::Rag;
    std::map<std::string, std::string> flow_names; // flow id -> name
    std::vector<IdentificationResult> results;     // by flow id
};

struct PathsReport {
    std::string graph_id;
    std::string start;  // entity id
    std::string target; // entity id
    std::size_t max_depth = kDefaultMaxDepth;
    std::map<std::string, std::string> names; // entity id -> name
    std::optional<std::vector<AttackPath>> enumerated;
    std::optional<std::vector<AttackPath>> llm;
    std::optional<CrossCheckReport> cross;
    std::vector<std::string> warnings;
};

struct MetricsPayload {
    std::string label; // e.g. strategy name or input file
    MetricsReport metrics;
    std::vector<std::string> warnings;
};

std::string emit_report(const StrideReport& report, ReportFormat format);
std::string emit_report(const IdentifyReport& report, const KnowledgeBase& kb, ReportFormat format);
std::string emit_report(const PathsReport& report, ReportFormat format);
std::string emit_report(const MetricsPayload& payload, ReportFormat format);

} // namespace tmf
