#pragma once

// Asset-centric analysis: entity graph annotated with identified techniques,
// exhaustive simple-path enumeration, and model-proposed attack paths.

#include "tmf/attack_kb.hpp"
#include "tmf/dfd.hpp"
#include "tmf/identify.hpp"
#include "tmf/llm.hpp"
#include "tmf/model.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

struct EntityEdge {
    std::string from;
    std::string to;
    std::string flow_id;
    TechniqueSet technique_ids;
};

struct EntityGraph {
    std::map<std::string, std::string> nodes; // entity id -> display name
    std::vector<EntityEdge> edges;            // one per flow, by flow id

    const std::string& name(const std::string& id) const;
    bool has_edge(const std::string& from, const std::string& to) const;
    /// Union of the techniques on every flow from -> to.
    TechniqueSet techniques(const std::string& from, const std::string& to) const;
    /// Successor ids in ascending order, parallel flows collapsed.
    std::vector<std::string> successors(const std::string& id) const;

    /// Accepts an entity id or a name (case and punctuation ignored).
    /// Throws UnknownEntity.
    std::string resolve(std::string_view id_or_name) const;
};

/// Throws UnknownFlowInResults when a result names a flow not in the graph.
EntityGraph build_entity_graph(const DfdGraph& graph, const std::vector<IdentificationResult>& results);

enum class PathSource { Enumerated, Llm };
std::string_view to_string(PathSource source);

struct PathStep {
    std::string from; // empty for narrative steps of model paths
    std::string to;
    TechniqueSet technique_ids;
    std::string narrative;
};

struct AttackPath {
    std::vector<std::string> node_sequence; // entity ids; unmatched names kept verbatim
    std::vector<PathStep> steps;
    PathSource source = PathSource::Enumerated;
    std::vector<std::string> unmatched_nodes;
};

inline constexpr std::size_t kDefaultMaxDepth = 6;

/// All simple paths start -> target with at most max_depth edges, in
/// lexicographic order of their id sequences. Throws UnknownEntity or
/// InvalidArgument (start == target).
std::vector<AttackPath> enumerate_paths(const EntityGraph& g, std::string_view start, std::string_view target,
                                        std::size_t max_depth = kDefaultMaxDepth);

/// Per-flow table, instructions, and the target/start query.
std::string build_asset_prompt(const EntityGraph& g, std::string_view start, std::string_view target,
                               const PromptTemplates& templates = default_templates());

struct LlmPaths {
    std::vector<AttackPath> paths;
    std::vector<std::string> warnings;
    std::vector<Exchange> transcripts;
};

/// Parses the two-column table of a reply. Throws UnparseableResponse when
/// no path row is present.
LlmPaths parse_path_table(std::string_view reply, const EntityGraph& g, const KnowledgeBase& kb);

/// Sends the prompt with the analyst persona; one reprompt on an
/// unparseable reply.
LlmPaths llm_attack_paths(const std::string& prompt, const EntityGraph& g, Gateway& gateway, const KnowledgeBase& kb,
                          const PromptTemplates& templates = default_templates());

enum class CrossVerdict { Present, OffGraphHop, Unmatched, Absent };
std::string_view to_string(CrossVerdict verdict);

struct CrossCheckEntry {
    std::vector<std::string> node_sequence;
    CrossVerdict verdict = CrossVerdict::Absent;
    std::vector<std::pair<std::string, std::string>> off_graph_hops;
    std::vector<std::string> unmatched_nodes;
};

struct CrossCheckReport {
    std::vector<CrossCheckEntry> entries;
    std::map<CrossVerdict, std::size_t> summary; // every verdict present
};

CrossCheckReport cross_check(const std::vector<AttackPath>& llm_paths, const std::vector<AttackPath>& enumerated,
                             const EntityGraph& g);

} // namespace tmf
