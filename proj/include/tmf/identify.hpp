#pragma once

// ATT&CK technique identification for one data flow: RAG, in-context
// learning, and classifier-score strategies, plus prompt rendering and
// parsing of model replies.

#include "tmf/attack_kb.hpp"
#include "tmf/llm.hpp"
#include "tmf/model.hpp"
#include "tmf/net.hpp"
#include "tmf/retrieval.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

struct IclExample {
    std::string basic_input_text;
    std::vector<TechniqueId> technique_ids;
};

struct GeneralAttack {
    std::string name;
    std::string description;

    bool operator==(const GeneralAttack&) const = default;
};

struct StrategyConfig {
    Strategy strategy = Strategy::Rag;
    std::size_t shots = 8;
    RetrievalConfig retrieval;
    double threshold = 0.5;
    bool keep_subtechniques = false;

    void validate() const; // InvalidArgument
};

/// Editable prompt wording. Defaults carry the two verbatim RAG queries.
struct PromptTemplates {
    std::string vanilla_query;
    std::string rag_query;
    std::string icl_instructions;
    std::string icl_query;
    std::string reprompt;
    std::string asset_instructions;
    std::string asset_query; // placeholders {target}, {start}
};

PromptTemplates default_templates();

/// Overrides each field from `<dir>/<field>.txt` when that file exists.
PromptTemplates load_templates(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_basic_input(const BasicInput& bi);

/// "| ID | Name | Description |" table of the candidate techniques.
std::string render_candidate_table(const std::vector<Candidate>& candidates, const KnowledgeBase& kb);

std::string render_vanilla_prompt(const BasicInput& bi, const PromptTemplates& t);
std::string render_rag_prompt(const BasicInput& bi, const std::vector<Candidate>& candidates, const KnowledgeBase& kb,
                              const PromptTemplates& t);
std::string render_icl_prompt(const BasicInput& bi, const std::vector<IclExample>& examples, std::size_t shots,
                              const PromptTemplates& t);

/// Heading that opens each example block in an ICL prompt.
inline constexpr std::string_view kIclExampleHeading = "### Example ";

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Key/value pairs of the first mapping literal (JSON or Python style) in
/// the text. Throws UnparseableResponse.
std::vector<GeneralAttack> parse_general_attacks(std::string_view text);

struct ParsedIds {
    std::vector<TechniqueId> ids;
    std::vector<std::string> malformed; // tokens like "T486"
};

/// Every id-shaped token in the text, in order of appearance.
ParsedIds extract_technique_ids(std::string_view text);

/// Ids from the first list literal that holds any, otherwise from the whole
/// text. Order kept, duplicates dropped. Never throws.
ParsedIds scan_technique_ids(std::string_view text);

/// Throws UnparseableResponse when no valid id is found.
std::vector<TechniqueId> parse_technique_list(std::string_view text);

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

/// Normalizes (unless keep_subtechniques) and KB-validates ids; rejected
/// ids become warnings.
TechniqueSet validate_against_kb(const std::vector<TechniqueId>& ids, const KnowledgeBase& kb, bool keep_subtechniques,
                                 std::vector<std::string>& warnings);

IdentificationResult rag_identify(const BasicInput& bi, const KnowledgeBase& kb, const VectorIndex& index,
                                  Embedder& embedder, Gateway& gateway, const StrategyConfig& cfg,
                                  const PromptTemplates& templates = default_templates());

/// JSON-lines, one {"basic_input", "technique_ids"} per line. Throws
/// SchemaError naming the line.
std::vector<IclExample> parse_icl_examples(std::string_view jsonl);
std::vector<IclExample> load_icl_examples(const std::filesystem::path& path);
/// Every example needs at least one id, all valid in the KB.
void validate_examples(const std::vector<IclExample>& examples, const KnowledgeBase& kb);

IdentificationResult icl_identify(const BasicInput& bi, const std::vector<IclExample>& examples,
                                  const KnowledgeBase& kb, Gateway& gateway, const StrategyConfig& cfg,
                                  const PromptTemplates& templates = default_templates());

using ScoreVector = std::map<std::string, double>;

class PredictionSource {
public:
    virtual ~PredictionSource() = default;
    /// Throws MissingPrediction or SourceUnavailable.
    virtual ScoreVector scores(const BasicInput& bi) = 0;
};

/// Predictions JSON-lines: {"flow_id": "...", "scores": {"T1552": 0.91, ...}}.
class FilePredictionSource final : public PredictionSource {
public:
    explicit FilePredictionSource(const std::filesystem::path& path); // SourceUnavailable, SchemaError
    static FilePredictionSource from_text(std::string_view jsonl);

    ScoreVector scores(const BasicInput& bi) override;
    const std::map<std::string, ScoreVector>& rows() const noexcept { return rows_; }

private:
    FilePredictionSource() = default;
    std::map<std::string, ScoreVector> rows_;
};

/// POSTs {"basic_input": "..."} to base_url + path, expects {"scores": {...}}.
class HttpPredictionSource final : public PredictionSource {
public:
    explicit HttpPredictionSource(net::Endpoint endpoint, std::string path = "/predict");

    ScoreVector scores(const BasicInput& bi) override;

private:
    net::Endpoint endpoint_;
    std::string path_;
};

IdentificationResult classifier_identify(const BasicInput& bi, PredictionSource& predictions, const KnowledgeBase& kb,
                                         const StrategyConfig& cfg);

/// Runs `task(i)` for i in [0, n) on up to `jobs` threads and returns the
/// results in index order. The first failure by index is rethrown.
std::vector<IdentificationResult> run_per_flow(std::size_t n, std::size_t jobs,
                                               const std::function<IdentificationResult(std::size_t)>& task);

} // namespace tmf
