#include "tmf/identify.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace tmf {

using nlohmann::json;

void StrategyConfig::validate() const
{
    retrieval.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) {
        fail(ErrorCode::InvalidArgument, "classifier threshold must lie in (0, 1)");
    }
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

PromptTemplates default_templates()
{
    PromptTemplates t;
    t.vanilla_query = "What are the possible cyberattacks that can be used to attack this information flow? Return "
                      "them in a Python dictionary format with the key being the cyberattack technique and the value "
                      "being the technique description.";
    t.rag_query = "Which MITRE ATT&CK techniques from the table above can be used to attack the data flow? Provide "
                  "the technique IDs in Python list format.";
    t.icl_instructions =
        "You map data flows of transportation cyber-physical systems to MITRE ATT&CK techniques. Each data flow is "
        "described by its name, initiator, acceptor, security requirements, the functions of both endpoints, a "
        "definition, and the STRIDE threats raised against it. Identify the MITRE ATT&CK techniques an adversary "
        "could use against the target data flow.";
    t.icl_query = "Which MITRE ATT&CK techniques can be used to attack the target data flow? Provide the technique IDs "
                  "in Python list format.";
    t.reprompt = "Answer again using only the requested format, with no other text.";
    t.asset_query =
        "Target asset: {target}\nStarting point: {start}\n\nIdentify the potential attack paths that start at "
        "{start} and lead to the compromise of {target}, together with the MITRE ATT&CK techniques that can be used "
        "in each step of each path. Present the output as a table with two columns: \"Predicted Attack Path\", "
        "listing the entities of the path separated by \" → \", and \"Execution Steps using ATT&CK Techniques\", "
        "giving numbered steps that cite technique IDs.";
    t.asset_instructions =
        "The table above lists every data flow of the system: the initiator, the acceptor, and the MITRE ATT&CK "
        "techniques identified for that flow. Treat each row as a directed connection an attacker can traverse "
        "from initiator to acceptor. Use only entities that appear in the table.";
    return t;
}

PromptTemplates load_templates(const std::filesystem::path& dir)
{
    PromptTemplates t = default_templates();
    const std::pair<const char*, std::string*> fields[] = {
        {"vanilla_query", &t.vanilla_query}, {"rag_query", &t.rag_query},
        {"icl_instructions", &t.icl_instructions}, {"icl_query", &t.icl_query},
        {"reprompt", &t.reprompt}, {"asset_instructions", &t.asset_instructions},
        {"asset_query", &t.asset_query},
    };
    for (const auto& [name, field] : fields) {
        const auto path = dir / (std::string(name) + ".txt");
        if (std::filesystem::exists(path)) {
            *field = std::string(text::trim(text::read_file(path)));
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string or_placeholder(std::string_view s)
{
    const auto t = text::trim(s);
    return t.empty() ? std::string("(not provided)") : std::string(t);
}

void render_entity(std::ostringstream& out, std::string_view role, const Entity& e)
{
    out << "Description of the " << role << ": " << or_placeholder(e.description) << "\n";
    for (const auto& f : e.functions) {
        out << "Function: " << f.name;
        if (!text::trim(f.description).empty()) {
            out << ": " << text::trim(f.description);
        }
        out << "\n";
        for (const auto& p : f.processes) {
            out << "  " << p.name << ": " << or_placeholder(p.description) << "\n";
        }
    }
}

std::string table_cell(std::string_view s)
{
    std::string out = text::replace_all(std::string(s), "\r", "");
    out = text::replace_all(std::move(out), "\n", " ");
    out = text::replace_all(std::move(out), "|", "/");
    return std::string(text::trim(out));
}

} // namespace

std::string render_basic_input(const BasicInput& bi)
{
    const auto& f = bi.flow;
    std::ostringstream out;
    out << "Data Flow: " << f.name << "\n";
    out << "Data Flow ID: " << f.id << "\n";
    out << "Initiator: " << bi.initiator.name << "\n";
    out << "Acceptor: " << bi.acceptor.name << "\n";
    out << "Requires Authentication?: " << to_string(f.security.requires_authentication) << "\n";
    out << "Requires Encryption?: " << to_string(f.security.requires_encryption) << "\n";
    if (f.security.confidentiality) {
        out << "Confidentiality: " << to_string(*f.security.confidentiality) << "\n";
    }
    if (f.security.integrity) {
        out << "Integrity: " << to_string(*f.security.integrity) << "\n";
    }
    if (f.security.availability) {
        out << "Availability: " << to_string(*f.security.availability) << "\n";
    }
    out << "\n";
    render_entity(out, "Initiator", bi.initiator);
    out << "\n";
    render_entity(out, "Acceptor", bi.acceptor);
    out << "\n";
    out << "Definition of " << f.name << ": " << or_placeholder(f.definition) << "\n";
    out << "\n";
    out << "STRIDE-based threats associated with the data flow:\n";
    if (bi.stride_threats.empty()) {
        out << "(none)\n";
    }
    for (const auto& t : bi.stride_threats) {
        out << display_name(t.category) << ": " << table_cell(t.description) << "\n";
    }
    return out.str();
}

std::string render_candidate_table(const std::vector<Candidate>& candidates, const KnowledgeBase& kb)
{
    std::ostringstream out;
    out << "| ID | Name | Description |\n";
    out << "|----|------|-------------|\n";
    for (const auto& c : candidates) {
        const auto* rec = kb.find(c.id);
        out << "| " << c.id.str() << " | " << (rec ? table_cell(rec->name) : "") << " | "
            << (rec ? table_cell(rec->description) : "") << " |\n";
    }
    return out.str();
}

std::string render_vanilla_prompt(const BasicInput& bi, const PromptTemplates& t)
{
    return render_basic_input(bi) + "\n" + t.vanilla_query + "\n";
}

std::string render_rag_prompt(const BasicInput& bi, const std::vector<Candidate>& candidates, const KnowledgeBase& kb,
                              const PromptTemplates& t)
{
    std::ostringstream out;
    out << render_candidate_table(candidates, kb) << "\n";
    out << t.rag_query << "\n\n";
    out << "Data Flow: " << bi.flow.name << "\n";
    out << "Definition of " << bi.flow.name << ": " << or_placeholder(bi.flow.definition) << "\n\n";
    out << "Initiator: " << bi.initiator.name << "\n";
    out << "Description of the Initiator: " << or_placeholder(bi.initiator.description) << "\n\n";
    out << "Acceptor: " << bi.acceptor.name << "\n";
    out << "Description of the Acceptor: " << or_placeholder(bi.acceptor.description) << "\n";
    return out.str();
}

namespace {

std::string python_list(const std::vector<TechniqueId>& ids)
{
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += (i ? ", \"" : "\"") + ids[i].str() + "\"";
    }
    return out + "]";
}

} // namespace

std::string render_icl_prompt(const BasicInput& bi, const std::vector<IclExample>& examples, std::size_t shots,
                              const PromptTemplates& t)
{
    if (shots > examples.size()) {
        fail(ErrorCode::InvalidArgument, "requested " + std::to_string(shots) + " shots but only " +
                                             std::to_string(examples.size()) + " examples are available");
    }
    std::ostringstream out;
    out << t.icl_instructions << "\n\n";
    for (std::size_t i = 0; i < shots; ++i) {
        out << kIclExampleHeading << (i + 1) << "\n";
        out << text::trim(examples[i].basic_input_text) << "\n\n";
        out << "MITRE ATT&CK techniques: " << python_list(examples[i].technique_ids) << "\n\n";
    }
    out << "### Target data flow\n";
    out << render_basic_input(bi) << "\n";
    out << t.icl_query << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

void append_utf8(std::string& out, std::uint32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Literal scanner for the JSON/Python subset models use in replies.
class LiteralScanner {
public:
    LiteralScanner(std::string_view s, std::size_t pos) : s_(s), pos_(pos) {}

    std::size_t pos() const { return pos_; }

    void skip_ws()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    bool eat(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool peek(char c)
    {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    std::optional<std::string> string_literal()
    {
        skip_ws();
        if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) {
            return std::nullopt;
        }
        const char q = s_[pos_++];
        std::string out;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == q) {
                return out;
            }
            if (c == '\n') {
                return std::nullopt;
            }
            if (c != '\\') {
                out.push_back(c);
                continue;
            }
            if (pos_ >= s_.size()) {
                return std::nullopt;
            }
            const char e = s_[pos_++];
            switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case 'u': {
                if (pos_ + 4 > s_.size()) {
                    return std::nullopt;
                }
                std::uint32_t cp = 0;
                for (int i = 0; i < 4; ++i) {
                    const char h = s_[pos_++];
                    cp <<= 4;
                    if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
                    else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
                    else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
                    else return std::nullopt;
                }
                append_utf8(out, cp);
                break;
            }
            default: out.push_back(e); break;
            }
        }
        return std::nullopt;
    }

    // Skips a non-string value up to the next top-level ',' or '}'.
    bool skip_value()
    {
        skip_ws();
        int depth = 0;
        const std::size_t start = pos_;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == '"' || c == '\'') {
                if (!string_literal()) {
                    return false;
                }
                continue;
            }
            if (c == '{' || c == '[' || c == '(') {
                ++depth;
            } else if (c == '}' || c == ']' || c == ')') {
                if (depth == 0) {
                    break;
                }
                --depth;
            } else if (c == ',' && depth == 0) {
                break;
            }
            ++pos_;
        }
        return pos_ > start && depth == 0;
    }

private:
    std::string_view s_;
    std::size_t pos_;
};

std::optional<std::vector<GeneralAttack>> try_mapping(std::string_view s, std::size_t open)
{
    LiteralScanner sc(s, open + 1);
    std::vector<GeneralAttack> out;
    while (true) {
        if (sc.eat('}')) {
            return out;
        }
        auto key = sc.string_literal();
        if (!key || !sc.eat(':')) {
            return std::nullopt;
        }
        std::string value;
        if (auto v = sc.string_literal()) {
            value = *v;
            // Python joins adjacent literals.
            while (auto more = sc.string_literal()) {
                value += *more;
            }
        } else if (!sc.skip_value()) {
            return std::nullopt;
        }
        const auto name = text::trim(*key);
        if (!name.empty()) {
            out.push_back({std::string(name), std::string(text::trim(value))});
        }
        if (sc.eat(',')) {
            continue;
        }
        if (!sc.peek('}')) {
            return std::nullopt;
        }
    }
}

struct RawToken {
    std::string text;
    std::size_t pos;
};

std::vector<RawToken> technique_tokens(std::string_view s)
{
    std::vector<RawToken> out;
    const auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    const auto digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if ((s[i] != 'T' && s[i] != 't') || !digit(s[i + 1]) || (i > 0 && alnum(s[i - 1]))) {
            continue;
        }
        std::size_t j = i + 1;
        while (j < s.size() && digit(s[j])) {
            ++j;
        }
        if (j + 1 < s.size() && s[j] == '.' && digit(s[j + 1])) {
            ++j;
            while (j < s.size() && digit(s[j])) {
                ++j;
            }
        }
        if (j < s.size() && alnum(s[j])) {
            i = j;
            continue;
        }
        out.push_back({std::string(s.substr(i, j - i)), i});
        i = j - 1;
    }
    return out;
}

ParsedIds collect_ids(std::string_view s)
{
    ParsedIds out;
    std::set<TechniqueId> seen;
    for (const auto& tok : technique_tokens(s)) {
        if (auto id = TechniqueId::try_parse(tok.text)) {
            if (seen.insert(*id).second) {
                out.ids.push_back(*id);
            }
        } else if (std::find(out.malformed.begin(), out.malformed.end(), tok.text) == out.malformed.end()) {
            out.malformed.push_back(tok.text);
        }
    }
    return out;
}

} // namespace

std::vector<GeneralAttack> parse_general_attacks(std::string_view text)
{
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos; pos = text.find('{', pos + 1)) {
        if (auto attacks = try_mapping(text, pos)) {
            return *attacks;
        }
    }
    fail(ErrorCode::UnparseableResponse, "no mapping literal found in reply");
}

ParsedIds extract_technique_ids(std::string_view text)
{
    return collect_ids(text);
}

ParsedIds scan_technique_ids(std::string_view text)
{
    for (std::size_t open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
        const auto close = text.find(']', open + 1);
        if (close == std::string_view::npos) {
            break;
        }
        auto parsed = collect_ids(text.substr(open + 1, close - open - 1));
        if (!parsed.ids.empty()) {
            return parsed;
        }
    }
    return collect_ids(text);
}

std::vector<TechniqueId> parse_technique_list(std::string_view text)
{
    auto parsed = scan_technique_ids(text);
    if (parsed.ids.empty()) {
        fail(ErrorCode::UnparseableResponse, "no technique id found in reply");
    }
    return parsed.ids;
}

// ---------------------------------------------------------------------------
// Strategies
// ---------------------------------------------------------------------------

TechniqueSet validate_against_kb(const std::vector<TechniqueId>& ids, const KnowledgeBase& kb, bool keep_subtechniques,
                                 std::vector<std::string>& warnings)
{
    TechniqueSet out;
    for (const auto& id : ids) {
        if (!kb.is_valid(id)) {
            warnings.push_back("dropped " + id.str() + ": not a current technique in the knowledge base");
            continue;
        }
        const TechniqueId kept = keep_subtechniques ? id : id.parent();
        if (!kb.is_valid(kept)) {
            warnings.push_back("dropped " + id.str() + ": parent " + kept.str() + " is not current");
            continue;
        }
        out.insert(kept);
    }
    return out;
}

namespace {

// Calls the gateway, parses with `parse`, and retries once with the
// reprompt suffix when the reply cannot be parsed.
template <typename Parse>
auto ask_and_parse(Gateway& gateway, const std::string& prompt, const std::string& label, const PromptTemplates& t,
                   IdentificationResult& result, Parse parse)
{
    CompletionRequest req;
    req.user_text = prompt;
    auto reply = gateway.complete(req, label);
    result.transcripts.push_back({prompt, reply.text});
    try {
        return parse(reply.text);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UnparseableResponse) {
            throw;
        }
        result.warnings.push_back(label + ": reply not parseable, reprompting");
    }
    req.user_text = prompt + "\n" + t.reprompt + "\n";
    reply = gateway.complete(req, label + ":reprompt");
    result.transcripts.push_back({req.user_text, reply.text});
    try {
        return parse(reply.text);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnparseableResponse) {
            fail(ErrorCode::UnparseableResponse, label + ": reply not parseable after reprompt: " + e.what());
        }
        throw;
    }
}

void note_malformed(const std::string& reply, IdentificationResult& result)
{
    for (const auto& m : scan_technique_ids(reply).malformed) {
        result.warnings.push_back("ignored malformed technique id '" + m + "'");
    }
}

bool among_candidates(const TechniqueId& id, const std::vector<Candidate>& candidates)
{
    return std::any_of(candidates.begin(), candidates.end(),
                       [&](const Candidate& c) { return c.id == id || c.id.parent() == id; });
}

} // namespace

IdentificationResult rag_identify(const BasicInput& bi, const KnowledgeBase& kb, const VectorIndex& index,
                                  Embedder& embedder, Gateway& gateway, const StrategyConfig& cfg,
                                  const PromptTemplates& templates)
{
    validate(bi);
    cfg.retrieval.validate();
    ensure_compatible(index, embedder);

    IdentificationResult result;
    result.flow_id = bi.flow.id;
    result.strategy = Strategy::Rag;

    // Stage 1: general attacks from the vanilla prompt.
    const auto attacks = ask_and_parse(gateway, render_vanilla_prompt(bi, templates), "rag:" + bi.flow.id + ":agent1",
                                       templates, result, parse_general_attacks);

    // Stage 2: one probe per attack, mirroring the corpus format.
    std::vector<std::string> probes;
    for (const auto& a : attacks) {
        probes.push_back(a.description.empty() ? a.name : a.name + ": " + a.description);
    }
    std::vector<Embedding> vectors;
    if (!probes.empty()) {
        vectors = embedder.embed(probes);
        if (vectors.size() != probes.size()) {
            fail(ErrorCode::EmbedderError, "embedder returned " + std::to_string(vectors.size()) + " vectors for " +
                                               std::to_string(probes.size()) + " probes");
        }
    }

    // Stage 3: per-attack top-k, union keeping the best similarity.
    std::map<TechniqueId, double> best;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        std::vector<Candidate> hits;
        try {
            hits = query(index, vectors[i], cfg.retrieval);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ZeroVector) {
                throw;
            }
            result.warnings.push_back("attack '" + attacks[i].name + "' has no usable embedding");
        }
        for (const auto& h : hits) {
            auto [it, inserted] = best.emplace(h.id, h.similarity);
            if (!inserted) {
                it->second = std::max(it->second, h.similarity);
            }
        }
        result.retrieval.push_back({probes[i], std::move(hits)});
    }
    std::vector<Candidate> candidates;
    for (const auto& [id, sim] : best) {
        candidates.push_back({id, sim});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.similarity > b.similarity; });
    result.candidates = candidates;
    if (candidates.empty()) {
        result.empty_flagged = true;
        result.warnings.push_back("no retrieval candidates above the similarity cutoff");
        return result;
    }

    // Stage 4: the model picks from the candidate table.
    std::string reply_text;
    const auto ids = ask_and_parse(gateway, render_rag_prompt(bi, candidates, kb, templates),
                                   "rag:" + bi.flow.id + ":agent2", templates, result,
                                   [&](const std::string& reply) {
                                       reply_text = reply;
                                       return parse_technique_list(reply);
                                   });
    note_malformed(reply_text, result);
    result.technique_ids = validate_against_kb(ids, kb, cfg.keep_subtechniques, result.warnings);
    for (const auto& id : result.technique_ids) {
        if (!among_candidates(id, candidates)) {
            result.out_of_candidate.push_back(id);
            result.warnings.push_back(id.str() + " was named outside the candidate table");
        }
    }
    return result;
}

std::vector<IclExample> parse_icl_examples(std::string_view jsonl)
{
    std::vector<IclExample> out;
    const auto lines = text::split_lines(jsonl);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) {
            continue;
        }
        const std::string where = "examples line " + std::to_string(n + 1);
        try {
            const json row = json::parse(lines[n]);
            IclExample ex;
            ex.basic_input_text = row.at("basic_input").get<std::string>();
            for (const auto& id : row.at("technique_ids")) {
                ex.technique_ids.push_back(TechniqueId::parse(id.get<std::string>()));
            }
            out.push_back(std::move(ex));
        } catch (const json::exception& e) {
            fail(ErrorCode::SchemaError, where + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorCode::SchemaError, where + ": " + e.what());
        }
    }
    return out;
}

std::vector<IclExample> load_icl_examples(const std::filesystem::path& path)
{
    return parse_icl_examples(text::read_file(path));
}

void validate_examples(const std::vector<IclExample>& examples, const KnowledgeBase& kb)
{
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const std::string where = "example " + std::to_string(i + 1);
        if (examples[i].technique_ids.empty()) {
            fail(ErrorCode::SchemaError, where + ": no technique ids");
        }
        if (text::trim(examples[i].basic_input_text).empty()) {
            fail(ErrorCode::SchemaError, where + ": empty basic input");
        }
        for (const auto& id : examples[i].technique_ids) {
            if (!kb.is_valid(id)) {
                fail(ErrorCode::SchemaError, where + ": " + id.str() + " is not a current technique");
            }
        }
    }
}

IdentificationResult icl_identify(const BasicInput& bi, const std::vector<IclExample>& examples,
                                  const KnowledgeBase& kb, Gateway& gateway, const StrategyConfig& cfg,
                                  const PromptTemplates& templates)
{
    validate(bi);
    IdentificationResult result;
    result.flow_id = bi.flow.id;
    result.strategy = Strategy::Icl;

    const std::string prompt = render_icl_prompt(bi, examples, cfg.shots, templates);
    std::string reply_text;
    const auto ids = ask_and_parse(gateway, prompt, "icl:" + bi.flow.id, templates, result,
                                   [&](const std::string& reply) {
                                       reply_text = reply;
                                       return parse_technique_list(reply);
                                   });
    note_malformed(reply_text, result);
    result.technique_ids = validate_against_kb(ids, kb, cfg.keep_subtechniques, result.warnings);
    return result;
}

// ---------------------------------------------------------------------------
// Classifier predictions
// ---------------------------------------------------------------------------

namespace {

ScoreVector parse_scores(const json& scores, const std::string& where)
{
    if (!scores.is_object()) {
        fail(ErrorCode::SchemaError, where + ".scores: expected an object");
    }
    ScoreVector out;
    for (const auto& [key, value] : scores.items()) {
        if (!value.is_number()) {
            fail(ErrorCode::SchemaError, where + ".scores." + key + ": expected a number");
        }
        const double v = value.get<double>();
        if (!(v >= 0.0 && v <= 1.0)) {
            fail(ErrorCode::SchemaError, where + ".scores." + key + ": score outside [0, 1]");
        }
        out[key] = v;
    }
    return out;
}

} // namespace

FilePredictionSource::FilePredictionSource(const std::filesystem::path& path)
{
    std::string body;
    try {
        body = text::read_file(path);
    } catch (const Error& e) {
        fail(ErrorCode::SourceUnavailable, e.what());
    }
    *this = from_text(body);
}

FilePredictionSource FilePredictionSource::from_text(std::string_view jsonl)
{
    FilePredictionSource src;
    const auto lines = text::split_lines(jsonl);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        if (text::trim(lines[n]).empty()) {
            continue;
        }
        const std::string where = "predictions line " + std::to_string(n + 1);
        json row;
        try {
            row = json::parse(lines[n]);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::SchemaError, where + ": " + e.what());
        }
        if (!row.is_object() || !row.contains("flow_id") || !row["flow_id"].is_string() || !row.contains("scores")) {
            fail(ErrorCode::SchemaError, where + ": needs \"flow_id\" and \"scores\"");
        }
        const auto flow_id = row["flow_id"].get<std::string>();
        if (src.rows_.contains(flow_id)) {
            fail(ErrorCode::DuplicateId, where + ": flow " + flow_id + " appears twice");
        }
        src.rows_[flow_id] = parse_scores(row["scores"], where);
    }
    return src;
}

ScoreVector FilePredictionSource::scores(const BasicInput& bi)
{
    auto it = rows_.find(bi.flow.id);
    if (it == rows_.end()) {
        fail(ErrorCode::MissingPrediction, "no prediction row for flow " + bi.flow.id);
    }
    return it->second;
}

HttpPredictionSource::HttpPredictionSource(net::Endpoint endpoint, std::string path)
    : endpoint_(std::move(endpoint)), path_(std::move(path))
{
}

ScoreVector HttpPredictionSource::scores(const BasicInput& bi)
{
    const json body = {{"basic_input", render_basic_input(bi)}};
    net::Response response;
    try {
        response = net::post_json(endpoint_, path_, body.dump());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NetworkDenied) {
            throw;
        }
        fail(ErrorCode::SourceUnavailable, std::string("classifier endpoint: ") + e.what());
    }
    if (response.status == 404) {
        fail(ErrorCode::MissingPrediction, "classifier endpoint has no prediction for flow " + bi.flow.id);
    }
    if (response.status < 200 || response.status >= 300) {
        fail(ErrorCode::SourceUnavailable, "classifier endpoint returned HTTP " + std::to_string(response.status));
    }
    json doc;
    try {
        doc = json::parse(response.body);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SourceUnavailable, std::string("classifier endpoint: malformed reply: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("scores")) {
        fail(ErrorCode::SourceUnavailable, "classifier endpoint: reply has no \"scores\"");
    }
    return parse_scores(doc["scores"], "reply");
}

IdentificationResult classifier_identify(const BasicInput& bi, PredictionSource& predictions, const KnowledgeBase& kb,
                                         const StrategyConfig& cfg)
{
    validate(bi);
    cfg.validate();
    IdentificationResult result;
    result.flow_id = bi.flow.id;
    result.strategy = Strategy::Classifier;

    std::vector<std::pair<TechniqueId, double>> above;
    for (const auto& [key, score] : predictions.scores(bi)) {
        auto id = TechniqueId::try_parse(key);
        if (!id) {
            result.warnings.push_back("ignored malformed technique id '" + key + "' in predictions");
            continue;
        }
        if (score >= cfg.threshold) {
            above.emplace_back(*id, score);
        }
    }
    std::stable_sort(above.begin(), above.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<TechniqueId> ids;
    for (const auto& [id, score] : above) {
        ids.push_back(id);
    }
    result.technique_ids = validate_against_kb(ids, kb, cfg.keep_subtechniques, result.warnings);
    if (result.technique_ids.empty()) {
        result.empty_flagged = true;
        result.warnings.push_back("no technique scored at or above the threshold");
    }
    return result;
}

// ---------------------------------------------------------------------------

std::vector<IdentificationResult> run_per_flow(std::size_t n, std::size_t jobs,
                                               const std::function<IdentificationResult(std::size_t)>& task)
{
    std::vector<std::optional<IdentificationResult>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i] = task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    std::vector<IdentificationResult> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (errors[i]) {
            std::rethrow_exception(errors[i]);
        }
        out.push_back(std::move(*slots[i]));
    }
    return out;
}

} // namespace tmf
