#include "tmf/attack_path.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace tmf {

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

const std::string& EntityGraph::name(const std::string& id) const
{
    auto it = nodes.find(id);
    if (it == nodes.end()) {
        fail(ErrorCode::UnknownEntity, "no entity '" + id + "' in the graph");
    }
    return it->second;
}

bool EntityGraph::has_edge(const std::string& from, const std::string& to) const
{
    return std::any_of(edges.begin(), edges.end(), [&](const EntityEdge& e) { return e.from == from && e.to == to; });
}

TechniqueSet EntityGraph::techniques(const std::string& from, const std::string& to) const
{
    TechniqueSet out;
    for (const auto& e : edges) {
        if (e.from == from && e.to == to) {
            for (const auto& id : e.technique_ids) {
                out.insert(id);
            }
        }
    }
    return out;
}

std::vector<std::string> EntityGraph::successors(const std::string& id) const
{
    std::set<std::string> out;
    for (const auto& e : edges) {
        if (e.from == id) {
            out.insert(e.to);
        }
    }
    return {out.begin(), out.end()};
}

std::string EntityGraph::resolve(std::string_view id_or_name) const
{
    const std::string key(text::trim(id_or_name));
    if (nodes.contains(key)) {
        return key;
    }
    const std::string folded = text::fold_name(key);
    std::vector<std::string> hits;
    for (const auto& [id, nm] : nodes) {
        if (!folded.empty() && (text::fold_name(nm) == folded || text::fold_name(id) == folded)) {
            hits.push_back(id);
        }
    }
    if (hits.size() == 1) {
        return hits.front();
    }
    if (hits.empty()) {
        fail(ErrorCode::UnknownEntity, "no entity named '" + key + "'");
    }
    fail(ErrorCode::UnknownEntity, "entity name '" + key + "' is ambiguous");
}

EntityGraph build_entity_graph(const DfdGraph& graph, const std::vector<IdentificationResult>& results)
{
    std::map<std::string, const IdentificationResult*> by_flow;
    for (const auto& r : results) {
        if (!graph.flows.contains(r.flow_id)) {
            fail(ErrorCode::UnknownFlowInResults, "identification result for unknown flow '" + r.flow_id + "'");
        }
        by_flow[r.flow_id] = &r;
    }
    EntityGraph g;
    for (const auto& [id, e] : graph.entities) {
        g.nodes[id] = e.name;
    }
    for (const auto& [id, f] : graph.flows) {
        EntityEdge edge{f.initiator_id, f.acceptor_id, id, {}};
        if (auto it = by_flow.find(id); it != by_flow.end()) {
            edge.technique_ids = it->second->technique_ids;
        }
        g.edges.push_back(std::move(edge));
    }
    return g;
}

std::string_view to_string(PathSource source)
{
    return source == PathSource::Enumerated ? "enumerated" : "llm";
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

namespace {

struct Walk {
    const EntityGraph& g;
    const std::string& target;
    std::size_t max_depth;
    std::map<std::string, std::vector<std::string>> succ;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    std::vector<AttackPath> out;

    void visit(const std::string& node)
    {
        if (node == target) {
            AttackPath p;
            p.node_sequence = stack;
            for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
                p.steps.push_back({stack[i], stack[i + 1], g.techniques(stack[i], stack[i + 1]), {}});
            }
            out.push_back(std::move(p));
            return;
        }
        if (stack.size() - 1 == max_depth) {
            return;
        }
        for (const auto& next : succ[node]) {
            if (on_stack.contains(next)) {
                continue;
            }
            stack.push_back(next);
            on_stack.insert(next);
            visit(next);
            on_stack.erase(next);
            stack.pop_back();
        }
    }
};

} // namespace

std::vector<AttackPath> enumerate_paths(const EntityGraph& g, std::string_view start, std::string_view target,
                                        std::size_t max_depth)
{
    const std::string s = g.resolve(start);
    const std::string t = g.resolve(target);
    if (s == t) {
        fail(ErrorCode::InvalidArgument, "start and target are the same entity '" + s + "'");
    }
    Walk w{g, t, max_depth, {}, {s}, {s}, {}};
    for (const auto& [id, name] : g.nodes) {
        w.succ[id] = g.successors(id);
    }
    if (max_depth > 0) {
        w.visit(s);
    }
    // Successors are visited in ascending order, so the DFS already emits
    // paths lexicographically; the sort keeps that an explicit guarantee.
    std::sort(w.out.begin(), w.out.end(),
              [](const AttackPath& a, const AttackPath& b) { return a.node_sequence < b.node_sequence; });
    return std::move(w.out);
}

// ---------------------------------------------------------------------------
// Prompt
// ---------------------------------------------------------------------------

namespace {

std::string join_ids(const TechniqueSet& ids)
{
    if (ids.empty()) {
        return "(none)";
    }
    std::string out;
    for (const auto& id : ids) {
        out += (out.empty() ? "" : ", ") + id.str();
    }
    return out;
}

} // namespace

std::string build_asset_prompt(const EntityGraph& g, std::string_view start, std::string_view target,
                               const PromptTemplates& templates)
{
    const std::string s = g.resolve(start);
    const std::string t = g.resolve(target);
    if (s == t) {
        fail(ErrorCode::InvalidArgument, "start and target are the same entity '" + s + "'");
    }
    std::ostringstream out;
    out << "| Initiator | Acceptor | MITRE ATT&CK Techniques |\n";
    out << "|-----------|----------|-------------------------|\n";
    for (const auto& e : g.edges) {
        out << "| " << g.name(e.from) << " | " << g.name(e.to) << " | " << join_ids(e.technique_ids) << " |\n";
    }
    out << "\n" << templates.asset_instructions << "\n\n";
    std::string query = text::replace_all(templates.asset_query, "{target}", g.name(t));
    query = text::replace_all(std::move(query), "{start}", g.name(s));
    out << query << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Reply parsing
// ---------------------------------------------------------------------------

namespace {

const std::string kArrow = "\xE2\x86\x92"; // U+2192

std::string strip_tags(std::string_view s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '<') {
            const auto close = s.find('>', i);
            const auto tag = text::lower(s.substr(i, close == std::string_view::npos ? 0 : close - i + 1));
            if (close != std::string_view::npos && (tag.starts_with("<br") || tag.starts_with("<li") ||
                                                    tag.starts_with("</li") || tag.starts_with("<ol") ||
                                                    tag.starts_with("</ol") || tag.starts_with("<p") ||
                                                    tag.starts_with("</p"))) {
                out.push_back(' ');
                i = close;
                continue;
            }
        }
        out.push_back(s[i]);
    }
    return out;
}

std::string clean_name(std::string_view s)
{
    std::string out = strip_tags(s);
    out = text::replace_all(std::move(out), "**", "");
    out = text::replace_all(std::move(out), "`", "");
    return std::string(text::trim(out));
}

std::string normalize_arrows(std::string s)
{
    for (const char* a : {"->", "=>", "\xE2\x87\x92", "\xE2\x9E\x9D", "\xE2\x9E\x94"}) {
        s = text::replace_all(std::move(s), a, kArrow);
    }
    return s;
}

bool has_arrow(std::string_view cell)
{
    return normalize_arrows(std::string(cell)).find(kArrow) != std::string::npos;
}

std::vector<std::string> split_cells(std::string_view line)
{
    auto body = text::trim(line);
    if (body.starts_with('|')) {
        body.remove_prefix(1);
    }
    if (body.ends_with('|')) {
        body.remove_suffix(1);
    }
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || (body[i] == '|' && (i == 0 || body[i - 1] != '\\'))) {
            cells.emplace_back(text::trim(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    return cells;
}

bool is_separator(const std::vector<std::string>& cells)
{
    return std::all_of(cells.begin(), cells.end(), [](const std::string& c) {
        return !c.empty() && c.find_first_not_of(":- ") == std::string::npos;
    });
}

// Splits "1. a 2. b" into numbered steps; numbers must run 1, 2, 3, ...
std::vector<std::string> split_steps(std::string_view cell)
{
    const std::string s = strip_tags(cell);
    std::vector<std::size_t> starts;
    std::vector<std::size_t> bodies;
    std::size_t from = 0;
    for (int k = 1;; ++k) {
        const std::string marker = std::to_string(k) + ".";
        std::size_t found = std::string::npos;
        for (std::size_t p = s.find(marker, from); p != std::string::npos; p = s.find(marker, p + 1)) {
            const bool left_ok = p == 0 || std::isspace(static_cast<unsigned char>(s[p - 1]));
            const std::size_t after = p + marker.size();
            const bool right_ok = after == s.size() || std::isspace(static_cast<unsigned char>(s[after]));
            if (left_ok && right_ok) {
                found = p;
                break;
            }
        }
        if (found == std::string::npos) {
            break;
        }
        starts.push_back(found);
        bodies.push_back(found + marker.size());
        from = found + marker.size();
    }
    std::vector<std::string> steps;
    if (starts.empty()) {
        const auto whole = text::trim(s);
        if (!whole.empty()) {
            steps.emplace_back(whole);
        }
        return steps;
    }
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : s.size();
        steps.emplace_back(text::trim(std::string_view(s).substr(bodies[i], end - bodies[i])));
    }
    return steps;
}

std::optional<std::string> fuzzy_match(const EntityGraph& g, const std::string& name)
{
    try {
        return g.resolve(name);
    } catch (const Error&) {
    }
    const std::string folded = text::fold_name(name);
    if (folded.empty()) {
        return std::nullopt;
    }
    std::vector<std::string> hits;
    for (const auto& [id, nm] : g.nodes) {
        const std::string f = text::fold_name(nm);
        if (f.starts_with(folded) || folded.starts_with(f)) {
            hits.push_back(id);
        }
    }
    if (hits.size() == 1) {
        return hits.front();
    }
    return std::nullopt;
}

} // namespace

LlmPaths parse_path_table(std::string_view reply, const EntityGraph& g, const KnowledgeBase& kb)
{
    LlmPaths out;
    std::optional<std::size_t> path_col;
    std::optional<std::size_t> steps_col;
    for (const auto& line : text::split_lines(reply)) {
        if (!text::trim(line).starts_with('|')) {
            continue;
        }
        const auto cells = split_cells(line);
        if (cells.empty() || is_separator(cells)) {
            continue;
        }
        std::optional<std::size_t> arrow_col;
        for (std::size_t i = 0; i < cells.size() && !arrow_col; ++i) {
            if (has_arrow(cells[i])) {
                arrow_col = i;
            }
        }
        if (!arrow_col) {
            // Header row: remember which columns hold paths and steps.
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const auto l = text::lower(cells[i]);
                if (l.find("path") != std::string::npos && !path_col) {
                    path_col = i;
                } else if (l.find("step") != std::string::npos && !steps_col) {
                    steps_col = i;
                }
            }
            continue;
        }
        const std::size_t pc = (path_col && *path_col < cells.size() && has_arrow(cells[*path_col])) ? *path_col
                                                                                                      : *arrow_col;
        std::size_t sc = pc + 1;
        if (steps_col && *steps_col < cells.size() && *steps_col != pc) {
            sc = *steps_col;
        }

        AttackPath path;
        path.source = PathSource::Llm;
        const std::string arrows = normalize_arrows(strip_tags(cells[pc]));
        std::size_t begin = 0;
        while (true) {
            const auto at = arrows.find(kArrow, begin);
            const std::string name = clean_name(std::string_view(arrows).substr(begin, at == std::string::npos
                                                                                           ? std::string::npos
                                                                                           : at - begin));
            if (!name.empty()) {
                if (auto id = fuzzy_match(g, name)) {
                    path.node_sequence.push_back(*id);
                } else {
                    path.node_sequence.push_back(name);
                    path.unmatched_nodes.push_back(name);
                    out.warnings.push_back("path node '" + name + "' does not match any entity");
                }
            }
            if (at == std::string::npos) {
                break;
            }
            begin = at + kArrow.size();
        }
        if (path.node_sequence.size() < 2) {
            continue;
        }
        if (sc < cells.size()) {
            for (auto& step_text : split_steps(cells[sc])) {
                const auto found = extract_technique_ids(step_text);
                for (const auto& m : found.malformed) {
                    out.warnings.push_back("ignored malformed technique id '" + m + "'");
                }
                PathStep step;
                step.technique_ids = validate_against_kb(found.ids, kb, true, out.warnings);
                step.narrative = std::move(step_text);
                path.steps.push_back(std::move(step));
            }
        }
        out.paths.push_back(std::move(path));
    }
    if (out.paths.empty()) {
        fail(ErrorCode::UnparseableResponse, "reply contains no attack-path table rows");
    }
    return out;
}

LlmPaths llm_attack_paths(const std::string& prompt, const EntityGraph& g, Gateway& gateway, const KnowledgeBase& kb,
                          const PromptTemplates& templates)
{
    CompletionRequest req;
    req.system_text = std::string(kAnalystPersona);
    req.user_text = prompt;
    auto reply = gateway.complete(req, "paths");
    std::vector<Exchange> transcripts{{flatten_prompt(req), reply.text}};
    try {
        LlmPaths out = parse_path_table(reply.text, g, kb);
        out.transcripts = std::move(transcripts);
        return out;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UnparseableResponse) {
            throw;
        }
    }
    req.user_text = prompt + "\n" + templates.reprompt + "\n";
    reply = gateway.complete(req, "paths:reprompt");
    transcripts.push_back({flatten_prompt(req), reply.text});
    try {
        LlmPaths out = parse_path_table(reply.text, g, kb);
        out.warnings.insert(out.warnings.begin(), "first reply not parseable, reprompted");
        out.transcripts = std::move(transcripts);
        return out;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UnparseableResponse) {
            fail(ErrorCode::UnparseableResponse, std::string("attack paths: reply not parseable after reprompt: ") +
                                                     e.what());
        }
        throw;
    }
}

// ---------------------------------------------------------------------------
// Cross-check
// ---------------------------------------------------------------------------

std::string_view to_string(CrossVerdict verdict)
{
    switch (verdict) {
    case CrossVerdict::Present: return "present";
    case CrossVerdict::OffGraphHop: return "off-graph hop";
    case CrossVerdict::Unmatched: return "unmatched";
    case CrossVerdict::Absent: return "absent";
    }
    return "absent";
}

CrossCheckReport cross_check(const std::vector<AttackPath>& llm_paths, const std::vector<AttackPath>& enumerated,
                             const EntityGraph& g)
{
    std::set<std::vector<std::string>> known;
    for (const auto& p : enumerated) {
        known.insert(p.node_sequence);
    }
    CrossCheckReport report;
    for (auto v : {CrossVerdict::Present, CrossVerdict::OffGraphHop, CrossVerdict::Unmatched, CrossVerdict::Absent}) {
        report.summary[v] = 0;
    }
    for (const auto& p : llm_paths) {
        CrossCheckEntry entry;
        entry.node_sequence = p.node_sequence;
        for (const auto& n : p.node_sequence) {
            if (!g.nodes.contains(n)) {
                entry.unmatched_nodes.push_back(n);
            }
        }
        for (std::size_t i = 0; i + 1 < p.node_sequence.size(); ++i) {
            const auto& a = p.node_sequence[i];
            const auto& b = p.node_sequence[i + 1];
            if (g.nodes.contains(a) && g.nodes.contains(b) && !g.has_edge(a, b)) {
                entry.off_graph_hops.emplace_back(a, b);
            }
        }
        if (!entry.unmatched_nodes.empty()) {
            entry.verdict = CrossVerdict::Unmatched;
        } else if (!entry.off_graph_hops.empty()) {
            entry.verdict = CrossVerdict::OffGraphHop;
        } else if (known.contains(p.node_sequence)) {
            entry.verdict = CrossVerdict::Present;
        } else {
            entry.verdict = CrossVerdict::Absent;
        }
        ++report.summary[entry.verdict];
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace tmf
