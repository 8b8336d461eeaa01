#include "tmf/dfd.hpp"

#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <optional>
#include <set>
#include <sstream>

namespace tmf {

using nlohmann::json;

const Entity& DfdGraph::entity(const std::string& id) const
{
    auto it = entities.find(id);
    if (it == entities.end()) {
        fail(ErrorCode::UnknownEntity, "no entity '" + id + "'");
    }
    return it->second;
}

const DataFlowRecord& DfdGraph::flow(const std::string& id) const
{
    auto it = flows.find(id);
    if (it == flows.end()) {
        fail(ErrorCode::DanglingReference, "no flow '" + id + "'");
    }
    return it->second;
}

bool DfdGraph::crosses_boundary(const DataFlowRecord& f) const
{
    const auto& from = entity(f.initiator_id);
    const auto& to = entity(f.acceptor_id);
    if (!from.boundary_id && !to.boundary_id) {
        return true;
    }
    return from.boundary_id != to.boundary_id;
}

void validate(const DfdGraph& graph)
{
    if (graph.entities.empty()) {
        fail(ErrorCode::SchemaError, "graph '" + graph.graph_id + "' has no entities");
    }
    for (const auto& [id, e] : graph.entities) {
        if (e.boundary_id && !graph.boundaries.contains(*e.boundary_id)) {
            fail(ErrorCode::DanglingReference,
                 "entity '" + id + "' references unknown boundary '" + *e.boundary_id + "'");
        }
        for (const auto& fn : e.functions) {
            if (fn.name.empty()) {
                fail(ErrorCode::SchemaError, "entity '" + id + "' has a function with an empty name");
            }
        }
    }
    for (const auto& [id, f] : graph.flows) {
        for (const auto* ref : {&f.initiator_id, &f.acceptor_id}) {
            if (!graph.entities.contains(*ref)) {
                fail(ErrorCode::DanglingReference, "flow '" + id + "' references unknown entity '" + *ref + "'");
            }
        }
        if (f.initiator_id == f.acceptor_id) {
            fail(ErrorCode::SelfLoopFlow, "flow '" + id + "' starts and ends at '" + f.initiator_id + "'");
        }
    }
}

DfdSyntaxError::DfdSyntaxError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message)
    : Error(code, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column)
{
}

// ---------------------------------------------------------------------------
// DSL parsing
// ---------------------------------------------------------------------------

namespace {

struct Token {
    std::string text;
    std::size_t column = 0;
};

struct Attribute {
    std::string value;
    std::size_t column = 0;
};

struct Directive {
    std::size_t line = 0;
    Token keyword;
    std::optional<Token> subject;
    std::map<std::string, Attribute> attributes;
};

class LineParser {
public:
    LineParser(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    std::optional<Directive> parse()
    {
        skip_space();
        if (at_end() || peek() == '#') {
            return std::nullopt;
        }
        Directive d;
        d.line = line_no_;
        d.keyword = bare_word();
        skip_space();
        while (!at_end() && peek() != '#') {
            const std::size_t col = pos_ + 1;
            Token word = bare_word();
            if (!at_end() && peek() == '=') {
                ++pos_;
                Attribute attr;
                attr.column = pos_ + 1;
                attr.value = at_end() || peek() != '"' ? bare_word().text : quoted();
                if (!d.attributes.emplace(word.text, attr).second) {
                    error(col, "duplicate attribute '" + word.text + "'");
                }
            } else if (!d.subject && d.attributes.empty()) {
                d.subject = word;
            } else {
                error(col, "unexpected token '" + word.text + "'");
            }
            skip_space();
        }
        return d;
    }

    [[noreturn]] void error(std::size_t column, const std::string& message) const
    {
        throw DfdSyntaxError(ErrorCode::SyntaxError, line_no_, column, message);
    }

private:
    bool at_end() const { return pos_ >= line_.size(); }
    char peek() const { return line_[pos_]; }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
            ++pos_;
        }
    }

    Token bare_word()
    {
        Token t;
        t.column = pos_ + 1;
        while (!at_end() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != '=' &&
               peek() != '"' && peek() != '#') {
            t.text.push_back(peek());
            ++pos_;
        }
        if (t.text.empty()) {
            error(t.column, at_end() ? "unexpected end of line" : std::string("unexpected character '") + peek() + "'");
        }
        return t;
    }

    std::string quoted()
    {
        const std::size_t open = pos_ + 1;
        ++pos_;
        std::string out;
        while (!at_end()) {
            char c = peek();
            ++pos_;
            if (c == '"') {
                return out;
            }
            if (c == '\\' && !at_end()) {
                char next = peek();
                ++pos_;
                if (next == 'n') {
                    out.push_back('\n');
                } else {
                    out.push_back(next);
                }
                continue;
            }
            out.push_back(c);
        }
        error(open, "unterminated string");
    }

    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

struct Reference {
    std::string target;
    std::size_t line;
    std::size_t column;
};

class DirectiveReader {
public:
    explicit DirectiveReader(const Directive& d) : d_(d) {}

    [[noreturn]] void error(ErrorCode code, std::size_t column, const std::string& message) const
    {
        throw DfdSyntaxError(code, d_.line, column, message);
    }

    const Token& subject(std::string_view what) const
    {
        if (!d_.subject) {
            error(ErrorCode::SyntaxError, d_.keyword.column, "'" + d_.keyword.text + "' requires " + std::string(what));
        }
        return *d_.subject;
    }

    void allow(std::initializer_list<std::string_view> keys) const
    {
        for (const auto& [key, attr] : d_.attributes) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                error(ErrorCode::SyntaxError, attr.column, "unknown attribute '" + key + "' for '" + d_.keyword.text + "'");
            }
        }
    }

    const Attribute& required(const std::string& key) const
    {
        auto it = d_.attributes.find(key);
        if (it == d_.attributes.end()) {
            error(ErrorCode::SyntaxError, d_.keyword.column, "'" + d_.keyword.text + "' requires " + key + "=");
        }
        return it->second;
    }

    const Attribute* optional(const std::string& key) const
    {
        auto it = d_.attributes.find(key);
        return it == d_.attributes.end() ? nullptr : &it->second;
    }

    template <typename F>
    auto convert(const Attribute& attr, F&& parse) const
    {
        try {
            return parse(attr.value);
        } catch (const Error& e) {
            error(ErrorCode::SyntaxError, attr.column, e.what());
        }
    }

    const Directive& directive() const { return d_; }

private:
    const Directive& d_;
};

} // namespace

DfdGraph parse_dfd(std::string_view source, std::string graph_id)
{
    if (source.size() >= 3 && source.substr(0, 3) == "\xEF\xBB\xBF") {
        source.remove_prefix(3);
    }

    DfdGraph g;
    g.graph_id = std::move(graph_id);

    std::map<std::string, std::size_t> entity_lines;
    std::vector<std::pair<std::string, Reference>> boundary_refs;  // entity id -> boundary
    std::vector<std::pair<std::string, Reference>> endpoint_refs;  // flow id -> entity
    std::vector<std::pair<Reference, std::pair<std::string, FunctionalObject>>> pending_functions;
    struct PendingProcess {
        Reference entity;
        std::string function;
        std::size_t function_column;
        ProcessDescription process;
    };
    std::vector<PendingProcess> pending_processes;
    std::size_t last_line = 0;

    const auto lines = text::split_lines(source);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        last_line = line_no;
        LineParser lp(lines[i], line_no);
        auto parsed = lp.parse();
        if (!parsed) {
            continue;
        }
        const Directive& d = *parsed;
        DirectiveReader r(d);
        const std::string& kw = d.keyword.text;

        if (kw == "diagram") {
            r.allow({"name"});
            g.graph_id = r.required("name").value;
        } else if (kw == "boundary") {
            r.allow({"name"});
            const Token& id = r.subject("an id");
            TrustBoundary b{id.text, r.required("name").value};
            if (!g.boundaries.emplace(id.text, b).second) {
                r.error(ErrorCode::DuplicateId, id.column, "boundary '" + id.text + "' already declared");
            }
        } else if (kw == "entity") {
            r.allow({"kind", "name", "boundary", "desc"});
            const Token& id = r.subject("an id");
            Entity e;
            e.id = id.text;
            e.kind = r.convert(r.required("kind"), parse_element_kind);
            e.name = r.required("name").value;
            if (const auto* desc = r.optional("desc")) {
                e.description = desc->value;
            }
            if (const auto* b = r.optional("boundary")) {
                e.boundary_id = b->value;
                boundary_refs.push_back({e.id, Reference{b->value, line_no, b->column}});
            }
            if (!g.entities.emplace(e.id, e).second) {
                r.error(ErrorCode::DuplicateId, id.column, "entity '" + id.text + "' already declared");
            }
            entity_lines[e.id] = line_no;
        } else if (kw == "function") {
            r.allow({"name", "desc"});
            const Token& owner = r.subject("an entity id");
            FunctionalObject fn;
            fn.name = r.required("name").value;
            if (fn.name.empty()) {
                r.error(ErrorCode::SyntaxError, r.required("name").column, "function name is empty");
            }
            if (const auto* desc = r.optional("desc")) {
                fn.description = desc->value;
            }
            pending_functions.push_back({Reference{owner.text, line_no, owner.column}, {owner.text, fn}});
        } else if (kw == "process") {
            r.allow({"function", "name", "desc"});
            const Token& owner = r.subject("an entity id");
            PendingProcess p;
            p.entity = Reference{owner.text, line_no, owner.column};
            p.function = r.required("function").value;
            p.function_column = r.required("function").column;
            p.process.name = r.required("name").value;
            if (p.process.name.empty()) {
                r.error(ErrorCode::SyntaxError, r.required("name").column, "process name is empty");
            }
            if (const auto* desc = r.optional("desc")) {
                p.process.description = desc->value;
            }
            pending_processes.push_back(std::move(p));
        } else if (kw == "flow") {
            r.allow({"from", "to", "name", "auth", "encrypt", "conf", "integ", "avail", "def"});
            const Token& id = r.subject("an id");
            DataFlowRecord f;
            f.id = id.text;
            const Attribute& from = r.required("from");
            const Attribute& to = r.required("to");
            f.initiator_id = from.value;
            f.acceptor_id = to.value;
            f.name = r.required("name").value;
            if (const auto* a = r.optional("auth")) {
                f.security.requires_authentication = r.convert(*a, parse_tri_state);
            }
            if (const auto* a = r.optional("encrypt")) {
                f.security.requires_encryption = r.convert(*a, parse_tri_state);
            }
            if (const auto* a = r.optional("conf")) {
                f.security.confidentiality = r.convert(*a, parse_security_level);
            }
            if (const auto* a = r.optional("integ")) {
                f.security.integrity = r.convert(*a, parse_security_level);
            }
            if (const auto* a = r.optional("avail")) {
                f.security.availability = r.convert(*a, parse_security_level);
            }
            if (const auto* a = r.optional("def")) {
                f.definition = a->value;
            }
            if (f.initiator_id == f.acceptor_id) {
                r.error(ErrorCode::SelfLoopFlow, to.column, "flow '" + f.id + "' connects '" + f.initiator_id + "' to itself");
            }
            endpoint_refs.push_back({f.id, Reference{from.value, line_no, from.column}});
            endpoint_refs.push_back({f.id, Reference{to.value, line_no, to.column}});
            if (!g.flows.emplace(f.id, f).second) {
                r.error(ErrorCode::DuplicateId, id.column, "flow '" + id.text + "' already declared");
            }
        } else {
            lp.error(d.keyword.column, "unknown directive '" + kw + "'");
        }
    }

    for (const auto& [owner, ref] : boundary_refs) {
        if (!g.boundaries.contains(ref.target)) {
            throw DfdSyntaxError(ErrorCode::DanglingReference, ref.line, ref.column,
                                 "entity '" + owner + "' references undeclared boundary '" + ref.target + "'");
        }
    }
    for (const auto& [owner, ref] : endpoint_refs) {
        if (!g.entities.contains(ref.target)) {
            throw DfdSyntaxError(ErrorCode::DanglingReference, ref.line, ref.column,
                                 "flow '" + owner + "' references undeclared entity '" + ref.target + "'");
        }
    }
    for (auto& [ref, item] : pending_functions) {
        auto it = g.entities.find(ref.target);
        if (it == g.entities.end()) {
            throw DfdSyntaxError(ErrorCode::DanglingReference, ref.line, ref.column,
                                 "function declared on undeclared entity '" + ref.target + "'");
        }
        it->second.functions.push_back(item.second);
    }
    for (auto& p : pending_processes) {
        auto it = g.entities.find(p.entity.target);
        if (it == g.entities.end()) {
            throw DfdSyntaxError(ErrorCode::DanglingReference, p.entity.line, p.entity.column,
                                 "process declared on undeclared entity '" + p.entity.target + "'");
        }
        auto& fns = it->second.functions;
        auto fn = std::find_if(fns.begin(), fns.end(), [&](const FunctionalObject& f) { return f.name == p.function; });
        if (fn == fns.end()) {
            throw DfdSyntaxError(ErrorCode::DanglingReference, p.entity.line, p.function_column,
                                 "entity '" + p.entity.target + "' has no function '" + p.function + "'");
        }
        fn->processes.push_back(p.process);
    }
    if (g.entities.empty()) {
        throw DfdSyntaxError(ErrorCode::SyntaxError, std::max<std::size_t>(last_line, 1), 1, "no entities declared");
    }
    validate(g);
    return g;
}

DfdGraph load_dfd(const std::filesystem::path& path)
{
    return parse_dfd(text::read_file(path), path.stem().string());
}

namespace {

std::string quote(std::string_view s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
            out.push_back(c);
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

} // namespace

std::string emit_dfd(const DfdGraph& g)
{
    std::ostringstream out;
    out << "diagram name=" << quote(g.graph_id) << "\n";
    for (const auto& [id, b] : g.boundaries) {
        out << "boundary " << id << " name=" << quote(b.name) << "\n";
    }
    for (const auto& [id, e] : g.entities) {
        out << "entity " << id << " kind=" << to_string(e.kind) << " name=" << quote(e.name);
        if (e.boundary_id) {
            out << " boundary=" << *e.boundary_id;
        }
        if (!e.description.empty()) {
            out << " desc=" << quote(e.description);
        }
        out << "\n";
        for (const auto& fn : e.functions) {
            out << "function " << id << " name=" << quote(fn.name);
            if (!fn.description.empty()) {
                out << " desc=" << quote(fn.description);
            }
            out << "\n";
            for (const auto& p : fn.processes) {
                out << "process " << id << " function=" << quote(fn.name) << " name=" << quote(p.name);
                if (!p.description.empty()) {
                    out << " desc=" << quote(p.description);
                }
                out << "\n";
            }
        }
    }
    for (const auto& [id, f] : g.flows) {
        out << "flow " << id << " from=" << f.initiator_id << " to=" << f.acceptor_id << " name=" << quote(f.name)
            << " auth=" << to_string(f.security.requires_authentication)
            << " encrypt=" << to_string(f.security.requires_encryption);
        if (f.security.confidentiality) {
            out << " conf=" << to_string(*f.security.confidentiality);
        }
        if (f.security.integrity) {
            out << " integ=" << to_string(*f.security.integrity);
        }
        if (f.security.availability) {
            out << " avail=" << to_string(*f.security.availability);
        }
        if (!f.definition.empty()) {
            out << " def=" << quote(f.definition);
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Service packages
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& message)
{
    fail(ErrorCode::SchemaError, path + ": " + message);
}

const json& member(const json& obj, const std::string& key, const std::string& path)
{
    if (!obj.is_object()) {
        schema_error(path, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        schema_error(path + "." + key, "missing");
    }
    return *it;
}

std::string string_member(const json& obj, const std::string& key, const std::string& path, bool allow_empty = true)
{
    const json& v = member(obj, key, path);
    if (!v.is_string()) {
        schema_error(path + "." + key, "expected a string");
    }
    auto s = v.get<std::string>();
    if (!allow_empty && text::trim(s).empty()) {
        schema_error(path + "." + key, "must not be empty");
    }
    return s;
}

std::string optional_string(const json& obj, const std::string& key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return {};
    }
    if (!it->is_string()) {
        schema_error(path + "." + key, "expected a string");
    }
    return it->get<std::string>();
}

template <typename T, typename F>
T parse_field(const json& v, const std::string& path, F&& parse)
{
    if (!v.is_string()) {
        schema_error(path, "expected a string");
    }
    try {
        return parse(v.get<std::string>());
    } catch (const Error& e) {
        schema_error(path, e.what());
    }
}

PackageEntity parse_package_entity(const json& j, const std::string& path)
{
    if (!j.is_object()) {
        schema_error(path, "expected an object");
    }
    PackageEntity e;
    e.name = string_member(j, "name", path, false);
    e.kind = parse_field<ElementKind>(member(j, "kind", path), path + ".kind", parse_element_kind);
    e.description = string_member(j, "description", path);
    if (auto b = optional_string(j, "boundary", path); !b.empty()) {
        e.boundary = b;
    }
    if (auto it = j.find("functions"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) {
            schema_error(path + ".functions", "expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string fpath = path + ".functions[" + std::to_string(i) + "]";
            const json& fj = (*it)[i];
            FunctionalObject fn;
            fn.name = string_member(fj, "name", fpath, false);
            fn.description = optional_string(fj, "description", fpath);
            if (auto pit = fj.find("processes"); pit != fj.end() && !pit->is_null()) {
                if (!pit->is_array()) {
                    schema_error(fpath + ".processes", "expected an array");
                }
                for (std::size_t k = 0; k < pit->size(); ++k) {
                    const std::string ppath = fpath + ".processes[" + std::to_string(k) + "]";
                    ProcessDescription p;
                    p.name = string_member((*pit)[k], "name", ppath, false);
                    p.description = optional_string((*pit)[k], "description", ppath);
                    fn.processes.push_back(std::move(p));
                }
            }
            e.functions.push_back(std::move(fn));
        }
    }
    return e;
}

SecurityAttributes parse_security(const json& obj, const std::string& path)
{
    SecurityAttributes s;
    auto it = obj.find("security");
    if (it == obj.end() || it->is_null()) {
        return s;
    }
    if (!it->is_object()) {
        schema_error(path, "expected an object");
    }
    auto tri = [&](const char* key, TriState& out) {
        if (auto f = it->find(key); f != it->end() && !f->is_null()) {
            out = parse_field<TriState>(*f, path + "." + key, parse_tri_state);
        }
    };
    auto level = [&](const char* key, std::optional<SecurityLevel>& out) {
        if (auto f = it->find(key); f != it->end() && !f->is_null()) {
            out = parse_field<SecurityLevel>(*f, path + "." + key, parse_security_level);
        } else {
            out = SecurityLevel::Unknown;
        }
    };
    tri("requires_authentication", s.requires_authentication);
    tri("requires_encryption", s.requires_encryption);
    level("confidentiality", s.confidentiality);
    level("integrity", s.integrity);
    level("availability", s.availability);
    return s;
}

} // namespace

ServicePackage parse_service_package(std::string_view json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        schema_error("$", std::string("invalid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        schema_error("$", "expected an object");
    }
    ServicePackage pkg;
    pkg.package_id = string_member(root, "package_id", "$", false);
    pkg.name = string_member(root, "name", "$");
    const json& flows = member(root, "flows", "$");
    if (!flows.is_array()) {
        schema_error("flows", "expected an array");
    }
    if (flows.empty()) {
        schema_error("flows", "a package must contain at least one flow");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const std::string path = "flows[" + std::to_string(i) + "]";
        const json& fj = flows[i];
        if (!fj.is_object()) {
            schema_error(path, "expected an object");
        }
        PackageFlow f;
        f.id = string_member(fj, "id", path, false);
        f.name = string_member(fj, "name", path, false);
        f.definition = string_member(fj, "definition", path);
        f.initiator = parse_package_entity(member(fj, "initiator", path), path + ".initiator");
        f.acceptor = parse_package_entity(member(fj, "acceptor", path), path + ".acceptor");
        f.security = parse_security(fj, path + ".security");
        if (!seen.insert(f.id).second) {
            schema_error(path + ".id", "duplicate flow id '" + f.id + "'");
        }
        if (f.initiator.name == f.acceptor.name) {
            schema_error(path, "initiator and acceptor are the same entity");
        }
        pkg.flows.push_back(std::move(f));
    }
    return pkg;
}

ServicePackage load_service_package(const std::filesystem::path& path)
{
    return parse_service_package(text::read_file(path));
}

namespace {

std::string slug(std::string_view name)
{
    std::string out;
    bool pending_sep = false;
    for (unsigned char c : name) {
        if (std::isalnum(c)) {
            if (pending_sep && !out.empty()) {
                out.push_back('_');
            }
            out.push_back(static_cast<char>(std::tolower(c)));
            pending_sep = false;
        } else {
            pending_sep = true;
        }
    }
    return out.empty() ? "entity" : out;
}

} // namespace

DfdGraph to_graph(const ServicePackage& pkg)
{
    DfdGraph g;
    g.graph_id = pkg.package_id;

    std::map<std::string, std::string> id_by_name;
    std::map<std::string, std::string> boundary_by_name;
    std::set<std::string> used_ids;

    auto unique_id = [&](const std::string& base) {
        std::string id = base;
        for (int n = 2; used_ids.contains(id); ++n) {
            id = base + "_" + std::to_string(n);
        }
        used_ids.insert(id);
        return id;
    };

    auto intern = [&](const PackageEntity& pe) -> std::string {
        std::optional<std::string> boundary_id;
        if (pe.boundary) {
            auto [it, inserted] = boundary_by_name.try_emplace(*pe.boundary);
            if (inserted) {
                it->second = "b_" + slug(*pe.boundary);
                g.boundaries.emplace(it->second, TrustBoundary{it->second, *pe.boundary});
            }
            boundary_id = it->second;
        }
        if (auto it = id_by_name.find(pe.name); it != id_by_name.end()) {
            Entity& existing = g.entities.at(it->second);
            if (existing.kind != pe.kind) {
                fail(ErrorCode::ConflictingEntityDescription,
                     "'" + pe.name + "' declared as " + std::string(to_string(existing.kind)) + " and as " +
                         std::string(to_string(pe.kind)));
            }
            if (boundary_id && existing.boundary_id && existing.boundary_id != boundary_id) {
                fail(ErrorCode::ConflictingEntityDescription, "'" + pe.name + "' placed in two trust boundaries");
            }
            if (!existing.boundary_id) {
                existing.boundary_id = boundary_id;
            }
            if (existing.description.empty()) {
                existing.description = pe.description;
            }
            for (const auto& fn : pe.functions) {
                auto same = [&](const FunctionalObject& f) { return f.name == fn.name; };
                if (std::none_of(existing.functions.begin(), existing.functions.end(), same)) {
                    existing.functions.push_back(fn);
                }
            }
            return it->second;
        }
        Entity e;
        e.id = unique_id(slug(pe.name));
        e.name = pe.name;
        e.kind = pe.kind;
        e.description = pe.description;
        e.boundary_id = boundary_id;
        e.functions = pe.functions;
        id_by_name.emplace(pe.name, e.id);
        const std::string id = e.id;
        g.entities.emplace(id, std::move(e));
        return id;
    };

    for (const auto& pf : pkg.flows) {
        DataFlowRecord f;
        f.id = pf.id;
        f.name = pf.name;
        f.definition = pf.definition;
        f.initiator_id = intern(pf.initiator);
        f.acceptor_id = intern(pf.acceptor);
        f.security = pf.security;
        g.flows.emplace(f.id, std::move(f));
    }
    validate(g);
    return g;
}

DfdGraph load_architecture(const std::filesystem::path& path)
{
    if (text::lower(path.extension().string()) == ".json") {
        return to_graph(load_service_package(path));
    }
    return load_dfd(path);
}

} // namespace tmf
