#pragma once

// Data-flow-diagram ingestion: a line-oriented DSL and service-package JSON
// records, both producing a validated DfdGraph.
//
// DSL, one directive per line, `#` starts a comment:
//
//   diagram name="..."
//   boundary <id> name="..."
//   entity <id> kind=process|external|datastore name="..." [boundary=<id>] [desc="..."]
//   function <entityId> name="..." [desc="..."]
//   process <entityId> function="..." name="..." [desc="..."]
//   flow <id> from=<entityId> to=<entityId> name="..." [auth=yes|no|unknown]
//        [encrypt=yes|no|unknown] [conf=|integ=|avail=low|moderate|high|unknown] [def="..."]
//
// Quoted values accept \" and \\ escapes.

#include "tmf/error.hpp"
#include "tmf/model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

struct TrustBoundary {
    std::string id;
    std::string name;

    bool operator==(const TrustBoundary&) const = default;
};

struct DfdGraph {
    std::string graph_id;
    std::map<std::string, Entity> entities;
    std::map<std::string, TrustBoundary> boundaries;
    std::map<std::string, DataFlowRecord> flows;

    const Entity& entity(const std::string& id) const;
    const DataFlowRecord& flow(const std::string& id) const;
    /// True when the flow's endpoints sit in different trust boundaries
    /// (an endpoint with no boundary counts as its own domain).
    bool crosses_boundary(const DataFlowRecord& flow) const;

    bool operator==(const DfdGraph&) const = default;
};

/// Checks referential integrity; throws DanglingReference / SelfLoopFlow /
/// SchemaError (no entities).
void validate(const DfdGraph& graph);

/// Error raised by the DSL parser; position is 1-based.
class DfdSyntaxError : public Error {
public:
    DfdSyntaxError(ErrorCode code, std::size_t line, std::size_t column, const std::string& message);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

DfdGraph parse_dfd(std::string_view source, std::string graph_id = "diagram");
DfdGraph load_dfd(const std::filesystem::path& path);

/// Renders a graph back to DSL text. parse_dfd(emit_dfd(g)) reproduces g.
std::string emit_dfd(const DfdGraph& graph);

// ---------------------------------------------------------------------------
// Service packages
// ---------------------------------------------------------------------------

struct PackageEntity {
    std::string name;
    ElementKind kind = ElementKind::Process;
    std::string description;
    std::optional<std::string> boundary; // trust-boundary name
    std::vector<FunctionalObject> functions;
};

struct PackageFlow {
    std::string id;
    std::string name;
    std::string definition;
    PackageEntity initiator;
    PackageEntity acceptor;
    SecurityAttributes security;
};

struct ServicePackage {
    std::string package_id;
    std::string name;
    std::vector<PackageFlow> flows;
};

/// Throws SchemaError whose message starts with the JSON path of the
/// offending field, e.g. "flows[1].acceptor: missing".
ServicePackage parse_service_package(std::string_view json_text);
ServicePackage load_service_package(const std::filesystem::path& path);

/// Entities are deduplicated by name; throws ConflictingEntityDescription
/// when one name is used with two kinds.
DfdGraph to_graph(const ServicePackage& package);

/// Loads a `.json` service package or a DSL file, by extension.
DfdGraph load_architecture(const std::filesystem::path& path);

} // namespace tmf
