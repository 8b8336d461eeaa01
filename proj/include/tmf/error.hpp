#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmf {

enum class ErrorCode {
    MalformedId,
    InvalidArgument,
    SyntaxError,
    DanglingReference,
    DuplicateId,
    SelfLoopFlow,
    SchemaError,
    ConflictingEntityDescription,
    EmptyBundle,
    UnknownTechnique,
    DimensionMismatch,
    ZeroVector,
    EmbedderError,
    IoError,
    FormatVersionMismatch,
    EmbedderTagMismatch,
    Timeout,
    RateLimited,
    HttpError,
    EmptyResponse,
    UnmatchedPrompt,
    NetworkDenied,
    UnparseableResponse,
    MissingPrediction,
    SourceUnavailable,
    UnknownFlowInResults,
    UnknownEntity,
    EmptyEvaluation,
};

std::string_view to_string(ErrorCode code);

// True for failures caused by the environment (providers, files, network)
// rather than by invalid user input.
bool is_environmental(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

} // namespace tmf
