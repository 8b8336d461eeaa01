#include "tmf/error.hpp"

namespace tmf {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MalformedId: return "MalformedId";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::SelfLoopFlow: return "SelfLoopFlow";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConflictingEntityDescription: return "ConflictingEntityDescription";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::UnknownTechnique: return "UnknownTechnique";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmbedderError: return "EmbedderError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::EmbedderTagMismatch: return "EmbedderTagMismatch";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::UnmatchedPrompt: return "UnmatchedPrompt";
    case ErrorCode::NetworkDenied: return "NetworkDenied";
    case ErrorCode::UnparseableResponse: return "UnparseableResponse";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::SourceUnavailable: return "SourceUnavailable";
    case ErrorCode::UnknownFlowInResults: return "UnknownFlowInResults";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    }
    return "Unknown";
}

bool is_environmental(ErrorCode code)
{
    switch (code) {
    case ErrorCode::EmbedderError:
    case ErrorCode::IoError:
    case ErrorCode::Timeout:
    case ErrorCode::RateLimited:
    case ErrorCode::HttpError:
    case ErrorCode::EmptyResponse:
    case ErrorCode::NetworkDenied:
    case ErrorCode::SourceUnavailable:
    case ErrorCode::UnmatchedPrompt:
    case ErrorCode::UnparseableResponse:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace tmf
