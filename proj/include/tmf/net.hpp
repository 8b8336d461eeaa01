#pragma once

// Minimal JSON-over-HTTP client used by the remote providers, with a
// process-wide switch that forbids any outbound request.

#include <chrono>
#include <cstddef>
#include <string>

namespace tmf::net {

struct Endpoint {
    std::string base_url; // e.g. "https://api.openai.com/v1"
    std::string api_key;  // sent as a bearer token when non-empty
    std::chrono::milliseconds timeout{60'000};
};

struct Response {
    int status = 0;
    std::string body;
};

/// When set, post_json throws NetworkDenied before opening a socket.
void set_offline(bool offline);
bool offline();

/// Requests attempted since process start (including denied ones).
std::size_t request_attempts();

/// POSTs `body` to base_url + path. Transport timeouts throw Timeout, other
/// transport failures throw HttpError; any HTTP status is returned.
Response post_json(const Endpoint& endpoint, const std::string& path, const std::string& body);

} // namespace tmf::net
