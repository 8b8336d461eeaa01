#include "tmf/net.hpp"

#include "tmf/error.hpp"

#include <httplib.h>

#include <atomic>

namespace tmf::net {

namespace {

std::atomic<bool> g_offline{false};
std::atomic<std::size_t> g_attempts{0};

struct SplitUrl {
    std::string origin; // scheme://host[:port]
    std::string prefix; // path below the origin, no trailing slash
};

SplitUrl split(const std::string& base_url)
{
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        fail(ErrorCode::InvalidArgument, "base URL '" + base_url + "' has no scheme");
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = base_url.substr(0, path_start);
    if (path_start != std::string::npos) {
        out.prefix = base_url.substr(path_start);
        while (!out.prefix.empty() && out.prefix.back() == '/') {
            out.prefix.pop_back();
        }
    }
    return out;
}

} // namespace

void set_offline(bool offline) { g_offline = offline; }

bool offline() { return g_offline; }

std::size_t request_attempts() { return g_attempts; }

Response post_json(const Endpoint& endpoint, const std::string& path, const std::string& body)
{
    ++g_attempts;
    if (g_offline) {
        fail(ErrorCode::NetworkDenied, "offline mode forbids POST " + endpoint.base_url + path);
    }
    const SplitUrl url = split(endpoint.base_url);
    httplib::Client client(url.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    httplib::Headers headers;
    if (!endpoint.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + endpoint.api_key);
    }
    auto result = client.Post(url.prefix + path, headers, body, "application/json");
    if (!result) {
        const auto err = result.error();
        const std::string what = "POST " + endpoint.base_url + path + ": " + httplib::to_string(err);
        if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
            fail(ErrorCode::Timeout, what);
        }
        fail(ErrorCode::HttpError, what);
    }
    return {result->status, result->body};
}

} // namespace tmf::net
