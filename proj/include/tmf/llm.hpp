#pragma once

// Chat-completion gateway: a remote OpenAI-compatible provider, a scripted
// provider for offline runs, retry with backoff, and a run transcript.

#include "tmf/net.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace tmf {

struct CompletionRequest {
    std::optional<std::string> system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string model_tag; // empty: the gateway's default model

    void validate() const; // InvalidArgument
};

struct CompletionResponse {
    std::string text;
    std::string provider_tag;
    std::int64_t latency_ms = 0;
};

class Provider {
public:
    virtual ~Provider() = default;
    /// Must be safe to call concurrently.
    virtual CompletionResponse complete(const CompletionRequest& req) = 0;
    virtual std::string tag() const = 0;
};

/// Text the scripted provider matches against: system text (if any), a
/// blank line, then the user text.
std::string flatten_prompt(const CompletionRequest& req);

struct ScriptRule {
    std::vector<std::string> match; // all substrings must occur
    std::string response;
};

/// Closed-world provider for tests and offline runs: the first rule whose
/// substrings all occur in the prompt supplies the response.
class ScriptedProvider final : public Provider {
public:
    struct Call {
        std::string prompt;
        std::optional<std::size_t> rule; // index of the rule that fired
    };

    explicit ScriptedProvider(std::vector<ScriptRule> rules);

    CompletionResponse complete(const CompletionRequest& req) override; // UnmatchedPrompt
    std::string tag() const override { return "scripted"; }

    std::vector<Call> calls() const;
    std::size_t fired(std::size_t rule_index) const;
    const std::vector<ScriptRule>& rules() const noexcept { return rules_; }

private:
    std::vector<ScriptRule> rules_;
    mutable std::mutex mu_;
    std::vector<Call> calls_;
};

std::unique_ptr<ScriptedProvider> script_provider(std::vector<ScriptRule> rules);

/// Rules file: [{"match": "..." | ["...", ...], "response": "..."}, ...].
std::vector<ScriptRule> parse_script_rules(std::string_view json_text);
std::vector<ScriptRule> load_script_rules(const std::filesystem::path& path);

/// POSTs to `<base_url>/chat/completions`.
class RemoteProvider final : public Provider {
public:
    RemoteProvider(net::Endpoint endpoint, std::string default_model);

    CompletionResponse complete(const CompletionRequest& req) override;
    std::string tag() const override { return "remote:" + default_model_; }

private:
    net::Endpoint endpoint_;
    std::string default_model_;
};

struct RetryPolicy {
    int max_retries = 3;
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000), std::chrono::milliseconds(2000),
                                                   std::chrono::milliseconds(4000)};

    /// Wait before retry number `retry` (0-based); the last entry repeats.
    std::chrono::milliseconds delay(int retry) const;
};

struct TranscriptEntry {
    std::string label;
    std::string prompt;
    std::optional<std::string> response;
    std::optional<std::string> error;
    std::string provider_tag;
    int attempts = 0;
};

/// Append-only, thread-safe.
class Transcript {
public:
    void append(TranscriptEntry entry);
    std::vector<TranscriptEntry> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<TranscriptEntry> entries_;
};

/// JSON array of entries, in call order.
std::string transcript_to_json(const std::vector<TranscriptEntry>& entries);

struct GatewayConfig {
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::string default_model = "gpt-4o";
};

class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway(std::shared_ptr<Provider> provider, GatewayConfig cfg = {}, Sleeper sleeper = {});

    /// Retries Timeout and RateLimited per the policy; every call appends
    /// exactly one transcript entry, on success or failure.
    CompletionResponse complete(CompletionRequest req, std::string_view label = {});

    Transcript& transcript() noexcept { return transcript_; }
    const Transcript& transcript() const noexcept { return transcript_; }
    const GatewayConfig& config() const noexcept { return cfg_; }
    std::size_t retries() const;
    std::size_t peak_in_flight() const;

private:
    std::shared_ptr<Provider> provider_;
    GatewayConfig cfg_;
    Sleeper sleeper_;
    Transcript transcript_;
    std::counting_semaphore<> slots_;
    mutable std::mutex stats_mu_;
    std::size_t retries_ = 0;
    std::size_t in_flight_ = 0;
    std::size_t peak_in_flight_ = 0;
};

/// System preamble for the asset-centric path analysis.
extern const std::string_view kAnalystPersona;

} // namespace tmf
