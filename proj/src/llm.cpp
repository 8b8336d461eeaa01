#include "tmf/llm.hpp"

#include "tmf/error.hpp"
#include "tmf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <thread>

namespace tmf {

using nlohmann::json;

const std::string_view kAnalystPersona =
    "You are an expert-level cybersecurity analyst specializing in threat modeling of transportation "
    "cyber-physical systems and industrial control networks. You reason about how an adversary moves between "
    "networked entities and you cite MITRE ATT&CK technique IDs (T#### or T####.###) for every step you "
    "describe. Answer precisely and in the format requested.";

void CompletionRequest::validate() const
{
    if (user_text.empty()) {
        fail(ErrorCode::InvalidArgument, "completion request has empty user text");
    }
    if (!(temperature >= 0.0)) {
        fail(ErrorCode::InvalidArgument, "temperature must be >= 0");
    }
    if (max_tokens < 1) {
        fail(ErrorCode::InvalidArgument, "max_tokens must be positive");
    }
}

std::string flatten_prompt(const CompletionRequest& req)
{
    if (req.system_text && !req.system_text->empty()) {
        return *req.system_text + "\n\n" + req.user_text;
    }
    return req.user_text;
}

// ---------------------------------------------------------------------------
// Scripted provider
// ---------------------------------------------------------------------------

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules) : rules_(std::move(rules)) {}

CompletionResponse ScriptedProvider::complete(const CompletionRequest& req)
{
    const std::string prompt = flatten_prompt(req);
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < rules_.size() && !hit; ++i) {
        const auto& m = rules_[i].match;
        if (std::all_of(m.begin(), m.end(), [&](const std::string& s) { return prompt.find(s) != std::string::npos; })) {
            hit = i;
        }
    }
    {
        std::lock_guard lock(mu_);
        calls_.push_back({prompt, hit});
    }
    if (!hit) {
        const std::string head = prompt.substr(0, std::min<std::size_t>(prompt.size(), 120));
        fail(ErrorCode::UnmatchedPrompt, "no scripted rule matches prompt starting \"" + text::replace_all(head, "\n", " ") + "\"");
    }
    return {rules_[*hit].response, tag(), 0};
}

std::vector<ScriptedProvider::Call> ScriptedProvider::calls() const
{
    std::lock_guard lock(mu_);
    return calls_;
}

std::size_t ScriptedProvider::fired(std::size_t rule_index) const
{
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(
        std::count_if(calls_.begin(), calls_.end(), [&](const Call& c) { return c.rule == rule_index; }));
}

std::unique_ptr<ScriptedProvider> script_provider(std::vector<ScriptRule> rules)
{
    return std::make_unique<ScriptedProvider>(std::move(rules));
}

std::vector<ScriptRule> parse_script_rules(std::string_view json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::SchemaError, std::string("rules: invalid JSON: ") + e.what());
    }
    if (!doc.is_array()) {
        fail(ErrorCode::SchemaError, "rules: expected a JSON list");
    }
    std::vector<ScriptRule> rules;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        const std::string where = "rules[" + std::to_string(i) + "]";
        if (!item.is_object() || !item.contains("match") || !item.contains("response")) {
            fail(ErrorCode::SchemaError, where + ": needs \"match\" and \"response\"");
        }
        ScriptRule rule;
        const auto& m = item["match"];
        if (m.is_string()) {
            rule.match.push_back(m.get<std::string>());
        } else if (m.is_array() && !m.empty() && std::all_of(m.begin(), m.end(), [](const json& s) { return s.is_string(); })) {
            rule.match = m.get<std::vector<std::string>>();
        } else {
            fail(ErrorCode::SchemaError, where + ".match: expected a string or a non-empty list of strings");
        }
        if (std::any_of(rule.match.begin(), rule.match.end(), [](const std::string& s) { return s.empty(); })) {
            fail(ErrorCode::SchemaError, where + ".match: empty matcher");
        }
        if (!item["response"].is_string()) {
            fail(ErrorCode::SchemaError, where + ".response: expected a string");
        }
        rule.response = item["response"].get<std::string>();
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<ScriptRule> load_script_rules(const std::filesystem::path& path)
{
    return parse_script_rules(text::read_file(path));
}

// ---------------------------------------------------------------------------
// Remote provider
// ---------------------------------------------------------------------------

RemoteProvider::RemoteProvider(net::Endpoint endpoint, std::string default_model)
    : endpoint_(std::move(endpoint)), default_model_(std::move(default_model))
{
}

CompletionResponse RemoteProvider::complete(const CompletionRequest& req)
{
    const std::string model = req.model_tag.empty() ? default_model_ : req.model_tag;
    json messages = json::array();
    if (req.system_text && !req.system_text->empty()) {
        messages.push_back({{"role", "system"}, {"content", *req.system_text}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_text}});
    const json body = {{"model", model},
                       {"messages", messages},
                       {"temperature", req.temperature},
                       {"max_tokens", req.max_tokens}};

    const auto start = std::chrono::steady_clock::now();
    const auto response = net::post_json(endpoint_, "/chat/completions", body.dump());
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();

    const std::string status = "HTTP " + std::to_string(response.status);
    if (response.status == 429) {
        fail(ErrorCode::RateLimited, "chat completion: " + status);
    }
    if (response.status == 408 || response.status == 504) {
        fail(ErrorCode::Timeout, "chat completion: " + status);
    }
    if (response.status < 200 || response.status >= 300) {
        fail(ErrorCode::HttpError, "chat completion: " + status + ": " + response.body.substr(0, 200));
    }
    std::string content;
    try {
        const json doc = json::parse(response.body);
        const auto& msg = doc.at("choices").at(0).at("message");
        if (msg.contains("content") && msg["content"].is_string()) {
            content = msg["content"].get<std::string>();
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::HttpError, std::string("chat completion: malformed response: ") + e.what());
    }
    if (text::trim(content).empty()) {
        fail(ErrorCode::EmptyResponse, "chat completion returned no text");
    }
    return {content, "remote:" + model, latency};
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::delay(int retry) const
{
    if (backoff.empty()) {
        return std::chrono::milliseconds(0);
    }
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(retry, 0)), backoff.size() - 1);
    return backoff[i];
}

void Transcript::append(TranscriptEntry entry)
{
    std::lock_guard lock(mu_);
    entries_.push_back(std::move(entry));
}

std::vector<TranscriptEntry> Transcript::entries() const
{
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t Transcript::size() const
{
    std::lock_guard lock(mu_);
    return entries_.size();
}

std::string transcript_to_json(const std::vector<TranscriptEntry>& entries)
{
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json item;
        item["label"] = e.label;
        item["provider"] = e.provider_tag;
        item["attempts"] = e.attempts;
        item["prompt"] = e.prompt;
        item["response"] = e.response ? nlohmann::ordered_json(*e.response) : nlohmann::ordered_json(nullptr);
        item["error"] = e.error ? nlohmann::ordered_json(*e.error) : nlohmann::ordered_json(nullptr);
        out.push_back(std::move(item));
    }
    return out.dump(2) + "\n";
}

namespace {

std::ptrdiff_t slot_count(std::size_t n)
{
    if (n == 0) {
        fail(ErrorCode::InvalidArgument, "max_in_flight must be at least 1");
    }
    return static_cast<std::ptrdiff_t>(n);
}

} // namespace

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayConfig cfg, Sleeper sleeper)
    : provider_(std::move(provider)), cfg_(std::move(cfg)), sleeper_(std::move(sleeper)),
      slots_(slot_count(cfg_.max_in_flight))
{
    if (!provider_) {
        fail(ErrorCode::InvalidArgument, "gateway needs a provider");
    }
    if (cfg_.retry.max_retries < 0) {
        fail(ErrorCode::InvalidArgument, "max_retries must be >= 0");
    }
    if (!sleeper_) {
        sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

std::size_t Gateway::retries() const
{
    std::lock_guard lock(stats_mu_);
    return retries_;
}

std::size_t Gateway::peak_in_flight() const
{
    std::lock_guard lock(stats_mu_);
    return peak_in_flight_;
}

CompletionResponse Gateway::complete(CompletionRequest req, std::string_view label)
{
    if (req.model_tag.empty()) {
        req.model_tag = cfg_.default_model;
    }
    TranscriptEntry entry;
    entry.label = std::string(label);
    entry.prompt = flatten_prompt(req);
    entry.provider_tag = provider_->tag();
    try {
        req.validate();
    } catch (const Error& e) {
        entry.error = e.what();
        transcript_.append(std::move(entry));
        throw;
    }

    for (int attempt = 0;; ++attempt) {
        entry.attempts = attempt + 1;
        try {
            slots_.acquire();
            {
                std::lock_guard lock(stats_mu_);
                peak_in_flight_ = std::max(peak_in_flight_, ++in_flight_);
            }
            struct Release {
                Gateway* g;
                ~Release()
                {
                    {
                        std::lock_guard lock(g->stats_mu_);
                        --g->in_flight_;
                    }
                    g->slots_.release();
                }
            } release{this};
            CompletionResponse response = provider_->complete(req);
            if (text::trim(response.text).empty()) {
                fail(ErrorCode::EmptyResponse, "provider " + provider_->tag() + " returned no text");
            }
            entry.response = response.text;
            entry.provider_tag = response.provider_tag;
            transcript_.append(std::move(entry));
            return response;
        } catch (const Error& e) {
            const bool transient = e.code() == ErrorCode::Timeout || e.code() == ErrorCode::RateLimited;
            if (transient && attempt < cfg_.retry.max_retries) {
                {
                    std::lock_guard lock(stats_mu_);
                    ++retries_;
                }
                sleeper_(cfg_.retry.delay(attempt));
                continue;
            }
            entry.error = e.what();
            transcript_.append(std::move(entry));
            throw;
        }
    }
}

} // namespace tmf
