#include "ragsynth/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <random>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ragsynth/common.hpp"
#include "ragsynth/jsonl.hpp"

namespace ragsynth::gateway {

namespace {

constexpr char kFieldSep = '\x1f';

std::string canonical_request(const CompletionRequest& req) {
    std::string s;
    s += req.system_prompt;
    s += kFieldSep;
    s += req.user_prompt;
    s += kFieldSep;
    s += std::to_string(req.temperature);
    s += kFieldSep;
    s += std::to_string(req.max_tokens);
    s += kFieldSep;
    s += req.model_name;
    s += kFieldSep;
    s += req.seed ? std::to_string(*req.seed) : std::string("-");
    return s;
}

void validate(const CompletionRequest& req) {
    if (req.user_prompt.empty()) throw DataError("completion request has empty user prompt");
    if (req.max_tokens <= 0) throw DataError("completion request requires max_tokens > 0");
    if (req.temperature < 0) throw DataError("completion request requires temperature >= 0");
}

}  // namespace

std::string request_fingerprint(const CompletionRequest& req) {
    return hex64(fnv1a64(canonical_request(req)));
}

// =============================================================================
// MockBackend
// =============================================================================

MockBackend::MockBackend(std::vector<MockRule> rules, uint64_t seed, bool strict)
    : rules_(std::move(rules)), seed_(seed), strict_(strict) {}

std::shared_ptr<MockBackend> MockBackend::from_script_file(const std::filesystem::path& path,
                                                           uint64_t seed, bool strict) {
    std::vector<MockRule> rules;
    for (const auto& rec : read_jsonl(path)) {
        MockRule rule;
        rule.pattern = rec.at("pattern").get<std::string>();
        rule.response_template = rec.at("response_template").get<std::string>();
        std::string kind = rec.value("kind", "substring");
        if (kind == "substring") {
            rule.kind = RuleKind::substring;
        } else if (kind == "regex") {
            rule.kind = RuleKind::regex;
        } else {
            throw DataError("mock script: unknown rule kind: " + kind);
        }
        rules.push_back(std::move(rule));
    }
    return std::make_shared<MockBackend>(std::move(rules), seed, strict);
}

namespace {

// Expands {{pick:...}}, {{int:lo:hi}}, {{group:N}} slots. Pure in
// (template, rng state, match groups).
std::string expand_mock_template(const std::string& tmpl, std::mt19937_64& rng,
                                 const std::smatch* match) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        auto open = tmpl.find("{{", i);
        if (open == std::string::npos) {
            out += tmpl.substr(i);
            break;
        }
        auto close = tmpl.find("}}", open);
        if (close == std::string::npos) {
            out += tmpl.substr(i);
            break;
        }
        out += tmpl.substr(i, open - i);
        std::string slot = tmpl.substr(open + 2, close - open - 2);
        if (slot.rfind("pick:", 0) == 0) {
            std::vector<std::string> options;
            std::string body = slot.substr(5);
            std::size_t start = 0;
            while (true) {
                auto bar = body.find('|', start);
                options.push_back(body.substr(start, bar - start));
                if (bar == std::string::npos) break;
                start = bar + 1;
            }
            std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
            out += options[dist(rng)];
        } else if (slot.rfind("int:", 0) == 0) {
            auto colon = slot.find(':', 4);
            if (colon == std::string::npos)
                throw DataError("mock template slot needs {{int:lo:hi}}: " + slot);
            long lo = std::stol(slot.substr(4, colon - 4));
            long hi = std::stol(slot.substr(colon + 1));
            std::uniform_int_distribution<long> dist(lo, hi);
            out += std::to_string(dist(rng));
        } else if (slot.rfind("group:", 0) == 0) {
            std::size_t g = static_cast<std::size_t>(std::stoul(slot.substr(6)));
            if (match == nullptr || g >= match->size())
                throw DataError("mock template references capture group " + slot.substr(6) +
                                " but the rule has no such group");
            out += match->str(g);
        } else {
            throw DataError("mock template has unknown slot: {{" + slot + "}}");
        }
        i = close + 2;
    }
    return out;
}

}  // namespace

Completion MockBackend::complete(const CompletionRequest& req) {
    validate(req);
    calls_.fetch_add(1, std::memory_order_relaxed);

    Completion completion;
    completion.backend = BackendKind::mock;
    completion.latency_ms = 0.0;
    completion.request_fingerprint = request_fingerprint(req);

    std::mt19937_64 rng(fnv1a64(completion.request_fingerprint, fnv1a64_u64(seed_)));
    for (const auto& rule : rules_) {
        if (rule.kind == RuleKind::substring) {
            if (req.user_prompt.find(rule.pattern) == std::string::npos) continue;
            completion.text = expand_mock_template(rule.response_template, rng, nullptr);
            return completion;
        }
        std::smatch match;
        std::regex re(rule.pattern);
        if (!std::regex_search(req.user_prompt, match, re)) continue;
        completion.text = expand_mock_template(rule.response_template, rng, &match);
        return completion;
    }
    if (strict_)
        throw GatewayError("strict mock has no rule matching request " +
                           completion.request_fingerprint);
    completion.text = "OK.";
    return completion;
}

// =============================================================================
// HttpBackend
// =============================================================================

std::string resolve_secret(const std::string& value) {
    if (value.rfind("env:", 0) != 0) return value;
    std::string name = value.substr(4);
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) throw GatewayError("environment variable not set: " + name);
    return v;
}

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw GatewayError("endpoint_url missing scheme: " + url);
    if (url.rfind("https://", 0) == 0)
        throw GatewayError("https endpoints require a TLS-enabled build; use an http endpoint");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty()) throw GatewayError("http backend requires endpoint_url");
}

Completion HttpBackend::complete(const CompletionRequest& req) {
    validate(req);
    auto start = std::chrono::steady_clock::now();

    SplitUrl url = split_url(config_.endpoint_url);
    httplib::Client client(url.base);
    client.set_connection_timeout(0, config_.timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    nlohmann::json body;
    body["model"] = req.model_name.empty() ? config_.model_name : req.model_name;
    auto messages = nlohmann::json::array();
    if (!req.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
    body["messages"] = std::move(messages);
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.seed) body["seed"] = *req.seed;

    httplib::Headers headers;
    std::string token = resolve_secret(config_.api_token);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    int attempts = 0;
    int last_status = 0;
    std::string last_error;
    while (attempts < std::max(1, config_.retry_max)) {
        ++attempts;
        auto res = client.Post(url.path, headers, body.dump(), "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            try {
                auto parsed = nlohmann::json::parse(res->body);
                Completion completion;
                completion.text =
                    parsed.at("choices").at(0).at("message").at("content").get<std::string>();
                completion.backend = BackendKind::http;
                completion.request_fingerprint = request_fingerprint(req);
                completion.latency_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              start)
                        .count();
                return completion;
            } catch (const nlohmann::json::exception& e) {
                throw GatewayError(std::string("malformed completion response: ") + e.what(),
                                   res->status, attempts);
            }
        }
        if (res) {
            last_status = res->status;
            last_error = "http status " + std::to_string(res->status);
            bool transient = res->status == 429 || res->status >= 500;
            if (!transient)
                throw GatewayError("completion request failed: " + last_error, last_status,
                                   attempts);
        } else {
            last_error = "transport error: " + httplib::to_string(res.error());
        }
        if (attempts < std::max(1, config_.retry_max)) {
            int delay = config_.backoff_ms << (attempts - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    throw GatewayError("completion request failed after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       last_status, attempts);
}

// =============================================================================
// Gateway
// =============================================================================

// Counting semaphore with a runtime limit.
struct Gateway::Slots {
    explicit Slots(int limit) : available(limit) {}
    std::mutex mutex;
    std::condition_variable cv;
    int available;

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex);
        cv.wait(lock, [&] { return available > 0; });
        --available;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex);
            ++available;
        }
        cv.notify_one();
    }
};

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, int max_parallel)
    : backend_(std::move(backend)),
      slots_(std::make_shared<Slots>(max_parallel > 0 ? max_parallel : 1)) {
    if (!backend_) throw GatewayError("gateway requires a backend");
}

Completion Gateway::complete(const CompletionRequest& req) {
    slots_->acquire();
    struct Release {
        Slots* s;
        ~Release() { s->release(); }
    } release{slots_.get()};
    return backend_->complete(req);
}

// =============================================================================
// Embedders
// =============================================================================

TfidfEmbedder::TfidfEmbedder(tfidf::Options opts) : vectorizer_(opts) {}

void TfidfEmbedder::fit(const std::vector<std::string>& corpus) {
    vectorizer_.fit(corpus);
}

std::vector<double> TfidfEmbedder::embed(const std::string& text) {
    if (!vectorizer_.fitted()) throw DataError("TfidfEmbedder used before fit()");
    return vectorizer_.transform(text);
}

HttpEmbedder::HttpEmbedder(EmbeddingHttpConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty()) throw GatewayError("http embedder requires endpoint_url");
}

std::vector<double> HttpEmbedder::embed(const std::string& text) {
    SplitUrl url = split_url(config_.endpoint_url);
    httplib::Client client(url.base);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["input"] = text;

    httplib::Headers headers;
    std::string token = resolve_secret(config_.api_token);
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300)
        throw GatewayError("embedding request failed",
                           res ? res->status : 0, 1);
    try {
        auto parsed = nlohmann::json::parse(res->body);
        return parsed.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw GatewayError(std::string("malformed embedding response: ") + e.what(), res->status,
                           1);
    }
}

}  // namespace ragsynth::gateway
