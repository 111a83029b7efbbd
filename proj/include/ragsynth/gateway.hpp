/// @file gateway.hpp
/// @brief The single abstraction all model calls flow through: a chat-completion
///        HTTP backend for real generation and a deterministic scriptable mock
///        for offline runs and tests. No other module holds network state.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ragsynth/tfidf.hpp"

namespace ragsynth::gateway {

enum class BackendKind { http, mock };

struct CompletionRequest {
    std::string system_prompt;  // empty = no system message on the wire
    std::string user_prompt;
    double temperature = 0.7;
    int max_tokens = 512;
    std::string model_name;
    std::optional<int64_t> seed;
};

struct Completion {
    std::string text;
    BackendKind backend = BackendKind::mock;
    double latency_ms = 0.0;
    std::string request_fingerprint;
};

// Stable across identical requests; feeds mock determinism and caching.
std::string request_fingerprint(const CompletionRequest& req);

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual Completion complete(const CompletionRequest& req) = 0;
    virtual BackendKind kind() const = 0;
};

// ---------------------------------------------------------------------------
// Mock backend
// ---------------------------------------------------------------------------

enum class RuleKind { substring, regex };

// First matching rule wins. Response templates support seeded slots:
//   {{pick:a|b|c}}   seeded choice among options
//   {{int:lo:hi}}    seeded integer in [lo, hi]
//   {{group:N}}      capture group N of a regex rule's match on the user prompt
struct MockRule {
    std::string pattern;
    std::string response_template;
    RuleKind kind = RuleKind::substring;
};

class MockBackend : public CompletionBackend {
public:
    MockBackend(std::vector<MockRule> rules, uint64_t seed, bool strict = true);

    // Script file: jsonl of {pattern, response_template, kind: "substring"|"regex"}.
    static std::shared_ptr<MockBackend> from_script_file(const std::filesystem::path& path,
                                                         uint64_t seed, bool strict = true);

    Completion complete(const CompletionRequest& req) override;
    BackendKind kind() const override { return BackendKind::mock; }

    uint64_t calls() const { return calls_.load(); }

private:
    std::vector<MockRule> rules_;
    uint64_t seed_;
    bool strict_;
    std::atomic<uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// HTTP backend (chat-completion style JSON exchange)
// ---------------------------------------------------------------------------

struct HttpConfig {
    std::string endpoint_url;  // e.g. http://localhost:8000/v1/chat/completions
    std::string api_token;     // "env:VAR" resolves from the environment
    std::string model_name;
    int retry_max = 3;       // total attempts
    int timeout_ms = 30000;
    int backoff_ms = 250;    // first retry delay, doubles per attempt
};

// Resolves "env:NAME" indirection; plain values pass through.
std::string resolve_secret(const std::string& value);

class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(HttpConfig config);
    Completion complete(const CompletionRequest& req) override;
    BackendKind kind() const override { return BackendKind::http; }

private:
    HttpConfig config_;
};

// ---------------------------------------------------------------------------
// Gateway: bounded-parallelism front door
// ---------------------------------------------------------------------------

class Gateway {
public:
    Gateway(std::shared_ptr<CompletionBackend> backend, int max_parallel = 4);

    Completion complete(const CompletionRequest& req);
    BackendKind backend_kind() const { return backend_->kind(); }
    CompletionBackend& backend() { return *backend_; }

private:
    std::shared_ptr<CompletionBackend> backend_;
    struct Slots;
    std::shared_ptr<Slots> slots_;
};

// ---------------------------------------------------------------------------
// Embeddings (used only by the coverage metric when configured)
// ---------------------------------------------------------------------------

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// Offline fallback: TF-IDF over a fitted vocabulary.
class TfidfEmbedder : public Embedder {
public:
    explicit TfidfEmbedder(tfidf::Options opts = {.ngram_min = 1, .ngram_max = 2});
    void fit(const std::vector<std::string>& corpus);
    std::vector<double> embed(const std::string& text) override;

private:
    tfidf::TfidfVectorizer vectorizer_;
};

struct EmbeddingHttpConfig {
    std::string endpoint_url;  // e.g. http://localhost:8000/v1/embeddings
    std::string api_token;
    std::string model_name;
    int timeout_ms = 30000;
};

class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(EmbeddingHttpConfig config);
    std::vector<double> embed(const std::string& text) override;

private:
    EmbeddingHttpConfig config_;
};

}  // namespace ragsynth::gateway
