#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ragsynth/common.hpp"
#include "ragsynth/gateway.hpp"
#include "ragsynth/pipeline.hpp"

using namespace ragsynth;
using gateway::CompletionRequest;
using gateway::MockBackend;
using gateway::MockRule;
using gateway::RuleKind;

namespace {

CompletionRequest make_req(const std::string& user) {
    CompletionRequest req;
    req.system_prompt = "system";
    req.user_prompt = user;
    req.model_name = "test-model";
    return req;
}

// Local chat-completion stub. Serves until destroyed.
class StubServer {
public:
    explicit StubServer(int fail_with_status = 0, int fail_times = 0)
        : fail_status_(fail_with_status), fail_remaining_(fail_times) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                    httplib::Response& res) {
            ++requests_;
            last_body_ = req.body;
            if (fail_status_ != 0 && (fail_remaining_ < 0 || fail_remaining_-- > 0)) {
                res.status = fail_status_;
                res.set_content("busted", "text/plain");
                return;
            }
            nlohmann::json out{
                {"choices",
                 {{{"message", {{"role", "assistant"}, {"content", "stub completion"}}}}}}};
            res.set_content(out.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    }
    int requests() const { return requests_.load(); }
    std::string last_body() const { return last_body_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    int fail_status_;
    std::atomic<int> fail_remaining_;
    std::atomic<int> requests_{0};
    std::string last_body_;
};

}  // namespace

TEST_CASE("request fingerprint is stable and input-sensitive") {
    auto a = gateway::request_fingerprint(make_req("hello"));
    CHECK(a == gateway::request_fingerprint(make_req("hello")));
    CHECK(a != gateway::request_fingerprint(make_req("hello!")));
    auto req = make_req("hello");
    req.seed = 7;
    CHECK(a != gateway::request_fingerprint(req));
}

TEST_CASE("mock backend scripted echo") {
    MockBackend mock({{"Your question:", "min credit score for mortgage", RuleKind::substring}},
                     1);
    auto completion = mock.complete(make_req("...\nYour question:"));
    CHECK(completion.text == "min credit score for mortgage");
    CHECK(completion.backend == gateway::BackendKind::mock);
    CHECK(completion.latency_ms == 0.0);
}

TEST_CASE("mock determinism: identical requests give byte-identical completions") {
    MockBackend mock({{"q", "{{pick:a|b|c}} {{int:1:100}}", RuleKind::substring}}, 42);
    auto c1 = mock.complete(make_req("q one"));
    auto c2 = mock.complete(make_req("q one"));
    CHECK(c1.text == c2.text);
    CHECK(c1.request_fingerprint == c2.request_fingerprint);
    // Different requests draw different slot fills (with overwhelming probability
    // over 100 values; pinned by the fixed seed here).
    auto c3 = mock.complete(make_req("q two"));
    CHECK(c3.text != c1.text);
}

TEST_CASE("mock regex capture groups") {
    MockBackend mock({{R"(source number (\d+))", "cited[{{group:1}}]", RuleKind::regex}}, 1);
    CHECK(mock.complete(make_req("the source number 4 is gold")).text == "cited[4]");
}

TEST_CASE("strict mock misses are errors; non-strict falls back") {
    MockBackend strict({{"xyz", "match", RuleKind::substring}}, 1, true);
    CHECK_THROWS_AS((void)strict.complete(make_req("no match here")), GatewayError);
    MockBackend loose({{"xyz", "match", RuleKind::substring}}, 1, false);
    CHECK(loose.complete(make_req("no match here")).text == "OK.");
}

TEST_CASE("mock counts calls") {
    MockBackend mock({{"q", "a", RuleKind::substring}}, 1);
    CHECK(mock.calls() == 0);
    (void)mock.complete(make_req("q"));
    (void)mock.complete(make_req("q"));
    CHECK(mock.calls() == 2);
}

TEST_CASE("gateway validates requests") {
    auto mock = std::make_shared<MockBackend>(
        std::vector<MockRule>{{"", "ok", RuleKind::substring}}, 1);
    gateway::Gateway gw(mock, 2);
    CompletionRequest req = make_req("x");
    req.user_prompt = "";
    CHECK_THROWS_AS((void)gw.complete(req), DataError);
    req = make_req("x");
    req.max_tokens = 0;
    CHECK_THROWS_AS((void)gw.complete(req), DataError);
}

TEST_CASE("http backend returns completions and passes prompts through byte-exact") {
    StubServer server;
    gateway::HttpConfig config;
    config.endpoint_url = server.url();
    config.api_token = "token-123";
    config.model_name = "stub-model";
    config.backoff_ms = 1;
    gateway::HttpBackend backend(config);

    std::string tricky = "line1\nline2 \"quoted\" \xE2\x80\x99 and unicode";
    auto req = make_req(tricky);
    auto completion = backend.complete(req);
    CHECK(completion.text == "stub completion");
    CHECK(completion.backend == gateway::BackendKind::http);
    CHECK(completion.latency_ms >= 0.0);

    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "system");
    CHECK(body["messages"][1]["content"].get<std::string>() == tricky);
    CHECK(body["model"] == "test-model");
}

TEST_CASE("http backend retries transient failures then surfaces status and attempts") {
    StubServer server(500, -1);  // always fail
    gateway::HttpConfig config;
    config.endpoint_url = server.url();
    config.retry_max = 3;
    config.backoff_ms = 1;
    gateway::HttpBackend backend(config);
    try {
        (void)backend.complete(make_req("q"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.status == 500);
        CHECK(e.attempts == 3);
        CHECK(std::string(e.what()).find("500") != std::string::npos);
    }
    CHECK(server.requests() == 3);
}

TEST_CASE("http backend recovers when a transient failure clears") {
    StubServer server(500, 2);  // fail twice, then succeed
    gateway::HttpConfig config;
    config.endpoint_url = server.url();
    config.retry_max = 3;
    config.backoff_ms = 1;
    gateway::HttpBackend backend(config);
    CHECK(backend.complete(make_req("q")).text == "stub completion");
    CHECK(server.requests() == 3);
}

TEST_CASE("http backend does not retry non-transient statuses") {
    StubServer server(401, -1);
    gateway::HttpConfig config;
    config.endpoint_url = server.url();
    config.retry_max = 3;
    config.backoff_ms = 1;
    gateway::HttpBackend backend(config);
    try {
        (void)backend.complete(make_req("q"));
        FAIL("expected GatewayError");
    } catch (const GatewayError& e) {
        CHECK(e.status == 401);
        CHECK(e.attempts == 1);
    }
    CHECK(server.requests() == 1);
}

TEST_CASE("resolve_secret env indirection") {
    setenv("RAGSYNTH_TEST_TOKEN", "sekrit", 1);
    CHECK(gateway::resolve_secret("env:RAGSYNTH_TEST_TOKEN") == "sekrit");
    CHECK(gateway::resolve_secret("plain") == "plain");
    unsetenv("RAGSYNTH_TEST_TOKEN");
    CHECK_THROWS_AS((void)gateway::resolve_secret("env:RAGSYNTH_TEST_TOKEN"), GatewayError);
}

TEST_CASE("tfidf embedder determinism and zero vector on unknown vocabulary") {
    gateway::TfidfEmbedder embedder;
    embedder.fit({"apr and apy rates", "escrow balance rules"});
    auto v1 = embedder.embed("apr rules");
    auto v2 = embedder.embed("apr rules");
    CHECK(v1 == v2);
    auto zero = embedder.embed("zzz qqq");
    for (double x : zero) CHECK(x == 0.0);
    CHECK(tfidf::cosine(v1, v1) == doctest::Approx(1.0));
}

TEST_CASE("gateway bounded parallelism under concurrent callers") {
    auto mock = std::make_shared<MockBackend>(
        std::vector<MockRule>{{"q", "{{int:1:9}}", RuleKind::substring}}, 3);
    gateway::Gateway gw(mock, 2);
    std::atomic<int> failures{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
            for (int i = 0; i < 50; ++i) {
                auto c = gw.complete(make_req("q " + std::to_string(t) + ":" + std::to_string(i)));
                auto again = gw.complete(make_req("q " + std::to_string(t) + ":" +
                                                  std::to_string(i)));
                if (c.text != again.text) failures.fetch_add(1);
            }
        });
    for (auto& t : threads) t.join();
    CHECK(failures.load() == 0);
    CHECK(mock->calls() == 800);
}
