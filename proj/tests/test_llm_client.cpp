#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <random>
#include <thread>

#include "bracketrank/llm_client.hpp"

using namespace bracketrank;
using nlohmann::json;

namespace {

std::string chat_body(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}}
        .dump();
}

// In-process chat-completions stand-in bound to an ephemeral port.
class MockServer {
public:
    template <typename Setup>
    explicit MockServer(Setup&& setup) {
        setup(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockServer() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

EndpointConfig test_config(const std::string& base_url) {
    EndpointConfig config;
    config.base_url = base_url;
    config.model_name = "test-model";
    config.api_key_env_var = "BRKT_TEST_API_KEY";
    config.timeout_seconds = 5.0;
    config.max_retries = 3;
    config.backoff_base_seconds = 0.01;
    return config;
}

}  // namespace

TEST_CASE("estimate_tokens: ceil of characters over four") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens(std::string(400, 'a')) == 100);
    CHECK(estimate_tokens(std::string(401, 'a')) == 101);
    CHECK(estimate_tokens("abc") == 1);
}

TEST_CASE("backoff_delay_seconds: exponential base with bounded jitter") {
    EndpointConfig config;
    config.backoff_base_seconds = 0.5;
    CHECK(backoff_delay_seconds(config, 0, 0.0) == doctest::Approx(0.5));
    CHECK(backoff_delay_seconds(config, 2, 0.0) == doctest::Approx(2.0));
    CHECK(backoff_delay_seconds(config, 0, 1.0) == doctest::Approx(0.6));
    CHECK(backoff_delay_seconds(config, 0, -1.0) == doctest::Approx(0.4));

    // Strictly nondecreasing across attempts for any jitter sequence.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double previous = 0.0;
        for (int attempt = 0; attempt < 8; ++attempt) {
            const double delay = backoff_delay_seconds(config, attempt, jitter(rng));
            CHECK(delay >= previous);
            previous = delay;
        }
    }
}

TEST_CASE("complete: returns the first choice's message content") {
    setenv("BRKT_TEST_API_KEY", "sk-test-123", 1);
    json seen_body;
    std::string seen_auth;
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
            seen_body = json::parse(req.body);
            seen_auth = req.get_header_value("Authorization");
            res.set_content(chat_body("[1] > [2]"), "application/json");
        });
    });

    HttpChatClient client(test_config(server.base_url() + "/v1"));
    const std::string content = client.complete("system text", "user text");
    CHECK(content == "[1] > [2]");
    CHECK(client.stats().requests_sent == 1);
    CHECK(client.stats().requests_failed == 0);
    CHECK(client.stats().prompt_tokens_est ==
          static_cast<std::int64_t>(estimate_tokens("system text") + estimate_tokens("user text")));

    CHECK(seen_auth == "Bearer sk-test-123");
    CHECK(seen_body["model"] == "test-model");
    CHECK(seen_body["temperature"] == 0.0);
    REQUIRE(seen_body["messages"].size() == 2);
    CHECK(seen_body["messages"][0]["role"] == "system");
    CHECK(seen_body["messages"][0]["content"] == "system text");
    CHECK(seen_body["messages"][1]["role"] == "user");
    CHECK(seen_body["messages"][1]["content"] == "user text");
    unsetenv("BRKT_TEST_API_KEY");
}

TEST_CASE("complete: retries 429 with nondecreasing backoff, then succeeds") {
    std::atomic<int> hits{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            if (hits.fetch_add(1) < 2) {
                res.status = 429;
            } else {
                res.set_content(chat_body("ok"), "application/json");
            }
        });
    });

    HttpChatClient client(test_config(server.base_url()));
    std::vector<double> delays;
    client.set_sleeper([&](double seconds) { delays.push_back(seconds); });

    CHECK(client.complete("s", "u") == "ok");
    CHECK(client.stats().requests_sent == 3);
    CHECK(client.stats().requests_failed == 2);
    REQUIRE(delays.size() == 2);
    CHECK(delays[0] <= delays[1]);
}

TEST_CASE("complete: persistent 500 exhausts retries") {
    std::atomic<int> hits{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            hits.fetch_add(1);
            res.status = 500;
        });
    });

    EndpointConfig config = test_config(server.base_url());
    config.max_retries = 2;
    HttpChatClient client(config);
    client.set_sleeper([](double) {});

    CHECK_THROWS_AS(client.complete("s", "u"), TransportError);
    CHECK(client.stats().requests_sent == 3);
    CHECK(hits.load() == 3);
}

TEST_CASE("complete: auth failures never retry") {
    MockServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.status = 401;
        });
    });

    HttpChatClient client(test_config(server.base_url()));
    CHECK_THROWS_AS(client.complete("s", "u"), AuthError);
    CHECK(client.stats().requests_sent == 1);
}

TEST_CASE("complete: 200 with the wrong JSON shape is malformed") {
    MockServer server([&](httplib::Server& s) {
        s.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.set_content("{\"unexpected\": true}", "application/json");
        });
    });

    HttpChatClient client(test_config(server.base_url()));
    CHECK_THROWS_AS(client.complete("s", "u"), MalformedResponseError);
}

TEST_CASE("complete: connection refused becomes a transport error") {
    EndpointConfig config = test_config("http://127.0.0.1:1");
    config.max_retries = 0;
    HttpChatClient client(config);
    client.set_sleeper([](double) {});
    CHECK_THROWS_AS(client.complete("s", "u"), TransportError);
    CHECK(client.stats().requests_sent == 1);
}

TEST_CASE("complete: oversized request bodies are rejected before sending") {
    EndpointConfig config = test_config("http://127.0.0.1:1");
    config.max_body_chars = 64;
    HttpChatClient client(config);
    CHECK_THROWS_AS(client.complete("s", std::string(500, 'x')), InvalidArgumentError);
    CHECK(client.stats().requests_sent == 0);
}

TEST_CASE("complete: empty messages are rejected") {
    HttpChatClient client(test_config("http://127.0.0.1:1"));
    CHECK_THROWS_AS(client.complete("", "u"), InvalidArgumentError);
    CHECK_THROWS_AS(client.complete("s", ""), InvalidArgumentError);
}
