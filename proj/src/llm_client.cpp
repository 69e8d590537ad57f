#include "bracketrank/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace bracketrank {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string scheme_host_port;  // "http://host:1234"
    std::string path_prefix;       // "/v1" or ""
};

ParsedUrl parse_base_url(const std::string& base_url) {
    const std::size_t scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw InvalidArgumentError("base_url must start with http:// or https://: " + base_url);
    }
    const std::size_t path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = base_url;
    } else {
        out.scheme_host_port = base_url.substr(0, path_start);
        out.path_prefix = base_url.substr(path_start);
        while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
            out.path_prefix.pop_back();
        }
    }
    if (out.scheme_host_port.size() <= scheme_end + 3) {
        throw InvalidArgumentError("base_url has no host: " + base_url);
    }
    return out;
}

double jitter_unit() {
    thread_local std::mt19937 rng{std::random_device{}()};
    return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;
}

double backoff_delay_seconds(const EndpointConfig& config, int attempt, double jitter) {
    if (jitter < -1.0) jitter = -1.0;
    if (jitter > 1.0) jitter = 1.0;
    return config.backoff_base_seconds * std::ldexp(1.0, attempt) * (1.0 + 0.2 * jitter);
}

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
    sleeper_ = [](double seconds) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
}

void HttpChatClient::set_sleeper(std::function<void(double)> sleeper) {
    sleeper_ = std::move(sleeper);
}

CallStats HttpChatClient::stats() const {
    CallStats s;
    s.requests_sent = requests_sent_.load();
    s.requests_failed = requests_failed_.load();
    s.prompt_tokens_est = prompt_tokens_est_.load();
    s.wall_time_seconds = static_cast<double>(wall_time_micros_.load()) / 1e6;
    return s;
}

std::string HttpChatClient::complete(const std::string& system_message,
                                     const std::string& user_message) {
    if (system_message.empty() || user_message.empty()) {
        throw InvalidArgumentError("complete: messages must be non-empty");
    }

    const ParsedUrl url = parse_base_url(config_.base_url);
    const json body_json = {
        {"model", config_.model_name},
        {"messages",
         json::array({json{{"role", "system"}, {"content", system_message}},
                      json{{"role", "user"}, {"content", user_message}}})},
        {"temperature", config_.temperature},
    };
    const std::string body = body_json.dump();
    if (body.size() > config_.max_body_chars) {
        throw InvalidArgumentError("request body of " + std::to_string(body.size()) +
                                   " chars exceeds the hard cap of " +
                                   std::to_string(config_.max_body_chars));
    }

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const std::size_t tokens =
        estimate_tokens(system_message) + estimate_tokens(user_message);
    const auto timeout =
        std::chrono::milliseconds(static_cast<long long>(config_.timeout_seconds * 1000.0));

    std::string last_error;
    for (int attempt = 0;; ++attempt) {
        requests_sent_.fetch_add(1);
        prompt_tokens_est_.fetch_add(static_cast<std::int64_t>(tokens));

        const auto start = std::chrono::steady_clock::now();
        // A fresh connection per request keeps the client safe for concurrent
        // callers; the tournament engine bounds parallelism upstream.
        httplib::Client http(url.scheme_host_port);
        http.set_connection_timeout(timeout);
        http.set_read_timeout(timeout);
        http.set_write_timeout(timeout);
        auto res = http.Post(url.path_prefix + "/chat/completions", headers, body,
                             "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - start;
        wall_time_micros_.fetch_add(
            std::chrono::duration_cast<std::chrono::microseconds>(elapsed).count());

        if (res) {
            const int status = res->status;
            if (status >= 200 && status < 300) {
                json parsed = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
                if (parsed.is_discarded() || !parsed.contains("choices") ||
                    !parsed["choices"].is_array() || parsed["choices"].empty() ||
                    !parsed["choices"][0].contains("message") ||
                    !parsed["choices"][0]["message"].contains("content") ||
                    !parsed["choices"][0]["message"]["content"].is_string()) {
                    requests_failed_.fetch_add(1);
                    throw MalformedResponseError(
                        "response JSON lacks choices[0].message.content");
                }
                return parsed["choices"][0]["message"]["content"].get<std::string>();
            }
            requests_failed_.fetch_add(1);
            if (status == 401 || status == 403) {
                throw AuthError("endpoint returned HTTP " + std::to_string(status));
            }
            if (!retryable_status(status)) {
                throw TransportError("endpoint returned HTTP " + std::to_string(status));
            }
            last_error = "HTTP " + std::to_string(status);
        } else {
            requests_failed_.fetch_add(1);
            last_error = httplib::to_string(res.error());
        }

        if (attempt >= config_.max_retries) {
            throw TransportError("request failed after " + std::to_string(attempt + 1) +
                                 " attempt(s): " + last_error);
        }
        sleeper_(backoff_delay_seconds(config_, attempt, jitter_unit()));
    }
}

}  // namespace bracketrank
