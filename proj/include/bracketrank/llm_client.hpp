#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "bracketrank/types.hpp"

namespace bracketrank {

// Connection settings for one OpenAI-compatible chat-completion endpoint.
// The API key is read from the environment variable named here, never stored.
struct EndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_name = "gpt-4";
    std::string api_key_env_var = "OPENAI_API_KEY";
    double timeout_seconds = 120.0;
    int max_retries = 3;
    double backoff_base_seconds = 0.5;
    double temperature = 0.0;               // deterministic decoding by default
    std::size_t max_body_chars = 2'000'000; // hard cap checked on every send
};

struct CallStats {
    std::int64_t requests_sent = 0;
    std::int64_t requests_failed = 0;
    std::int64_t prompt_tokens_est = 0;
    double wall_time_seconds = 0.0;
};

// ceil(chars / 4); used for budget derivation and accounting only.
std::size_t estimate_tokens(std::string_view text);

// Delay before retry `attempt` (0-based): base * 2^attempt * (1 + 0.2*jitter),
// jitter_unit in [-1, 1]. Strictly nondecreasing across attempts for any
// admissible jitter sequence.
double backoff_delay_seconds(const EndpointConfig& config, int attempt, double jitter_unit);

// Anything that can answer one (system, user) chat exchange. Implementations
// must be safe for concurrent calls.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const std::string& system_message,
                                 const std::string& user_message) = 0;
};

// HTTP client for POST {base_url}/chat/completions. Retries 429/5xx/timeouts
// with jittered exponential backoff; 401/403 raise AuthError without retry.
class HttpChatClient : public ChatTransport {
public:
    explicit HttpChatClient(EndpointConfig config);

    std::string complete(const std::string& system_message,
                         const std::string& user_message) override;

    CallStats stats() const;
    const EndpointConfig& config() const { return config_; }

    // Test hook: replaces the real sleep between retries.
    void set_sleeper(std::function<void(double seconds)> sleeper);

private:
    EndpointConfig config_;
    std::function<void(double)> sleeper_;

    std::atomic<std::int64_t> requests_sent_{0};
    std::atomic<std::int64_t> requests_failed_{0};
    std::atomic<std::int64_t> prompt_tokens_est_{0};
    std::atomic<std::int64_t> wall_time_micros_{0};
};

}  // namespace bracketrank
