#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "concat/backends.hpp"
#include "concat/errors.hpp"

namespace concat {

struct HttpBackendConfig {
    std::string endpoint = "http://127.0.0.1:8000";  // base URL, path optional
    std::string model = "default";
    std::string api_key;                       // empty = no Authorization header
    std::optional<double> fallback_confidence;  // used when logprobs are absent
    int max_retries = 2;                        // extra attempts on transient failures
    int timeout_seconds = 120;
};

// Client for OpenAI-compatible chat-completions endpoints. Requests per-token
// log-probabilities and converts each to a probability by exponentiation.
class HttpBackend final : public AgentBackend {
  public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        auto scheme_end = cfg_.endpoint.find("://");
        std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        auto path_start = cfg_.endpoint.find('/', host_start);
        if (path_start == std::string::npos) {
            base_ = cfg_.endpoint;
            path_ = "/v1/chat/completions";
        } else {
            base_ = cfg_.endpoint.substr(0, path_start);
            path_ = cfg_.endpoint.substr(path_start);
        }
    }

    std::string name() const override { return "http"; }

    GenerationResult generate(const AgentCall& call) override {
        nlohmann::json body = {
            {"model", cfg_.model},
            {"messages",
             {{{"role", "system"}, {"content", call.request.system_prompt}},
              {{"role", "user"}, {"content", call.request.user_prompt}}}},
            {"temperature", call.request.temperature},
            {"top_p", call.request.top_p},
            {"max_tokens", call.request.max_tokens},
        };
        if (call.request.want_logprobs) body["logprobs"] = true;

        std::string payload = body.dump();
        std::string context = call_context(call);

        for (int attempt = 0;; ++attempt) {
            auto started = std::chrono::steady_clock::now();
            httplib::Client client(base_);
            client.set_read_timeout(cfg_.timeout_seconds, 0);
            client.set_write_timeout(cfg_.timeout_seconds, 0);
            httplib::Headers headers;
            if (!cfg_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + cfg_.api_key);

            httplib::Result res = client.Post(path_, headers, payload, "application/json");
            double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                    .count();

            if (!res) {
                if (attempt < cfg_.max_retries) {
                    backoff(attempt);
                    continue;
                }
                throw TransportError("no response from " + base_ + path_ + " (" +
                                     httplib::to_string(res.error()) + ") " + context);
            }
            if (res->status >= 500 && attempt < cfg_.max_retries) {
                backoff(attempt);
                continue;
            }
            if (res->status != 200)
                throw EndpointError(res->status, truncate(res->body) + " " + context);
            return parse_response(res->body, elapsed, context);
        }
    }

  private:
    static std::string call_context(const AgentCall& call) {
        std::string task_id = call.task != nullptr ? call.task->id : "<none>";
        return "[task " + task_id + ", agent " + std::to_string(call.agent) + ", round " +
               std::to_string(call.round) + (call.aggregation ? ", aggregation]" : "]");
    }

    static void backoff(int attempt) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
    }

    static std::string truncate(const std::string& s) {
        return s.size() <= 200 ? s : s.substr(0, 200) + "...";
    }

    GenerationResult parse_response(const std::string& body, double elapsed,
                                    const std::string& context) const {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded())
            throw MalformedResponse("response body is not JSON " + context);

        GenerationResult out;
        out.wall_latency = elapsed;
        try {
            const nlohmann::json& choices = j.at("choices");
            if (!choices.is_array() || choices.empty())
                throw MalformedResponse("empty choices array " + context);
            const nlohmann::json& first = choices.at(0);
            out.text = first.at("message").at("content").get<std::string>();

            if (first.contains("logprobs") && first["logprobs"].is_object() &&
                first["logprobs"].contains("content") && first["logprobs"]["content"].is_array()) {
                for (const auto& tok : first["logprobs"]["content"]) {
                    double lp = tok.at("logprob").get<double>();
                    out.token_probabilities.push_back(std::exp(lp));
                }
            }
            if (j.contains("usage") && j["usage"].is_object()) {
                out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
                out.completion_tokens = j["usage"].value("completion_tokens", 0);
            }
        } catch (const nlohmann::json::exception& ex) {
            throw MalformedResponse(std::string("missing field: ") + ex.what() + " " + context);
        }

        if (out.token_probabilities.empty()) {
            if (!cfg_.fallback_confidence)
                throw MissingLogprobs("endpoint returned no token logprobs " + context);
            out.token_probabilities.push_back(*cfg_.fallback_confidence);
        }
        return out;
    }

    HttpBackendConfig cfg_;
    std::string base_;
    std::string path_;
};

}  // namespace concat
