#include "qaforge/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qaforge/errors.hpp"

namespace qaforge {

using nlohmann::json;

void RetryPolicy::validate() const {
    if (max_attempts < 1 || max_attempts > 10) {
        throw ConfigError("retry.max_attempts must be in [1, 10]");
    }
    if (backoff_base_ms < 0) throw ConfigError("retry.backoff_base_ms must be >= 0");
    if (max_in_flight < 1) throw ConfigError("retry.max_in_flight must be >= 1");
}

std::string to_string(FinishReason r) {
    switch (r) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

namespace {

struct InFlightGuard {
    explicit InFlightGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~InFlightGuard() { limiter.release(); }
    InFlightLimiter& limiter;
};

FinishReason parse_finish_reason(const json& choice) {
    if (!choice.contains("finish_reason") || choice["finish_reason"].is_null()) {
        return FinishReason::stop;
    }
    const std::string r = choice["finish_reason"].get<std::string>();
    if (r == "stop") return FinishReason::stop;
    if (r == "length") return FinishReason::length;
    return FinishReason::error;
}

}  // namespace

ModelGateway::ModelGateway(const std::string& endpoint_base, std::string embedding_model,
                           RetryPolicy policy)
    : embedding_model_(std::move(embedding_model)), policy_(policy) {
    policy_.validate();
    // split "http://host:port/prefix" into client target and path prefix
    const size_t scheme_end = endpoint_base.find("://");
    const size_t path_start =
        endpoint_base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = endpoint_base;
    } else {
        scheme_host_port_ = endpoint_base.substr(0, path_start);
        path_prefix_ = endpoint_base.substr(path_start);
        while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
    if (const char* key = std::getenv("QA_FORGE_API_KEY")) api_key_ = key;
    limiter_ = std::make_unique<InFlightLimiter>(policy_.max_in_flight);
}

std::string ModelGateway::post_with_retry(const std::string& path, const std::string& body,
                                          const RetryPolicy& policy, long* latency_ms) {
    policy.validate();
    enum class Failure { unreachable, throttled } last_failure = Failure::unreachable;
    std::string last_detail;

    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        if (attempt > 1) {
            const long delay = policy.backoff_base_ms * (1L << (attempt - 2));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Result result;
        const auto started = std::chrono::steady_clock::now();
        {
            InFlightGuard guard(*limiter_);
            httplib::Client client(scheme_host_port_);
            client.set_connection_timeout(5, 0);
            client.set_read_timeout(120, 0);
            client.set_write_timeout(30, 0);
            httplib::Headers headers;
            if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
            result = client.Post(path_prefix_ + path, headers, body, "application/json");
        }
        if (latency_ms) {
            *latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
        }
        if (!result) {
            last_failure = Failure::unreachable;
            last_detail = httplib::to_string(result.error());
            continue;
        }
        const int status = result->status;
        if (status == 401 || status == 403) {
            throw AuthRejected("endpoint rejected credential (http " + std::to_string(status) + ")");
        }
        if (status == 429) {
            last_failure = Failure::throttled;
            last_detail = "http 429";
            continue;
        }
        if (status >= 500) {
            last_failure = Failure::unreachable;
            last_detail = "http " + std::to_string(status);
            continue;
        }
        if (status != 200) {
            throw MalformedResponse("unexpected http status " + std::to_string(status) + ": " +
                                    result->body.substr(0, 200));
        }
        return result->body;
    }
    if (last_failure == Failure::throttled) {
        throw Throttled("endpoint still throttling after " + std::to_string(policy.max_attempts) +
                        " attempts");
    }
    throw EndpointUnreachable("endpoint unreachable after " + std::to_string(policy.max_attempts) +
                              " attempts (" + last_detail + ")");
}

ChatResponse ModelGateway::chat_complete(const ChatRequest& req) {
    return chat_complete(req, policy_);
}

ChatResponse ModelGateway::chat_complete(const ChatRequest& req, const RetryPolicy& policy) {
    if (req.user_prompt.empty()) throw std::invalid_argument("chat request needs a user prompt");

    json messages = json::array();
    if (!req.system_prompt.empty()) {
        messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
    const json payload = {
        {"model", req.model_name},
        {"messages", messages},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };

    long latency = 0;
    const std::string body = post_with_retry("/chat/completions", payload.dump(), policy, &latency);

    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("completion body is not JSON: ") + e.what());
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty()) {
        throw MalformedResponse("completion carries no choices");
    }
    const json& choice = parsed["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw MalformedResponse("completion choice carries no message content");
    }
    ChatResponse response;
    response.text = choice["message"]["content"].get<std::string>();
    response.finish_reason = parse_finish_reason(choice);
    response.latency_ms = latency;
    return response;
}

std::vector<EmbeddingVector> ModelGateway::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) throw std::invalid_argument("embed_batch requires at least one text");
    for (const std::string& t : texts) {
        if (t.empty()) throw std::invalid_argument("embed_batch texts must be non-empty");
    }

    const json payload = {{"model", embedding_model_}, {"input", texts}};
    const std::string body = post_with_retry("/embeddings", payload.dump(), policy_, nullptr);

    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("embedding body is not JSON: ") + e.what());
    }
    if (!parsed.contains("data") || !parsed["data"].is_array()) {
        throw MalformedResponse("embedding response carries no data array");
    }
    const json& data = parsed["data"];
    if (data.size() != texts.size()) {
        throw MalformedResponse("embedding count " + std::to_string(data.size()) +
                                " does not match input count " + std::to_string(texts.size()));
    }

    std::vector<EmbeddingVector> vectors(texts.size());
    for (size_t i = 0; i < data.size(); ++i) {
        const json& item = data[i];
        if (!item.contains("embedding") || !item["embedding"].is_array()) {
            throw MalformedResponse("embedding item carries no embedding array");
        }
        const size_t index = item.contains("index") ? item["index"].get<size_t>() : i;
        if (index >= vectors.size()) throw MalformedResponse("embedding index out of range");
        EmbeddingVector v;
        v.values = item["embedding"].get<std::vector<double>>();
        v.dim = v.values.size();
        vectors[index] = std::move(v);
    }
    const size_t dim = vectors.front().dim;
    for (const EmbeddingVector& v : vectors) {
        if (v.dim == 0) throw MalformedResponse("embedding batch has a missing entry");
        if (v.dim != dim) {
            throw DimensionMismatch("server returned ragged embedding batch: " +
                                    std::to_string(v.dim) + " vs " + std::to_string(dim));
        }
    }
    return vectors;
}

}  // namespace qaforge
