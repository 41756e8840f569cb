#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace qaforge {

struct RetryPolicy {
    int max_attempts = 3;
    int backoff_base_ms = 500;
    int max_in_flight = 4;

    void validate() const;  // max_attempts in [1, 10], max_in_flight >= 1
};

enum class FinishReason { stop, length, error };

std::string to_string(FinishReason r);

struct ChatRequest {
    std::string system_prompt;
    std::string user_prompt;  // must be non-empty
    double temperature = 0.2;
    int max_tokens = 1024;
    std::string model_name;
};

struct ChatResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    long latency_ms = 0;
};

struct EmbeddingVector {
    std::vector<double> values;
    std::size_t dim = 0;
};

// Bounds the number of requests in flight across all worker threads.
class InFlightLimiter {
  public:
    explicit InFlightLimiter(int limit) : available_(limit) {}
    void acquire();
    void release();

  private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

// Client for an OpenAI-style chat-completions + embeddings endpoint.
// Transport failures, 429 and 5xx are retried with exponential backoff up
// to the policy bound; well-formed completions are never retried. The
// credential comes from the QA_FORGE_API_KEY environment variable only.
class ModelGateway {
  public:
    ModelGateway(const std::string& endpoint_base, std::string embedding_model,
                 RetryPolicy policy);

    ChatResponse chat_complete(const ChatRequest& req);
    ChatResponse chat_complete(const ChatRequest& req, const RetryPolicy& policy);

    // One vector per input text, order preserving, uniform dimension.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);

    const RetryPolicy& policy() const { return policy_; }

  private:
    std::string post_with_retry(const std::string& path, const std::string& body,
                                const RetryPolicy& policy, long* latency_ms);

    std::string scheme_host_port_;
    std::string path_prefix_;
    std::string embedding_model_;
    std::string api_key_;
    RetryPolicy policy_;
    std::unique_ptr<InFlightLimiter> limiter_;
};

}  // namespace qaforge
