#pragma once

#include <map>
#include <string>
#include <vector>

#include "qaforge/dataset.hpp"
#include "qaforge/gateway.hpp"
#include "qaforge/metrics.hpp"

namespace qaforge {

struct EvalConfig {
    std::string model_name;
    std::string system_prompt;
    double temperature = 0.0;
    int max_tokens = 512;
    JudgeThresholds thresholds;
    SimilarityNormalization similarity_normalization = SimilarityNormalization::affine;

    void validate() const;
    bool operator==(const EvalConfig&) const = default;
};

struct Aggregates {
    std::size_t n = 0;
    double mean_bleu = 0.0;
    double mean_rouge1 = 0.0;
    double mean_rouge2 = 0.0;
    double mean_rougeL = 0.0;
    double mean_embedding_similarity = 0.0;
    double mean_token_f1 = 0.0;
    double pass_rate_pct = 0.0;
    double exact_match_rate = 0.0;

    bool operator==(const Aggregates&) const = default;
};

// One row per evaluated sample, persisted for audit.
struct SampleRow {
    std::string record_id;
    std::string question;
    std::string reference;
    std::string response;
    FinishReason finish_reason = FinishReason::stop;
    QAType qa_type = QAType::factual;
    std::string species;
    SampleMetrics metrics;
    std::string diagnostic;
};

struct EvalReport {
    std::size_t n = 0;
    Aggregates overall;
    std::map<std::string, Aggregates> by_qa_type;
    std::map<std::string, Aggregates> by_species;
    std::size_t truncation_count = 0;
    std::string dataset_digest;
    EvalConfig config_echo;

    bool operator==(const EvalReport&) const = default;
};

struct EvalRun {
    EvalReport report;
    std::vector<SampleRow> rows;
};

// Identity of a test set: n plus a digest over the sorted record ids.
std::string dataset_digest(const std::vector<DatasetRecord>& records);

// Sends each held-out question through the gateway, scores the response
// against the reference answer, and aggregates. Truncated responses are
// counted and still scored; a malformed per-sample response scores zero
// with a diagnostic. Endpoint-level failures abort.
EvalRun evaluate_model(const std::vector<DatasetRecord>& test_set, ModelGateway& gateway,
                       const EvalConfig& cfg);

// Table-I-style plain-text table plus per-type / per-species breakdowns
// and the truncation count.
std::string render_report(const EvalReport& report);

// Structured document with identical content; round-trips exactly.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

// Multi-column table over reports that share a test-set identity, with a
// delta column between the best and worst values per row.
std::string compare_models(const std::vector<EvalReport>& reports);

void write_sample_rows_jsonl(const std::string& path, const std::vector<SampleRow>& rows);

}  // namespace qaforge
