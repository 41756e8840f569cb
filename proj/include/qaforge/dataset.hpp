#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "qaforge/gateway.hpp"
#include "qaforge/qa_gen.hpp"

namespace qaforge {

inline constexpr const char* kSystemDelimiter = "<|system|>";
inline constexpr const char* kUserDelimiter = "<|user|>";
inline constexpr const char* kAssistantDelimiter = "<|assistant|>";

enum class Split { train, test };

std::string to_string(Split s);

struct DatasetRecord {
    std::string id;
    std::string text;  // full chat-formatted sample
    std::size_t response_char_start = 0;
    std::string question;
    std::string answer;
    QAType qa_type = QAType::factual;
    std::string species;
    Split split = Split::train;
    std::string derived_from;
};

struct SplitConfig {
    double test_fraction = 0.10;
    std::uint64_t seed = 0;
    bool stratify_species = true;
    bool stratify_qa_type = true;

    void validate() const;
};

struct TrainingConfigExport {
    int lora_rank = 16;  // restricted to {8, 16, 32}
    double learning_rate = 5e-5;
    int warmup_steps = 100;
    int gradient_accumulation_steps = 8;
    int early_stopping_patience = 3;
    int eval_interval_steps = 200;
    int per_device_batch_size = 1;

    void validate() const;
    bool operator==(const TrainingConfigExport&) const = default;
};

// Exact duplicates (case-folded, whitespace-collapsed question equality)
// go first, then near-duplicates by question token-F1 at or above the
// threshold; the later pair in (doc_id, segment_index, id) order is the one
// dropped. Survivors keep first-seen order. Idempotent.
std::vector<QAPair> dedup_pairs(const std::vector<QAPair>& pairs, double near_dup_threshold);

// One question paraphrase per pair when enabled (answers preserved
// verbatim); paraphrases run through dedup_pairs before merging and carry
// derived_from = source id. Disabled is the identity.
std::vector<QAPair> augment_pairs(const std::vector<QAPair>& pairs, ModelGateway* gateway,
                                  bool enabled, const RetryPolicy& policy,
                                  const std::string& model_name, double near_dup_threshold,
                                  std::vector<GenerationDiagnostic>* diagnostics = nullptr);

// Deterministic seeded stratified split over (species x qa_type) cells.
// Throws DegenerateSplit when the test side would be empty.
std::pair<std::vector<QAPair>, std::vector<QAPair>> split_dataset(
    const std::vector<QAPair>& pairs, const SplitConfig& cfg);

// "<|system|>" + system + "<|user|>" + question + "<|assistant|>" + answer,
// with response_char_start immediately after the assistant delimiter.
// Throws DelimiterCollision when any field contains a delimiter string.
DatasetRecord serialize_record(const QAPair& pair, const std::string& system_prompt);

void export_training_config(const TrainingConfigExport& cfg, const std::string& path);
TrainingConfigExport load_training_config(const std::string& path);

void write_records_jsonl(const std::string& path, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_records_jsonl(const std::string& path);

}  // namespace qaforge
