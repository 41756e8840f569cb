#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "qaforge/chunker.hpp"
#include "qaforge/dataset.hpp"
#include "qaforge/eval.hpp"
#include "qaforge/gateway.hpp"

namespace qaforge {

// Ships with the toolkit as a reasonable default; supply your own for
// serious runs (config key system_prompt).
inline constexpr const char* kDefaultSystemPrompt =
    "You are an agricultural pest management assistant. Answer questions about "
    "invasive insect species accurately and concisely.";

struct PipelineConfig {
    std::string corpus_manifest_path;
    std::string output_dir;
    std::string endpoint_base;
    std::string generator_model;
    std::string embedding_model;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string system_prompt = kDefaultSystemPrompt;

    ChunkConfig chunk;
    double gen_temperature = 0.2;
    int gen_max_tokens = 1024;
    bool augment_enabled = false;
    double near_dup_threshold = 0.90;
    SplitConfig split;
    EvalConfig eval;
    RetryPolicy retry;
    TrainingConfigExport training;

    void validate() const;  // throws ConfigError
};

// Flat key/value + [section] configuration file. Unknown keys are rejected.
PipelineConfig load_pipeline_config(const std::string& path);

// Config echo embedded in every stage manifest.
std::string config_echo_json(const PipelineConfig& cfg);

}  // namespace qaforge
