#pragma once

#include <string>

#include "qaforge/config.hpp"

namespace qaforge {

// Stage drivers. Each reads the previous stage's artifact files from
// cfg.output_dir, writes its own artifacts plus a manifest_<stage>.json,
// and is byte-stable for a fixed (inputs, seed). Missing stage inputs
// raise ConfigError naming the stage to run first.
void run_ingest(const PipelineConfig& cfg);
void run_chunk(const PipelineConfig& cfg);
void run_generate(const PipelineConfig& cfg);
void run_build(const PipelineConfig& cfg);
void run_evaluate(const PipelineConfig& cfg);
std::string run_report(const PipelineConfig& cfg);

// All stages in order; last_stage limits the run ("" means everything).
void run_pipeline(const PipelineConfig& cfg, const std::string& last_stage = "");

// Artifact locations within an output directory.
std::string documents_path(const PipelineConfig& cfg);
std::string chunks_path(const PipelineConfig& cfg);
std::string pairs_path(const PipelineConfig& cfg);
std::string generate_diagnostics_path(const PipelineConfig& cfg);
std::string train_path(const PipelineConfig& cfg);
std::string test_path(const PipelineConfig& cfg);
std::string training_config_path(const PipelineConfig& cfg);
std::string samples_path(const PipelineConfig& cfg);
std::string report_json_path(const PipelineConfig& cfg);
std::string report_text_path(const PipelineConfig& cfg);

}  // namespace qaforge
