#include "qaforge/config.hpp"

#include <filesystem>

#include <json.hpp>

#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (corpus_manifest_path.empty()) throw ConfigError("corpus_manifest is required");
    if (output_dir.empty()) throw ConfigError("output_dir is required");
    if (!seed_set) throw ConfigError("seed is required (reproducibility has no wall-clock default)");
    if (!(near_dup_threshold > 0.0 && near_dup_threshold <= 1.0)) {
        throw ConfigError("dedup.near_dup_threshold must be in (0, 1]");
    }
    if (gen_max_tokens <= 0) throw ConfigError("generation.max_tokens must be > 0");
    if (gen_temperature < 0.0 || gen_temperature > 2.0) {
        throw ConfigError("generation.temperature must be in [0, 2]");
    }
    chunk.validate();
    split.validate();
    eval.validate();
    retry.validate();
    training.validate();
}

namespace {

bool parse_bool(const std::string& value, const std::string& key) {
    const std::string v = to_lower_ascii(value);
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError("expected a boolean for " + key + ", got \"" + value + "\"");
}

double parse_double(const std::string& value, const std::string& key) {
    try {
        size_t consumed = 0;
        const double d = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("expected a number for " + key + ", got \"" + value + "\"");
    }
}

long parse_int(const std::string& value, const std::string& key) {
    try {
        size_t consumed = 0;
        const long v = std::stol(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer for " + key + ", got \"" + value + "\"");
    }
}

void apply_stratify(SplitConfig& split, const std::string& value) {
    split.stratify_species = false;
    split.stratify_qa_type = false;
    if (to_lower_ascii(trim(value)) == "none" || trim(value).empty()) return;
    for (const std::string& part : split_on(value, ',')) {
        const std::string p = to_lower_ascii(trim(part));
        if (p == "species") split.stratify_species = true;
        else if (p == "qa_type") split.stratify_qa_type = true;
        else throw ConfigError("split.stratify_by accepts species, qa_type, or none; got \"" + p + "\"");
    }
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    PipelineConfig cfg;
    cfg.eval.system_prompt.clear();  // filled after parse if left unset
    bool eval_model_set = false;

    const std::string content = read_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::string section;
    int line_no = 0;
    for (const std::string& raw_line : split_on(content, '\n')) {
        ++line_no;
        const std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("unterminated section header at line " + std::to_string(line_no));
            }
            section = to_lower_ascii(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = to_lower_ascii(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qualified = section.empty() ? key : section + "." + key;

        if (qualified == "corpus_manifest") {
            std::filesystem::path p(value);
            cfg.corpus_manifest_path = (p.is_relative() ? base / p : p).string();
        } else if (qualified == "output_dir") {
            std::filesystem::path p(value);
            cfg.output_dir = (p.is_relative() ? base / p : p).string();
        } else if (qualified == "endpoint_base") {
            cfg.endpoint_base = value;
        } else if (qualified == "generator_model") {
            cfg.generator_model = value;
        } else if (qualified == "embedding_model") {
            cfg.embedding_model = value;
        } else if (qualified == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(value, qualified));
            cfg.seed_set = true;
        } else if (qualified == "system_prompt") {
            cfg.system_prompt = value;
        } else if (qualified == "chunk.window_chars") {
            cfg.chunk.window_chars = static_cast<std::size_t>(parse_int(value, qualified));
        } else if (qualified == "chunk.overlap_chars") {
            cfg.chunk.overlap_chars = static_cast<std::size_t>(parse_int(value, qualified));
        } else if (qualified == "chunk.backscan_chars") {
            cfg.chunk.backscan_chars = static_cast<std::size_t>(parse_int(value, qualified));
        } else if (qualified == "generation.temperature") {
            cfg.gen_temperature = parse_double(value, qualified);
        } else if (qualified == "generation.max_tokens") {
            cfg.gen_max_tokens = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "augment.enabled") {
            cfg.augment_enabled = parse_bool(value, qualified);
        } else if (qualified == "dedup.near_dup_threshold") {
            cfg.near_dup_threshold = parse_double(value, qualified);
        } else if (qualified == "split.test_fraction") {
            cfg.split.test_fraction = parse_double(value, qualified);
        } else if (qualified == "split.stratify_by") {
            apply_stratify(cfg.split, value);
        } else if (qualified == "eval.model_name") {
            cfg.eval.model_name = value;
            eval_model_set = true;
        } else if (qualified == "eval.system_prompt") {
            cfg.eval.system_prompt = value;
        } else if (qualified == "eval.temperature") {
            cfg.eval.temperature = parse_double(value, qualified);
        } else if (qualified == "eval.max_tokens") {
            cfg.eval.max_tokens = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "eval.similarity_normalization") {
            const std::string v = to_lower_ascii(value);
            if (v == "affine") cfg.eval.similarity_normalization = SimilarityNormalization::affine;
            else if (v == "clamp") cfg.eval.similarity_normalization = SimilarityNormalization::clamp;
            else throw ConfigError("eval.similarity_normalization must be affine or clamp");
        } else if (qualified == "thresholds.min_embedding_similarity") {
            cfg.eval.thresholds.min_embedding_similarity = parse_double(value, qualified);
        } else if (qualified == "thresholds.min_token_f1") {
            cfg.eval.thresholds.min_token_f1 = parse_double(value, qualified);
        } else if (qualified == "retry.max_attempts") {
            cfg.retry.max_attempts = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "retry.backoff_base_ms") {
            cfg.retry.backoff_base_ms = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "retry.max_in_flight") {
            cfg.retry.max_in_flight = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.lora_rank") {
            cfg.training.lora_rank = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.learning_rate") {
            cfg.training.learning_rate = parse_double(value, qualified);
        } else if (qualified == "training.warmup_steps") {
            cfg.training.warmup_steps = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.gradient_accumulation_steps") {
            cfg.training.gradient_accumulation_steps = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.early_stopping_patience") {
            cfg.training.early_stopping_patience = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.eval_interval_steps") {
            cfg.training.eval_interval_steps = static_cast<int>(parse_int(value, qualified));
        } else if (qualified == "training.per_device_batch_size") {
            cfg.training.per_device_batch_size = static_cast<int>(parse_int(value, qualified));
        } else {
            throw ConfigError("unknown configuration key \"" + qualified + "\" at line " +
                              std::to_string(line_no));
        }
    }

    cfg.split.seed = cfg.seed;
    if (!eval_model_set) cfg.eval.model_name = cfg.generator_model;
    if (cfg.eval.system_prompt.empty()) cfg.eval.system_prompt = cfg.system_prompt;
    return cfg;
}

std::string config_echo_json(const PipelineConfig& cfg) {
    json j;
    j["corpus_manifest"] = cfg.corpus_manifest_path;
    j["output_dir"] = cfg.output_dir;
    j["endpoint_base"] = cfg.endpoint_base;
    j["generator_model"] = cfg.generator_model;
    j["embedding_model"] = cfg.embedding_model;
    j["seed"] = cfg.seed;
    j["system_prompt"] = cfg.system_prompt;
    j["chunk"] = {{"window_chars", cfg.chunk.window_chars},
                  {"overlap_chars", cfg.chunk.overlap_chars},
                  {"backscan_chars", cfg.chunk.backscan_chars}};
    j["generation"] = {{"temperature", cfg.gen_temperature}, {"max_tokens", cfg.gen_max_tokens}};
    j["augment"] = {{"enabled", cfg.augment_enabled}};
    j["dedup"] = {{"near_dup_threshold", cfg.near_dup_threshold}};
    j["split"] = {{"test_fraction", cfg.split.test_fraction},
                  {"stratify_species", cfg.split.stratify_species},
                  {"stratify_qa_type", cfg.split.stratify_qa_type}};
    j["eval"] = {{"model_name", cfg.eval.model_name},
                 {"system_prompt", cfg.eval.system_prompt},
                 {"temperature", cfg.eval.temperature},
                 {"max_tokens", cfg.eval.max_tokens},
                 {"similarity_normalization",
                  cfg.eval.similarity_normalization == SimilarityNormalization::affine ? "affine"
                                                                                       : "clamp"}};
    j["thresholds"] = {{"min_embedding_similarity", cfg.eval.thresholds.min_embedding_similarity},
                       {"min_token_f1", cfg.eval.thresholds.min_token_f1}};
    j["retry"] = {{"max_attempts", cfg.retry.max_attempts},
                  {"backoff_base_ms", cfg.retry.backoff_base_ms},
                  {"max_in_flight", cfg.retry.max_in_flight}};
    j["training"] = {{"lora_rank", cfg.training.lora_rank},
                     {"learning_rate", cfg.training.learning_rate},
                     {"warmup_steps", cfg.training.warmup_steps},
                     {"gradient_accumulation_steps", cfg.training.gradient_accumulation_steps},
                     {"early_stopping_patience", cfg.training.early_stopping_patience},
                     {"eval_interval_steps", cfg.training.eval_interval_steps},
                     {"per_device_batch_size", cfg.training.per_device_batch_size}};
    return j.dump(1);
}

}  // namespace qaforge
