#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "qaforge/config.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

using namespace qaforge;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    TempDir() {
        path = fs::temp_directory_path() / ("qaforge_config_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path path;
};

std::string minimal_config() {
    return "corpus_manifest = corpus.tsv\n"
           "output_dir = out\n"
           "endpoint_base = http://127.0.0.1:9/v1\n"
           "generator_model = gen\n"
           "embedding_model = emb\n"
           "seed = 7\n";
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, minimal_config());
    const PipelineConfig cfg = load_pipeline_config(path);
    cfg.validate();
    CHECK(cfg.seed == 7);
    CHECK(cfg.chunk.window_chars == 4000);
    CHECK(cfg.chunk.overlap_chars == 800);
    CHECK(cfg.chunk.backscan_chars == 100);
    CHECK(cfg.split.test_fraction == 0.10);
    CHECK(cfg.split.stratify_species);
    CHECK(cfg.split.stratify_qa_type);
    CHECK(cfg.eval.temperature == 0.0);
    CHECK(cfg.eval.max_tokens == 512);
    CHECK(cfg.gen_max_tokens == 1024);
    CHECK(cfg.gen_temperature == 0.2);
    CHECK(cfg.eval.thresholds.min_embedding_similarity == 0.80);
    CHECK(cfg.eval.thresholds.min_token_f1 == 0.30);
    CHECK(cfg.retry.max_attempts == 3);
    CHECK(cfg.retry.max_in_flight == 4);
    CHECK(cfg.eval.model_name == "gen");  // falls back to generator_model
    CHECK(cfg.training.learning_rate == 5e-5);
    // relative paths resolve against the config location
    CHECK(cfg.corpus_manifest_path == (tmp.path / "corpus.tsv").string());
}

TEST_CASE("sections override defaults") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, minimal_config() +
                         "[chunk]\nwindow_chars = 500\noverlap_chars = 100\nbackscan_chars = 50\n"
                         "[split]\ntest_fraction = 0.2\nstratify_by = qa_type\n"
                         "[eval]\nmodel_name = other\nmax_tokens = 64\n"
                         "[thresholds]\nmin_token_f1 = 0.5\n"
                         "[retry]\nmax_attempts = 5\nbackoff_base_ms = 1\nmax_in_flight = 2\n"
                         "[training]\nlora_rank = 32\n");
    const PipelineConfig cfg = load_pipeline_config(path);
    cfg.validate();
    CHECK(cfg.chunk.window_chars == 500);
    CHECK(cfg.split.test_fraction == 0.2);
    CHECK_FALSE(cfg.split.stratify_species);
    CHECK(cfg.split.stratify_qa_type);
    CHECK(cfg.eval.model_name == "other");
    CHECK(cfg.eval.max_tokens == 64);
    CHECK(cfg.eval.thresholds.min_token_f1 == 0.5);
    CHECK(cfg.retry.max_attempts == 5);
    CHECK(cfg.training.lora_rank == 32);
}

TEST_CASE("seed is mandatory") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, "corpus_manifest = c.tsv\noutput_dir = out\n");
    CHECK_THROWS_AS(load_pipeline_config(path).validate(), ConfigError);
}

TEST_CASE("unknown keys and malformed lines are rejected") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, minimal_config() + "typo_key = 1\n");
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    write_file(path, minimal_config() + "no equals sign\n");
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    write_file(path, minimal_config() + "[unclosed\n");
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
    write_file(path, minimal_config() + "seed = notanumber\n");
    CHECK_THROWS_AS(load_pipeline_config(path), ConfigError);
}

TEST_CASE("invalid nested values fail validation") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, minimal_config() + "[chunk]\nwindow_chars = 100\noverlap_chars = 100\n");
    CHECK_THROWS_AS(load_pipeline_config(path).validate(), ConfigError);
    write_file(path, minimal_config() + "[split]\ntest_fraction = 1.5\n");
    CHECK_THROWS_AS(load_pipeline_config(path).validate(), ConfigError);
    write_file(path, minimal_config() + "[training]\nlora_rank = 12\n");
    CHECK_THROWS_AS(load_pipeline_config(path).validate(), ConfigError);
    write_file(path, minimal_config() + "[retry]\nmax_attempts = 99\n");
    CHECK_THROWS_AS(load_pipeline_config(path).validate(), ConfigError);
}

TEST_CASE("config echo is valid JSON and carries the seed") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, minimal_config());
    const PipelineConfig cfg = load_pipeline_config(path);
    const std::string echo = config_echo_json(cfg);
    CHECK(echo.find("\"seed\": 7") != std::string::npos);
    CHECK(echo.find("\"window_chars\": 4000") != std::string::npos);
}

TEST_CASE("comments and blank lines are ignored") {
    TempDir tmp;
    const auto path = (tmp.path / "config.ini").string();
    write_file(path, "# header comment\n; alt comment\n\n" + minimal_config());
    CHECK_NOTHROW(load_pipeline_config(path));
}
