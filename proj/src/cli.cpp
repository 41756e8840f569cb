#include "qaforge/cli.hpp"

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qaforge/errors.hpp"
#include "qaforge/eval.hpp"
#include "qaforge/pipeline.hpp"
#include "qaforge/util.hpp"
#include "qaforge/version.hpp"

namespace qaforge {

namespace {

struct CommonOptions {
    std::string config_path;
    long seed_override = -1;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline configuration file")->required();
    cmd->add_option("--seed-override", opts.seed_override, "override the configured seed");
    cmd->add_flag("--dry-run", opts.dry_run, "validate the configuration and exit");
}

PipelineConfig load_and_validate(const CommonOptions& opts) {
    PipelineConfig cfg = load_pipeline_config(opts.config_path);
    if (opts.seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
        cfg.seed_set = true;
        cfg.split.seed = cfg.seed;
    }
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);
    return cfg;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"qa-forge: corpus-to-QA dataset construction and model evaluation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions opts;
    std::string pipeline_stage;
    std::vector<std::string> report_inputs;

    CLI::App* ingest = app.add_subcommand("ingest", "extract and normalize the corpus");
    CLI::App* chunk = app.add_subcommand("chunk", "segment documents into generation units");
    CLI::App* generate = app.add_subcommand("generate", "generate Q/A pairs per chunk");
    CLI::App* build =
        app.add_subcommand("build", "dedup, augment, split, and serialize training records");
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the model under test and score it");
    CLI::App* report = app.add_subcommand("report", "render a stored report (or compare several)");
    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage in order");
    for (CLI::App* cmd : {ingest, chunk, generate, build, evaluate, report, pipeline}) {
        add_common(cmd, opts);
    }
    pipeline->add_option("--stage", pipeline_stage, "run stages up to and including this one");
    report->add_option("--in", report_inputs,
                       "report JSON files; two or more renders a model comparison");

    try {
        std::vector<std::string> argv = args;
        std::reverse(argv.begin(), argv.end());  // CLI11 parses reversed vectors
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const PipelineConfig cfg = load_and_validate(opts);
        if (opts.dry_run) {
            std::cout << "configuration OK\n";
            return 0;
        }
        if (ingest->parsed()) {
            run_ingest(cfg);
        } else if (chunk->parsed()) {
            run_chunk(cfg);
        } else if (generate->parsed()) {
            run_generate(cfg);
        } else if (build->parsed()) {
            run_build(cfg);
        } else if (evaluate->parsed()) {
            run_evaluate(cfg);
        } else if (report->parsed()) {
            if (report_inputs.size() >= 2) {
                std::vector<EvalReport> reports;
                for (const std::string& path : report_inputs) {
                    reports.push_back(report_from_json(read_file(path)));
                }
                std::cout << compare_models(reports);
            } else if (report_inputs.size() == 1) {
                std::cout << render_report(report_from_json(read_file(report_inputs[0])));
            } else {
                std::cout << run_report(cfg);
            }
        } else if (pipeline->parsed()) {
            run_pipeline(cfg, pipeline_stage);
            if (pipeline_stage.empty() || pipeline_stage == "report") {
                std::cout << run_report(cfg);
            }
        }
        return 0;
    } catch (const EndpointError& e) {
        std::cerr << "endpoint failure: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace qaforge
