#include "qaforge/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "qaforge/chunker.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/eval.hpp"
#include "qaforge/ingest.hpp"
#include "qaforge/qa_gen.hpp"
#include "qaforge/util.hpp"
#include "qaforge/version.hpp"

namespace qaforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const PipelineConfig& cfg, const char* name) {
    return (fs::path(cfg.output_dir) / name).string();
}

void write_manifest(const PipelineConfig& cfg, const std::string& stage, const json& counts) {
    json manifest;
    manifest["stage"] = stage;
    manifest["version"] = kVersion;
    manifest["seed"] = cfg.seed;
    manifest["config"] = json::parse(config_echo_json(cfg));
    manifest["counts"] = counts;
    write_file(join(cfg, ("manifest_" + stage + ".json").c_str()), manifest.dump(1) + "\n");
}

void require_artifact(const std::string& path, const std::string& producing_stage) {
    if (!fs::exists(path)) {
        throw ConfigError("missing stage input " + path + "; run `" + producing_stage + "` first");
    }
}

ModelGateway make_gateway(const PipelineConfig& cfg) {
    if (cfg.endpoint_base.empty()) {
        throw ConfigError("endpoint_base is required for stages that call the model endpoint");
    }
    return ModelGateway(cfg.endpoint_base, cfg.embedding_model, cfg.retry);
}

}  // namespace

std::string documents_path(const PipelineConfig& cfg) { return join(cfg, "documents.tsv"); }
std::string chunks_path(const PipelineConfig& cfg) { return join(cfg, "chunks.tsv"); }
std::string pairs_path(const PipelineConfig& cfg) { return join(cfg, "pairs.tsv"); }
std::string generate_diagnostics_path(const PipelineConfig& cfg) {
    return join(cfg, "generate_diagnostics.log");
}
std::string train_path(const PipelineConfig& cfg) { return join(cfg, "train.jsonl"); }
std::string test_path(const PipelineConfig& cfg) { return join(cfg, "test.jsonl"); }
std::string training_config_path(const PipelineConfig& cfg) {
    return join(cfg, "training_config.txt");
}
std::string samples_path(const PipelineConfig& cfg) { return join(cfg, "samples.jsonl"); }
std::string report_json_path(const PipelineConfig& cfg) { return join(cfg, "report.json"); }
std::string report_text_path(const PipelineConfig& cfg) { return join(cfg, "report.txt"); }

void run_ingest(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    const auto entries = read_corpus_manifest(cfg.corpus_manifest_path);
    std::vector<std::string> paths;
    std::map<std::string, std::string> species_map;
    for (const auto& [path, species] : entries) {
        paths.push_back(path);
        species_map[path] = species;
    }
    const std::vector<Document> docs = load_corpus(paths, species_map);
    write_documents_tsv(documents_path(cfg), docs);

    std::size_t total_chars = 0;
    for (const Document& d : docs) total_chars += d.char_count;
    write_manifest(cfg, "ingest", {{"documents", docs.size()}, {"total_chars", total_chars}});
}

void run_chunk(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    require_artifact(documents_path(cfg), "ingest");
    const auto docs = read_documents_tsv(documents_path(cfg));
    std::vector<Chunk> all;
    for (const Document& doc : docs) {
        auto chunks = chunk_document(doc, cfg.chunk);
        all.insert(all.end(), std::make_move_iterator(chunks.begin()),
                   std::make_move_iterator(chunks.end()));
    }
    write_chunks_tsv(chunks_path(cfg), all);
    write_manifest(cfg, "chunk", {{"documents", docs.size()}, {"chunks", all.size()}});
}

void run_generate(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    require_artifact(chunks_path(cfg), "chunk");
    require_artifact(documents_path(cfg), "ingest");
    const auto chunks = read_chunks_tsv(chunks_path(cfg));
    std::map<std::string, std::string> species_by_doc;
    for (const Document& d : read_documents_tsv(documents_path(cfg))) {
        species_by_doc[d.id] = d.species;
    }

    ModelGateway gateway = make_gateway(cfg);
    ChatRequest defaults;
    defaults.model_name = cfg.generator_model;
    defaults.temperature = cfg.gen_temperature;
    defaults.max_tokens = cfg.gen_max_tokens;

    std::vector<std::vector<QAPair>> per_chunk(chunks.size());
    std::vector<std::vector<GenerationDiagnostic>> per_chunk_diags(chunks.size());
    std::vector<int> calls(chunks.size(), 0);
    parallel_for(chunks.size(), cfg.retry.max_in_flight, [&](size_t i) {
        const auto species_it = species_by_doc.find(chunks[i].doc_id);
        const std::string species =
            species_it != species_by_doc.end() ? species_it->second : "unlabeled";
        per_chunk[i] = generate_for_chunk(chunks[i], species, gateway, cfg.retry, defaults,
                                          &per_chunk_diags[i], &calls[i]);
    });

    std::vector<QAPair> pairs;
    std::vector<GenerationDiagnostic> failures;
    int total_calls = 0;
    for (size_t i = 0; i < chunks.size(); ++i) {
        pairs.insert(pairs.end(), per_chunk[i].begin(), per_chunk[i].end());
        failures.insert(failures.end(), per_chunk_diags[i].begin(), per_chunk_diags[i].end());
        total_calls += calls[i];
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const QAPair& a, const QAPair& b) {
        if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
        return a.segment_index < b.segment_index;
    });
    write_pairs_tsv(pairs_path(cfg), pairs);

    // sidecar: hard failures plus soft groundedness flags for human review
    std::map<std::pair<std::string, std::size_t>, const Chunk*> chunk_index;
    for (const Chunk& c : chunks) chunk_index[{c.doc_id, c.segment_index}] = &c;
    std::string log;
    for (const GenerationDiagnostic& d : failures) {
        log += "generation-failure\t" + d.doc_id + "\t" + std::to_string(d.segment_index) + "\t" +
               std::to_string(d.attempts) + "\t" + tsv_escape(d.last_error) + "\n";
    }
    std::size_t flagged = 0;
    for (const QAPair& p : pairs) {
        const auto it = chunk_index.find({p.doc_id, p.segment_index});
        if (it == chunk_index.end()) continue;
        const double overlap = groundedness_overlap(p, *it->second);
        if (overlap < kGroundednessReviewFloor) {
            ++flagged;
            log += "groundedness-review\t" + p.doc_id + "\t" + std::to_string(p.segment_index) +
                   "\t" + p.id + "\t" + format_double(overlap) + "\t" + tsv_escape(p.question) +
                   "\n";
        }
    }
    write_file(generate_diagnostics_path(cfg), log);

    write_manifest(cfg, "generate",
                   {{"chunks", chunks.size()},
                    {"pairs", pairs.size()},
                    {"generation_failures", failures.size()},
                    {"flagged_for_review", flagged},
                    {"chat_calls", total_calls}});
}

void run_build(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    require_artifact(pairs_path(cfg), "generate");
    const auto raw_pairs = read_pairs_tsv(pairs_path(cfg));

    const std::vector<QAPair> deduped = dedup_pairs(raw_pairs, cfg.near_dup_threshold);

    std::vector<QAPair> augmented;
    std::vector<GenerationDiagnostic> augment_diags;
    if (cfg.augment_enabled) {
        ModelGateway gateway = make_gateway(cfg);
        augmented = augment_pairs(deduped, &gateway, true, cfg.retry, cfg.generator_model,
                                  cfg.near_dup_threshold, &augment_diags);
    } else {
        augmented = deduped;
    }

    SplitConfig split_cfg = cfg.split;
    split_cfg.seed = cfg.seed;
    auto [train_pairs, test_pairs] = split_dataset(augmented, split_cfg);

    auto serialize_all = [&](const std::vector<QAPair>& side, Split split) {
        std::vector<DatasetRecord> records;
        records.reserve(side.size());
        for (const QAPair& p : side) {
            DatasetRecord r = serialize_record(p, cfg.system_prompt);
            r.split = split;
            records.push_back(std::move(r));
        }
        return records;
    };
    const auto train_records = serialize_all(train_pairs, Split::train);
    const auto test_records = serialize_all(test_pairs, Split::test);
    write_records_jsonl(train_path(cfg), train_records);
    write_records_jsonl(test_path(cfg), test_records);
    export_training_config(cfg.training, training_config_path(cfg));

    std::map<std::string, std::size_t> cell_counts;
    for (const QAPair& p : augmented) ++cell_counts[p.species + "|" + to_string(p.qa_type)];
    json cells = json::object();
    for (const auto& [key, count] : cell_counts) cells[key] = count;
    write_manifest(cfg, "build",
                   {{"pairs_in", raw_pairs.size()},
                    {"after_dedup", deduped.size()},
                    {"after_augment", augmented.size()},
                    {"augmentation_enabled", cfg.augment_enabled},
                    {"augment_failures", augment_diags.size()},
                    {"train", train_records.size()},
                    {"test", test_records.size()},
                    {"cells", cells}});
}

void run_evaluate(const PipelineConfig& cfg) {
    fs::create_directories(cfg.output_dir);
    require_artifact(test_path(cfg), "build");
    const auto test_set = read_records_jsonl(test_path(cfg));
    if (test_set.empty()) throw ConfigError("test set is empty; rebuild with more pairs");

    ModelGateway gateway = make_gateway(cfg);
    const EvalRun run = evaluate_model(test_set, gateway, cfg.eval);

    write_sample_rows_jsonl(samples_path(cfg), run.rows);
    write_file(report_json_path(cfg), report_to_json(run.report) + "\n");
    write_file(report_text_path(cfg), render_report(run.report));

    write_manifest(cfg, "evaluate",
                   {{"n", run.report.n},
                    {"truncations", run.report.truncation_count},
                    {"pass_rate_pct", run.report.overall.pass_rate_pct},
                    {"dataset_digest", run.report.dataset_digest}});
}

std::string run_report(const PipelineConfig& cfg) {
    require_artifact(report_json_path(cfg), "evaluate");
    return render_report(report_from_json(read_file(report_json_path(cfg))));
}

void run_pipeline(const PipelineConfig& cfg, const std::string& last_stage) {
    static const std::vector<std::pair<std::string, void (*)(const PipelineConfig&)>> stages = {
        {"ingest", run_ingest},   {"chunk", run_chunk},       {"generate", run_generate},
        {"build", run_build},     {"evaluate", run_evaluate},
    };
    if (!last_stage.empty()) {
        const bool known = last_stage == "report" ||
                           std::any_of(stages.begin(), stages.end(),
                                       [&](const auto& s) { return s.first == last_stage; });
        if (!known) throw ConfigError("unknown stage \"" + last_stage + "\"");
    }
    for (const auto& [name, fn] : stages) {
        fn(cfg);
        if (name == last_stage) return;
    }
}

}  // namespace qaforge
