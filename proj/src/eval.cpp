#include "qaforge/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

using nlohmann::json;

void EvalConfig::validate() const {
    if (max_tokens <= 0) throw ConfigError("eval.max_tokens must be > 0");
    if (temperature < 0.0 || temperature > 2.0) throw ConfigError("eval.temperature must be in [0, 2]");
    if (thresholds.min_embedding_similarity < 0.0 || thresholds.min_embedding_similarity > 1.0 ||
        thresholds.min_token_f1 < 0.0 || thresholds.min_token_f1 > 1.0) {
        throw ConfigError("judge thresholds must be in [0, 1]");
    }
}

std::string dataset_digest(const std::vector<DatasetRecord>& records) {
    std::vector<std::string> ids;
    ids.reserve(records.size());
    for (const DatasetRecord& r : records) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    std::string joined;
    for (const std::string& id : ids) {
        joined += id;
        joined += '\n';
    }
    return fnv1a64_hex(joined);
}

namespace {

Aggregates aggregate_rows(const std::vector<const SampleRow*>& rows) {
    Aggregates agg;
    agg.n = rows.size();
    if (rows.empty()) return agg;
    std::size_t passed = 0;
    std::size_t exact = 0;
    for (const SampleRow* row : rows) {
        agg.mean_bleu += row->metrics.bleu;
        agg.mean_rouge1 += row->metrics.rouge1;
        agg.mean_rouge2 += row->metrics.rouge2;
        agg.mean_rougeL += row->metrics.rougeL;
        agg.mean_embedding_similarity += row->metrics.embedding_similarity;
        agg.mean_token_f1 += row->metrics.token_f1;
        if (row->metrics.passed) ++passed;
        if (row->metrics.exact_match) ++exact;
    }
    const double n = static_cast<double>(rows.size());
    agg.mean_bleu /= n;
    agg.mean_rouge1 /= n;
    agg.mean_rouge2 /= n;
    agg.mean_rougeL /= n;
    agg.mean_embedding_similarity /= n;
    agg.mean_token_f1 /= n;
    agg.pass_rate_pct = 100.0 * static_cast<double>(passed) / n;
    agg.exact_match_rate = static_cast<double>(exact) / n;
    return agg;
}

}  // namespace

EvalRun evaluate_model(const std::vector<DatasetRecord>& test_set, ModelGateway& gateway,
                       const EvalConfig& cfg) {
    if (test_set.empty()) throw std::invalid_argument("evaluate_model needs a non-empty test set");
    cfg.validate();

    // deterministic processing order regardless of file order
    std::vector<DatasetRecord> records = test_set;
    std::sort(records.begin(), records.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.id < b.id; });

    std::vector<SampleRow> rows(records.size());
    parallel_for(records.size(), gateway.policy().max_in_flight, [&](size_t i) {
        const DatasetRecord& record = records[i];
        SampleRow row;
        row.record_id = record.id;
        row.question = record.question;
        row.reference = record.answer;
        row.qa_type = record.qa_type;
        row.species = record.species;

        ChatRequest request;
        request.system_prompt = cfg.system_prompt;
        request.user_prompt = record.question;
        request.temperature = cfg.temperature;
        request.max_tokens = cfg.max_tokens;
        request.model_name = cfg.model_name;
        try {
            const ChatResponse response = gateway.chat_complete(request);
            row.response = response.text;
            row.finish_reason = response.finish_reason;
            row.metrics = score_lexical(row.response, row.reference);
        } catch (const MalformedResponse& e) {
            row.finish_reason = FinishReason::error;
            row.diagnostic = e.what();
            row.metrics = SampleMetrics{};  // everything zero
        }
        rows[i] = std::move(row);
    });

    // embedding similarity in batches; empty or failed responses score 0
    constexpr size_t kBatch = 64;
    std::vector<size_t> pending;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].diagnostic.empty()) continue;
        if (trim(rows[i].response).empty() || trim(rows[i].reference).empty()) continue;
        pending.push_back(i);
    }
    for (size_t off = 0; off < pending.size(); off += kBatch) {
        const size_t count = std::min(kBatch, pending.size() - off);
        std::vector<std::string> texts;
        texts.reserve(count * 2);
        for (size_t k = 0; k < count; ++k) {
            texts.push_back(rows[pending[off + k]].response);
            texts.push_back(rows[pending[off + k]].reference);
        }
        const auto vectors = gateway.embed_batch(texts);
        for (size_t k = 0; k < count; ++k) {
            SampleRow& row = rows[pending[off + k]];
            try {
                row.metrics.embedding_similarity = cosine_unit_similarity(
                    vectors[2 * k].values, vectors[2 * k + 1].values, cfg.similarity_normalization);
            } catch (const ZeroVector& e) {
                row.metrics.embedding_similarity = 0.0;
                row.diagnostic = e.what();
            }
        }
    }

    EvalRun run;
    run.rows = std::move(rows);
    for (SampleRow& row : run.rows) {
        row.metrics.passed = judge_sample(row.metrics, cfg.thresholds);
    }

    EvalReport& report = run.report;
    report.n = run.rows.size();
    report.dataset_digest = dataset_digest(records);
    report.config_echo = cfg;
    std::vector<const SampleRow*> all;
    std::map<std::string, std::vector<const SampleRow*>> by_type;
    std::map<std::string, std::vector<const SampleRow*>> by_species;
    for (const SampleRow& row : run.rows) {
        all.push_back(&row);
        by_type[to_string(row.qa_type)].push_back(&row);
        by_species[row.species].push_back(&row);
        if (row.finish_reason == FinishReason::length) ++report.truncation_count;
    }
    report.overall = aggregate_rows(all);
    for (const auto& [key, members] : by_type) report.by_qa_type[key] = aggregate_rows(members);
    for (const auto& [key, members] : by_species) report.by_species[key] = aggregate_rows(members);
    return run;
}

namespace {

std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

const std::vector<std::pair<std::string, double Aggregates::*>>& metric_rows() {
    static const std::vector<std::pair<std::string, double Aggregates::*>> rows = {
        {"BLEU", &Aggregates::mean_bleu},
        {"ROUGE-1", &Aggregates::mean_rouge1},
        {"ROUGE-2", &Aggregates::mean_rouge2},
        {"ROUGE-L", &Aggregates::mean_rougeL},
        {"Embedding Similarity", &Aggregates::mean_embedding_similarity},
        {"Token F1", &Aggregates::mean_token_f1},
        {"Overall Score (%)", &Aggregates::pass_rate_pct},
    };
    return rows;
}

std::string pad_left(const std::string& s, size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// main metric table shared by render_report and compare_models
std::string render_metric_table(const std::vector<std::string>& model_names,
                                const std::vector<const Aggregates*>& columns, bool with_delta) {
    const size_t label_width = 20;  // "Embedding Similarity"
    std::vector<size_t> widths;
    for (const std::string& name : model_names) widths.push_back(std::max<size_t>(name.size(), 8));

    std::ostringstream out;
    out << pad_right("Metric", label_width);
    for (size_t c = 0; c < model_names.size(); ++c) out << "  " << pad_left(model_names[c], widths[c]);
    if (with_delta) out << "  " << pad_left("Delta", 8);
    out << '\n';

    for (const auto& [label, member] : metric_rows()) {
        const int decimals = label == "Overall Score (%)" ? 2 : 4;
        out << pad_right(label, label_width);
        double lo = 0.0;
        double hi = 0.0;
        for (size_t c = 0; c < columns.size(); ++c) {
            const double value = columns[c]->*member;
            if (c == 0) lo = hi = value;
            lo = std::min(lo, value);
            hi = std::max(hi, value);
            out << "  " << pad_left(fixed(value, decimals), widths[c]);
        }
        if (with_delta) out << "  " << pad_left(fixed(hi - lo, decimals), 8);
        out << '\n';
    }
    return out.str();
}

std::string render_breakdown(const std::string& heading,
                             const std::vector<std::pair<std::string, const Aggregates*>>& cells) {
    size_t key_width = 8;
    for (const auto& [key, agg] : cells) key_width = std::max(key_width, key.size());
    std::ostringstream out;
    out << heading << '\n';
    out << "  " << pad_right("group", key_width) << "  " << pad_left("n", 6) << "  "
        << pad_left("BLEU", 8) << "  " << pad_left("ROUGE-L", 8) << "  " << pad_left("Emb.Sim", 8)
        << "  " << pad_left("Token F1", 8) << "  " << pad_left("Pass (%)", 8) << '\n';
    for (const auto& [key, agg] : cells) {
        out << "  " << pad_right(key, key_width) << "  " << pad_left(std::to_string(agg->n), 6)
            << "  " << pad_left(fixed(agg->mean_bleu, 4), 8) << "  "
            << pad_left(fixed(agg->mean_rougeL, 4), 8) << "  "
            << pad_left(fixed(agg->mean_embedding_similarity, 4), 8) << "  "
            << pad_left(fixed(agg->mean_token_f1, 4), 8) << "  "
            << pad_left(fixed(agg->pass_rate_pct, 2), 8) << '\n';
    }
    return out.str();
}

}  // namespace

std::string render_report(const EvalReport& report) {
    std::ostringstream out;
    out << "Evaluation report (n = " << report.n << ", test-set digest " << report.dataset_digest
        << ")\n\n";
    out << render_metric_table({report.config_echo.model_name.empty() ? std::string("model")
                                                                      : report.config_echo.model_name},
                               {&report.overall}, false);
    out << '\n';

    std::vector<std::pair<std::string, const Aggregates*>> type_cells;
    for (QAType t : all_qa_types()) {
        auto it = report.by_qa_type.find(to_string(t));
        if (it != report.by_qa_type.end()) type_cells.emplace_back(it->first, &it->second);
    }
    if (!type_cells.empty()) out << render_breakdown("By QA type", type_cells) << '\n';

    std::vector<std::pair<std::string, const Aggregates*>> species_cells;
    for (const auto& [key, agg] : report.by_species) species_cells.emplace_back(key, &agg);
    if (!species_cells.empty()) out << render_breakdown("By species", species_cells) << '\n';

    out << "Exact-match rate: " << fixed(report.overall.exact_match_rate, 4) << '\n';
    out << "Truncated responses: " << report.truncation_count << '\n';
    return out.str();
}

namespace {

json aggregates_to_json(const Aggregates& a) {
    return {
        {"n", a.n},
        {"bleu", a.mean_bleu},
        {"rouge1", a.mean_rouge1},
        {"rouge2", a.mean_rouge2},
        {"rougeL", a.mean_rougeL},
        {"embedding_similarity", a.mean_embedding_similarity},
        {"token_f1", a.mean_token_f1},
        {"pass_rate_pct", a.pass_rate_pct},
        {"exact_match_rate", a.exact_match_rate},
    };
}

Aggregates aggregates_from_json(const json& j) {
    Aggregates a;
    a.n = j.at("n").get<std::size_t>();
    a.mean_bleu = j.at("bleu").get<double>();
    a.mean_rouge1 = j.at("rouge1").get<double>();
    a.mean_rouge2 = j.at("rouge2").get<double>();
    a.mean_rougeL = j.at("rougeL").get<double>();
    a.mean_embedding_similarity = j.at("embedding_similarity").get<double>();
    a.mean_token_f1 = j.at("token_f1").get<double>();
    a.pass_rate_pct = j.at("pass_rate_pct").get<double>();
    a.exact_match_rate = j.at("exact_match_rate").get<double>();
    return a;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    json j;
    j["n"] = report.n;
    j["dataset_digest"] = report.dataset_digest;
    j["truncation_count"] = report.truncation_count;
    j["overall"] = aggregates_to_json(report.overall);
    j["by_qa_type"] = json::object();
    for (const auto& [key, agg] : report.by_qa_type) j["by_qa_type"][key] = aggregates_to_json(agg);
    j["by_species"] = json::object();
    for (const auto& [key, agg] : report.by_species) j["by_species"][key] = aggregates_to_json(agg);
    j["config"] = {
        {"model_name", report.config_echo.model_name},
        {"system_prompt", report.config_echo.system_prompt},
        {"temperature", report.config_echo.temperature},
        {"max_tokens", report.config_echo.max_tokens},
        {"min_embedding_similarity", report.config_echo.thresholds.min_embedding_similarity},
        {"min_token_f1", report.config_echo.thresholds.min_token_f1},
        {"similarity_normalization",
         report.config_echo.similarity_normalization == SimilarityNormalization::affine ? "affine"
                                                                                        : "clamp"},
    };
    return j.dump(1);
}

EvalReport report_from_json(const std::string& text) {
    const json j = json::parse(text);
    EvalReport report;
    report.n = j.at("n").get<std::size_t>();
    report.dataset_digest = j.at("dataset_digest").get<std::string>();
    report.truncation_count = j.at("truncation_count").get<std::size_t>();
    report.overall = aggregates_from_json(j.at("overall"));
    for (const auto& [key, value] : j.at("by_qa_type").items()) {
        report.by_qa_type[key] = aggregates_from_json(value);
    }
    for (const auto& [key, value] : j.at("by_species").items()) {
        report.by_species[key] = aggregates_from_json(value);
    }
    const json& c = j.at("config");
    report.config_echo.model_name = c.at("model_name").get<std::string>();
    report.config_echo.system_prompt = c.at("system_prompt").get<std::string>();
    report.config_echo.temperature = c.at("temperature").get<double>();
    report.config_echo.max_tokens = c.at("max_tokens").get<int>();
    report.config_echo.thresholds.min_embedding_similarity =
        c.at("min_embedding_similarity").get<double>();
    report.config_echo.thresholds.min_token_f1 = c.at("min_token_f1").get<double>();
    report.config_echo.similarity_normalization =
        c.at("similarity_normalization").get<std::string>() == "clamp"
            ? SimilarityNormalization::clamp
            : SimilarityNormalization::affine;
    return report;
}

std::string compare_models(const std::vector<EvalReport>& reports) {
    if (reports.size() < 2) {
        throw std::invalid_argument("compare_models needs at least two reports");
    }
    for (const EvalReport& r : reports) {
        if (r.n != reports.front().n || r.dataset_digest != reports.front().dataset_digest) {
            throw MismatchedTestSets("reports cover different test sets: n=" + std::to_string(r.n) +
                                     "/" + r.dataset_digest + " vs n=" +
                                     std::to_string(reports.front().n) + "/" +
                                     reports.front().dataset_digest);
        }
    }
    std::vector<std::string> names;
    std::vector<const Aggregates*> columns;
    double best = reports.front().overall.pass_rate_pct;
    double worst = best;
    for (const EvalReport& r : reports) {
        names.push_back(r.config_echo.model_name.empty() ? "model" : r.config_echo.model_name);
        columns.push_back(&r.overall);
        best = std::max(best, r.overall.pass_rate_pct);
        worst = std::min(worst, r.overall.pass_rate_pct);
    }
    std::ostringstream out;
    out << "Model comparison (n = " << reports.front().n << ", test-set digest "
        << reports.front().dataset_digest << ")\n\n";
    out << render_metric_table(names, columns, true);
    out << '\n';
    out << "Pass-rate delta (best - worst): " << fixed(best - worst, 2) << '\n';
    return out.str();
}

void write_sample_rows_jsonl(const std::string& path, const std::vector<SampleRow>& rows) {
    std::string out;
    for (const SampleRow& row : rows) {
        json j = {
            {"record_id", row.record_id},
            {"question", row.question},
            {"reference", row.reference},
            {"response", row.response},
            {"finish_reason", to_string(row.finish_reason)},
            {"qa_type", to_string(row.qa_type)},
            {"species", row.species},
            {"passed", row.metrics.passed},
            {"metrics",
             {{"bleu", row.metrics.bleu},
              {"rouge1", row.metrics.rouge1},
              {"rouge2", row.metrics.rouge2},
              {"rougeL", row.metrics.rougeL},
              {"token_f1", row.metrics.token_f1},
              {"embedding_similarity", row.metrics.embedding_similarity},
              {"exact_match", row.metrics.exact_match}}},
        };
        if (!row.diagnostic.empty()) j["diagnostic"] = row.diagnostic;
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

}  // namespace qaforge
