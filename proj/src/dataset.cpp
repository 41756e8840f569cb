#include "qaforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "qaforge/errors.hpp"
#include "qaforge/metrics.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

using nlohmann::json;

std::string to_string(Split s) {
    return s == Split::train ? "train" : "test";
}

void SplitConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("split.test_fraction must be in (0, 1)");
    }
}

void TrainingConfigExport::validate() const {
    if (lora_rank != 8 && lora_rank != 16 && lora_rank != 32) {
        throw ConfigError("training.lora_rank must be one of 8, 16, 32");
    }
    if (learning_rate <= 0.0 || warmup_steps <= 0 || gradient_accumulation_steps <= 0 ||
        early_stopping_patience <= 0 || eval_interval_steps <= 0 || per_device_batch_size <= 0) {
        throw ConfigError("training config values must be strictly positive");
    }
}

namespace {

std::string exact_dup_key(const std::string& question) {
    std::string folded = to_lower_ascii(question);
    std::string out;
    bool in_space = false;
    for (char c : folded) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out += ' ';
        in_space = false;
        out += c;
    }
    return out;
}

// (doc_id, segment_index, id) order decides which of two duplicates is
// "later"; originals outrank their own paraphrases.
std::vector<size_t> canonical_order(const std::vector<QAPair>& pairs) {
    std::vector<size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        const QAPair& pa = pairs[a];
        const QAPair& pb = pairs[b];
        if (pa.doc_id != pb.doc_id) return pa.doc_id < pb.doc_id;
        if (pa.segment_index != pb.segment_index) return pa.segment_index < pb.segment_index;
        if (pa.id != pb.id) return pa.id < pb.id;
        return pa.derived_from.empty() && !pb.derived_from.empty();
    });
    return order;
}

}  // namespace

std::vector<QAPair> dedup_pairs(const std::vector<QAPair>& pairs, double near_dup_threshold) {
    if (!(near_dup_threshold > 0.0 && near_dup_threshold <= 1.0)) {
        throw std::invalid_argument("near_dup_threshold must be in (0, 1]");
    }
    const std::vector<size_t> order = canonical_order(pairs);

    std::vector<bool> keep(pairs.size(), false);
    std::map<std::string, size_t> seen_exact;
    std::vector<size_t> kept_order;
    for (size_t idx : order) {
        const std::string key = exact_dup_key(pairs[idx].question);
        if (seen_exact.count(key)) continue;
        bool near_dup = false;
        for (size_t kept : kept_order) {
            if (token_f1(pairs[kept].question, pairs[idx].question) >= near_dup_threshold) {
                near_dup = true;
                break;
            }
        }
        if (near_dup) continue;
        seen_exact.emplace(key, idx);
        kept_order.push_back(idx);
        keep[idx] = true;
    }

    std::vector<QAPair> survivors;
    survivors.reserve(kept_order.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (keep[i]) survivors.push_back(pairs[i]);
    }
    return survivors;
}

std::vector<QAPair> augment_pairs(const std::vector<QAPair>& pairs, ModelGateway* gateway,
                                  bool enabled, const RetryPolicy& policy,
                                  const std::string& model_name, double near_dup_threshold,
                                  std::vector<GenerationDiagnostic>* diagnostics) {
    if (!enabled) return pairs;
    if (!gateway) throw ConfigError("augmentation requires a configured endpoint");

    std::vector<QAPair> paraphrased(pairs.size());
    std::vector<GenerationDiagnostic> local_diags(pairs.size());
    std::vector<bool> ok(pairs.size(), false);

    parallel_for(pairs.size(), policy.max_in_flight, [&](size_t i) {
        const QAPair& source = pairs[i];
        ChatRequest request;
        request.model_name = model_name;
        request.temperature = 0.2;
        request.max_tokens = 256;
        request.user_prompt =
            "Rewrite the following question once, preserving its exact meaning. "
            "Return only the rewritten question.\n\n" +
            source.question;
        std::string last_error;
        for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
            std::string text;
            try {
                text = trim(gateway->chat_complete(request, policy).text);
            } catch (const MalformedResponse& e) {
                last_error = e.what();
                continue;
            }
            if (text.empty()) {
                last_error = "empty paraphrase";
                continue;
            }
            QAPair copy = source;
            copy.question = text;
            copy.id = qa_pair_id(source.doc_id, source.segment_index, text);
            copy.derived_from = source.id;
            paraphrased[i] = std::move(copy);
            ok[i] = true;
            return;
        }
        local_diags[i] = {source.doc_id, source.segment_index, policy.max_attempts, last_error};
    });

    std::vector<QAPair> combined = pairs;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (ok[i]) {
            combined.push_back(std::move(paraphrased[i]));
        } else if (diagnostics) {
            diagnostics->push_back(local_diags[i]);
        }
    }
    return dedup_pairs(combined, near_dup_threshold);
}

std::pair<std::vector<QAPair>, std::vector<QAPair>> split_dataset(
    const std::vector<QAPair>& pairs, const SplitConfig& cfg) {
    cfg.validate();
    if (pairs.empty()) throw DegenerateSplit("cannot split an empty pair set");

    std::map<std::string, std::vector<size_t>> cells;
    for (size_t i = 0; i < pairs.size(); ++i) {
        std::string key;
        if (cfg.stratify_species) key += pairs[i].species;
        key += '\x1f';
        if (cfg.stratify_qa_type) key += to_string(pairs[i].qa_type);
        cells[key].push_back(i);
    }

    std::vector<bool> in_test(pairs.size(), false);
    size_t test_total = 0;
    for (auto& [key, members] : cells) {
        std::sort(members.begin(), members.end(), [&](size_t a, size_t b) {
            const QAPair& pa = pairs[a];
            const QAPair& pb = pairs[b];
            if (pa.doc_id != pb.doc_id) return pa.doc_id < pb.doc_id;
            if (pa.segment_index != pb.segment_index) return pa.segment_index < pb.segment_index;
            return pa.id < pb.id;
        });
        size_t want = static_cast<size_t>(
            std::floor(static_cast<double>(members.size()) * cfg.test_fraction + 0.5));
        if (want == 0 && members.size() >= 2) want = 1;

        DeterministicRng rng(fnv1a64(key) ^ cfg.seed);
        for (size_t i = members.size(); i > 1; --i) {
            const size_t j = rng.next_below(i);
            std::swap(members[i - 1], members[j]);
        }
        for (size_t i = 0; i < want && i < members.size(); ++i) {
            in_test[members[i]] = true;
            ++test_total;
        }
    }
    if (test_total == 0) {
        throw DegenerateSplit("test side would be empty (" + std::to_string(pairs.size()) +
                              " pairs, fraction " + format_double(cfg.test_fraction) + ")");
    }

    std::vector<QAPair> train;
    std::vector<QAPair> test;
    for (size_t i = 0; i < pairs.size(); ++i) {
        (in_test[i] ? test : train).push_back(pairs[i]);
    }
    return {std::move(train), std::move(test)};
}

DatasetRecord serialize_record(const QAPair& pair, const std::string& system_prompt) {
    for (const char* delim : {kSystemDelimiter, kUserDelimiter, kAssistantDelimiter}) {
        for (const auto& [name, value] :
             std::initializer_list<std::pair<const char*, const std::string*>>{
                 {"question", &pair.question},
                 {"answer", &pair.answer},
                 {"system prompt", &system_prompt}}) {
            if (value->find(delim) != std::string::npos) {
                throw DelimiterCollision(std::string(name) + " contains the literal " + delim);
            }
        }
    }
    DatasetRecord record;
    record.id = pair.id;
    record.text = std::string(kSystemDelimiter) + system_prompt + kUserDelimiter + pair.question +
                  kAssistantDelimiter + pair.answer;
    record.response_char_start = record.text.size() - pair.answer.size();
    record.question = pair.question;
    record.answer = pair.answer;
    record.qa_type = pair.qa_type;
    record.species = pair.species;
    record.derived_from = pair.derived_from;
    return record;
}

void export_training_config(const TrainingConfigExport& cfg, const std::string& path) {
    cfg.validate();
    std::string out;
    out += "lora_rank=" + std::to_string(cfg.lora_rank) + "\n";
    out += "learning_rate=" + format_double(cfg.learning_rate) + "\n";
    out += "warmup_steps=" + std::to_string(cfg.warmup_steps) + "\n";
    out += "gradient_accumulation_steps=" + std::to_string(cfg.gradient_accumulation_steps) + "\n";
    out += "early_stopping_patience=" + std::to_string(cfg.early_stopping_patience) + "\n";
    out += "eval_interval_steps=" + std::to_string(cfg.eval_interval_steps) + "\n";
    out += "per_device_batch_size=" + std::to_string(cfg.per_device_batch_size) + "\n";
    write_file(path, out);
}

TrainingConfigExport load_training_config(const std::string& path) {
    TrainingConfigExport cfg;
    for (const std::string& line : split_on(read_file(path), '\n')) {
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const size_t eq = stripped.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed training config line: " + stripped);
        const std::string key = stripped.substr(0, eq);
        const std::string value = stripped.substr(eq + 1);
        if (key == "lora_rank") cfg.lora_rank = std::stoi(value);
        else if (key == "learning_rate") cfg.learning_rate = std::stod(value);
        else if (key == "warmup_steps") cfg.warmup_steps = std::stoi(value);
        else if (key == "gradient_accumulation_steps") cfg.gradient_accumulation_steps = std::stoi(value);
        else if (key == "early_stopping_patience") cfg.early_stopping_patience = std::stoi(value);
        else if (key == "eval_interval_steps") cfg.eval_interval_steps = std::stoi(value);
        else if (key == "per_device_batch_size") cfg.per_device_batch_size = std::stoi(value);
        else throw ConfigError("unknown training config key: " + key);
    }
    cfg.validate();
    return cfg;
}

namespace {

json record_to_json(const DatasetRecord& r) {
    json j = {
        {"id", r.id},
        {"text", r.text},
        {"response_char_start", r.response_char_start},
        {"question", r.question},
        {"answer", r.answer},
        {"qa_type", to_string(r.qa_type)},
        {"species", r.species},
        {"split", to_string(r.split)},
    };
    if (!r.derived_from.empty()) j["derived_from"] = r.derived_from;
    return j;
}

DatasetRecord record_from_json(const json& j) {
    DatasetRecord r;
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.response_char_start = j.at("response_char_start").get<std::size_t>();
    r.question = j.at("question").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    const auto type = qa_type_from_string(j.at("qa_type").get<std::string>());
    if (!type) throw Error("record has unknown qa_type");
    r.qa_type = *type;
    r.species = j.at("species").get<std::string>();
    r.split = j.at("split").get<std::string>() == "test" ? Split::test : Split::train;
    if (j.contains("derived_from")) r.derived_from = j["derived_from"].get<std::string>();
    return r;
}

}  // namespace

void write_records_jsonl(const std::string& path, const std::vector<DatasetRecord>& records) {
    std::string out;
    for (const DatasetRecord& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<DatasetRecord> read_records_jsonl(const std::string& path) {
    std::vector<DatasetRecord> records;
    for (const std::string& line : split_on(read_file(path), '\n')) {
        if (trim(line).empty()) continue;
        records.push_back(record_from_json(json::parse(line)));
    }
    return records;
}

}  // namespace qaforge
