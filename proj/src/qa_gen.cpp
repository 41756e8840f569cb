#include "qaforge/qa_gen.hpp"

#include <algorithm>
#include <array>
#include <map>

#include <json.hpp>

#include "qaforge/metrics.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

using nlohmann::json;

const std::vector<QAType>& all_qa_types() {
    static const std::vector<QAType> types = {QAType::factual,    QAType::definition,
                                              QAType::reasoning,  QAType::comparison,
                                              QAType::list,       QAType::procedural};
    return types;
}

std::string to_string(QAType t) {
    switch (t) {
        case QAType::factual: return "factual";
        case QAType::definition: return "definition";
        case QAType::reasoning: return "reasoning";
        case QAType::comparison: return "comparison";
        case QAType::list: return "list";
        case QAType::procedural: return "procedural";
    }
    return "factual";
}

std::optional<QAType> qa_type_from_string(std::string_view s) {
    for (QAType t : all_qa_types()) {
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

const std::string& prompt_template() {
    static const std::string tmpl =
        "Read the following {chunk} and:\n"
        "(1) Generate 2 factual question-answer pairs.\n"
        "(2) Generate 2 definition-based question-answer pairs.\n"
        "(3) Create 2 reasoning (why/how) question-answer pairs.\n"
        "(4) Provide 2 comparison question-answer pairs.\n"
        "(5) Write 2 list-based or multi-point answer question-answer pairs.\n"
        "(6) Provide 2 procedural (how-to) question-answer pairs.\n"
        "\n"
        "Return the output strictly in the following JSON format:\n"
        "{\"qa_pairs\": [{\n"
        "      \"type\": \"factual | definition | reasoning | comparison | list | procedural\",\n"
        "      \"question\": \"string\",\n"
        "      \"answer\": \"string\" }]\n"
        "Constraints: a) Generate exactly 12 QA pairs (2 per category), b) Ensure answers are "
        "grounded only in the provided {chunk}, c) Do not include explanations outside the JSON, "
        "d) Avoid duplicate or semantically overlapping questions.";
    return tmpl;
}

std::string build_prompt(const Chunk& chunk) {
    std::string prompt = prompt_template();
    const size_t pos = prompt.find("{chunk}");
    prompt.replace(pos, 7, chunk.text);
    return prompt;
}

namespace {

// Generation models wrap JSON in markdown fences no matter what the prompt
// says; tolerate one fence layer.
std::string strip_code_fences(const std::string& raw) {
    std::string s = trim(raw);
    if (starts_with(s, "```")) {
        const size_t first_newline = s.find('\n');
        if (first_newline != std::string::npos) {
            s = s.substr(first_newline + 1);
        } else {
            s.clear();
        }
        const size_t closing = s.rfind("```");
        if (closing != std::string::npos) s = s.substr(0, closing);
        s = trim(s);
    }
    return s;
}

}  // namespace

std::string qa_pair_id(const std::string& doc_id, std::size_t segment_index,
                       const std::string& question) {
    return fnv1a64_hex(doc_id + '\x1f' + std::to_string(segment_index) + '\x1f' + question);
}

std::vector<QAPair> parse_qa_response(const std::string& raw, const Chunk& chunk) {
    const std::string payload = strip_code_fences(raw);

    json parsed;
    try {
        parsed = json::parse(payload);
    } catch (const json::exception& e) {
        throw QaParseError(QaParseError::Kind::JsonInvalid,
                           std::string("payload is not valid JSON: ") + e.what());
    }
    if (!parsed.is_object() || !parsed.contains("qa_pairs")) {
        QaParseError err(QaParseError::Kind::MissingKey, "payload lacks key qa_pairs");
        err.value = "qa_pairs";
        throw err;
    }
    const json& items = parsed["qa_pairs"];
    if (!items.is_array()) {
        throw QaParseError(QaParseError::Kind::JsonInvalid, "qa_pairs is not an array");
    }
    if (items.size() != static_cast<size_t>(kPairsPerChunk)) {
        QaParseError err(QaParseError::Kind::CountMismatch,
                         "expected 12 pairs, found " + std::to_string(items.size()));
        err.found = static_cast<int>(items.size());
        throw err;
    }

    std::vector<QAPair> pairs;
    pairs.reserve(items.size());
    std::map<QAType, int> per_category;
    for (size_t i = 0; i < items.size(); ++i) {
        const json& item = items[i];
        for (const char* key : {"type", "question", "answer"}) {
            if (!item.is_object() || !item.contains(key) || !item[key].is_string()) {
                QaParseError err(QaParseError::Kind::MissingKey,
                                 "pair " + std::to_string(i) + " lacks string key " + key);
                err.value = key;
                err.index = static_cast<int>(i);
                throw err;
            }
        }
        const std::string type_str = item["type"].get<std::string>();
        const auto type = qa_type_from_string(type_str);
        if (!type) {
            QaParseError err(QaParseError::Kind::UnknownType,
                             "pair " + std::to_string(i) + " has unknown type \"" + type_str + "\"");
            err.value = type_str;
            err.index = static_cast<int>(i);
            throw err;
        }
        const std::string question = trim(item["question"].get<std::string>());
        const std::string answer = trim(item["answer"].get<std::string>());
        for (const auto& [field, text] :
             std::array<std::pair<const char*, const std::string*>, 2>{
                 {{"question", &question}, {"answer", &answer}}}) {
            if (text->empty()) {
                QaParseError err(QaParseError::Kind::EmptyField,
                                 "pair " + std::to_string(i) + " has empty " + field);
                err.index = static_cast<int>(i);
                err.field = field;
                throw err;
            }
        }
        ++per_category[*type];

        QAPair pair;
        pair.qa_type = *type;
        pair.question = question;
        pair.answer = answer;
        pair.doc_id = chunk.doc_id;
        pair.segment_index = chunk.segment_index;
        pair.id = qa_pair_id(chunk.doc_id, chunk.segment_index, question);
        pairs.push_back(std::move(pair));
    }

    for (QAType t : all_qa_types()) {
        const int found = per_category.count(t) ? per_category[t] : 0;
        if (found != kPairsPerCategory) {
            QaParseError err(QaParseError::Kind::CategoryImbalance,
                             "category " + to_string(t) + " has " + std::to_string(found) +
                                 " pairs, expected 2");
            err.category = to_string(t);
            err.found = found;
            throw err;
        }
    }
    return pairs;
}

std::vector<QAPair> generate_for_chunk(const Chunk& chunk, const std::string& species,
                                       ModelGateway& gateway, const RetryPolicy& policy,
                                       const ChatRequest& request_defaults,
                                       std::vector<GenerationDiagnostic>* diagnostics,
                                       int* calls_made) {
    ChatRequest request = request_defaults;
    request.user_prompt = build_prompt(chunk);

    std::string last_error;
    for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
        ChatResponse response;
        try {
            response = gateway.chat_complete(request, policy);
            if (calls_made) ++*calls_made;
        } catch (const MalformedResponse& e) {
            if (calls_made) ++*calls_made;
            last_error = e.what();
            continue;
        }
        try {
            std::vector<QAPair> pairs = parse_qa_response(response.text, chunk);
            for (QAPair& p : pairs) p.species = species;
            return pairs;
        } catch (const QaParseError& e) {
            last_error = e.what();
        }
    }
    if (diagnostics) {
        diagnostics->push_back({chunk.doc_id, chunk.segment_index, policy.max_attempts, last_error});
    }
    return {};
}

double groundedness_overlap(const QAPair& pair, const Chunk& chunk) {
    const auto answer_tokens = tokenize_for_metrics(pair.answer);
    if (answer_tokens.empty()) return 0.0;
    std::map<std::string, long> chunk_counts;
    for (const std::string& t : tokenize_for_metrics(chunk.text)) ++chunk_counts[t];
    std::map<std::string, long> answer_counts;
    for (const std::string& t : answer_tokens) ++answer_counts[t];
    long overlap = 0;
    for (const auto& [token, count] : answer_counts) {
        auto it = chunk_counts.find(token);
        if (it != chunk_counts.end()) overlap += std::min(count, it->second);
    }
    return static_cast<double>(overlap) / static_cast<double>(answer_tokens.size());
}

void write_pairs_tsv(const std::string& path, const std::vector<QAPair>& pairs) {
    std::string out;
    for (const QAPair& p : pairs) {
        out += p.id;
        out += '\t';
        out += to_string(p.qa_type);
        out += '\t';
        out += tsv_escape(p.question);
        out += '\t';
        out += tsv_escape(p.answer);
        out += '\t';
        out += p.doc_id;
        out += '\t';
        out += std::to_string(p.segment_index);
        out += '\t';
        out += tsv_escape(p.species);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<QAPair> read_pairs_tsv(const std::string& path) {
    std::vector<QAPair> pairs;
    for (const std::string& line : split_on(read_file(path), '\n')) {
        if (line.empty()) continue;
        const auto f = split_tsv_line(line);
        if (f.size() != 7) throw Error("malformed pair record: " + line.substr(0, 60));
        QAPair p;
        p.id = f[0];
        const auto type = qa_type_from_string(f[1]);
        if (!type) throw Error("pair record has unknown type " + f[1]);
        p.qa_type = *type;
        p.question = tsv_unescape(f[2]);
        p.answer = tsv_unescape(f[3]);
        p.doc_id = f[4];
        p.segment_index = std::stoull(f[5]);
        p.species = tsv_unescape(f[6]);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace qaforge
