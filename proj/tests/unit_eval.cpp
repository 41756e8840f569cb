#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "qaforge/errors.hpp"
#include "qaforge/eval.hpp"
#include "support/test_helpers.hpp"

using namespace qaforge;
using nlohmann::json;
using qaforge::testing::MockEndpoint;

namespace {

std::vector<DatasetRecord> make_test_set(int n) {
    std::vector<DatasetRecord> records;
    const std::vector<std::string> species = {"red palm weevil", "emerald ash borer"};
    for (int i = 0; i < n; ++i) {
        QAPair p;
        p.question = "question number " + std::to_string(i) + " about hosts?";
        p.answer = "reference answer " + std::to_string(i) + " with detail";
        p.doc_id = "doc";
        p.segment_index = static_cast<std::size_t>(i);
        p.qa_type = all_qa_types()[i % 6];
        p.species = species[i % 2];
        p.id = qa_pair_id(p.doc_id, p.segment_index, p.question);
        DatasetRecord r = serialize_record(p, "sys");
        r.split = Split::test;
        records.push_back(std::move(r));
    }
    return records;
}

// echoes the reference answer for a question by looking it up in the set
MockEndpoint::ChatHook echo_hook(const std::vector<DatasetRecord>& records) {
    auto by_question = std::make_shared<std::map<std::string, std::string>>();
    for (const DatasetRecord& r : records) (*by_question)[r.question] = r.answer;
    return [by_question](const json& body, int) {
        const std::string q = MockEndpoint::user_content(body);
        return std::make_pair(200, testing::chat_completion_body(by_question->at(q)));
    };
}

EvalConfig fast_eval_config() {
    EvalConfig cfg;
    cfg.model_name = "model-under-test";
    cfg.system_prompt = "sys";
    return cfg;
}

const RetryPolicy kFastPolicy{3, 1, 4};

}  // namespace

TEST_CASE("echo mock scores perfect lexical means and full pass rate") {
    const auto records = make_test_set(10);
    MockEndpoint mock;
    mock.set_chat(echo_hook(records));
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    CHECK(run.report.n == 10);
    CHECK(run.report.overall.mean_bleu == 1.0);
    CHECK(run.report.overall.mean_rouge1 == 1.0);
    CHECK(run.report.overall.mean_rouge2 == 1.0);
    CHECK(run.report.overall.mean_rougeL == 1.0);
    CHECK(run.report.overall.mean_token_f1 == 1.0);
    CHECK(run.report.overall.pass_rate_pct == 100.0);
    CHECK(run.report.overall.exact_match_rate == 1.0);
    CHECK(run.report.truncation_count == 0);
    CHECK(run.rows.size() == 10);
}

TEST_CASE("empty-string mock scores zero everywhere") {
    const auto records = make_test_set(6);
    MockEndpoint mock;
    mock.set_chat([](const json&, int) {
        return std::make_pair(200, testing::chat_completion_body(""));
    });
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    CHECK(run.report.overall.mean_bleu == 0.0);
    CHECK(run.report.overall.mean_token_f1 == 0.0);
    CHECK(run.report.overall.mean_embedding_similarity == 0.0);
    CHECK(run.report.overall.pass_rate_pct == 0.0);
}

TEST_CASE("mixed mock yields an exact fifty percent pass rate") {
    const auto records = make_test_set(10);
    auto by_question = std::make_shared<std::map<std::string, std::pair<std::string, int>>>();
    for (size_t i = 0; i < records.size(); ++i) {
        (*by_question)[records[i].question] = {records[i].answer, static_cast<int>(i)};
    }
    MockEndpoint mock;
    mock.set_chat([by_question](const json& body, int) {
        const auto& [answer, index] = by_question->at(MockEndpoint::user_content(body));
        return std::make_pair(200,
                              testing::chat_completion_body(index % 2 == 0 ? answer : ""));
    });
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    CHECK(run.report.overall.pass_rate_pct == 50.0);
}

TEST_CASE("truncated responses are counted and still scored") {
    const auto records = make_test_set(4);
    MockEndpoint mock;
    mock.set_chat([](const json&, int) {
        return std::make_pair(200, testing::chat_completion_body("partial answer", "length"));
    });
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    CHECK(run.report.truncation_count == 4);
    CHECK(run.report.n == 4);
    for (const SampleRow& row : run.rows) CHECK(row.finish_reason == FinishReason::length);
}

TEST_CASE("aggregates equal the mean of the persisted rows") {
    const auto records = make_test_set(9);
    MockEndpoint mock;
    mock.set_chat([](const json& body, int) {
        // overlap varies per question: echo the question itself
        return std::make_pair(200,
                              testing::chat_completion_body(MockEndpoint::user_content(body)));
    });
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    double sum_bleu = 0.0;
    double sum_f1 = 0.0;
    std::size_t type_total = 0;
    std::size_t species_total = 0;
    for (const SampleRow& row : run.rows) {
        sum_bleu += row.metrics.bleu;
        sum_f1 += row.metrics.token_f1;
    }
    for (const auto& [key, agg] : run.report.by_qa_type) type_total += agg.n;
    for (const auto& [key, agg] : run.report.by_species) species_total += agg.n;
    CHECK(run.report.overall.mean_bleu == doctest::Approx(sum_bleu / 9).epsilon(1e-12));
    CHECK(run.report.overall.mean_token_f1 == doctest::Approx(sum_f1 / 9).epsilon(1e-12));
    CHECK(type_total == run.report.n);
    CHECK(species_total == run.report.n);
}

namespace {

EvalReport table_fixture(const std::string& model, double bleu_v, double r1, double r2, double rl,
                         double emb, double f1, double pass) {
    EvalReport report;
    report.n = 2510;
    report.dataset_digest = "fixturedigest";
    report.overall.n = 2510;
    report.overall.mean_bleu = bleu_v;
    report.overall.mean_rouge1 = r1;
    report.overall.mean_rouge2 = r2;
    report.overall.mean_rougeL = rl;
    report.overall.mean_embedding_similarity = emb;
    report.overall.mean_token_f1 = f1;
    report.overall.pass_rate_pct = pass;
    report.config_echo.model_name = model;
    report.config_echo.system_prompt = "sys";
    return report;
}

}  // namespace

TEST_CASE("report renders the fixture literals in row order") {
    const EvalReport report =
        table_fixture("Mistral 7B", 0.0966, 0.1742, 0.1618, 0.1710, 0.8650, 0.3462, 88.90);
    const std::string text = render_report(report);
    const std::vector<std::string> expected = {"BLEU",    "0.0966", "ROUGE-1", "0.1742",
                                               "ROUGE-2", "0.1618", "ROUGE-L", "0.1710",
                                               "Embedding Similarity", "0.8650", "Token F1",
                                               "0.3462",  "Overall Score (%)", "88.90"};
    size_t cursor = 0;
    for (const std::string& token : expected) {
        const size_t pos = text.find(token, cursor);
        REQUIRE_MESSAGE(pos != std::string::npos, "missing " << token);
        cursor = pos;
    }
    CHECK(text.find("Truncated responses: 0") != std::string::npos);
}

TEST_CASE("report round-trips through the structured document") {
    EvalReport report =
        table_fixture("Mistral 7B", 0.0966, 0.1742, 0.1618, 0.1710, 0.8650, 0.3462, 88.90);
    report.by_qa_type["factual"] = report.overall;
    report.by_species["red palm weevil"] = report.overall;
    report.truncation_count = 17;
    const EvalReport back = report_from_json(report_to_json(report));
    CHECK(back == report);
}

TEST_CASE("compare_models reports the pass-rate delta") {
    const EvalReport mistral =
        table_fixture("Mistral 7B", 0.0966, 0.1742, 0.1618, 0.1710, 0.8650, 0.3462, 88.90);
    const EvalReport llama =
        table_fixture("LLaMA 3.1 8B", 0.2049, 0.3680, 0.2577, 0.3338, 0.8205, 0.4060, 58.70);
    const std::string text = compare_models({mistral, llama});
    CHECK(text.find("Mistral 7B") != std::string::npos);
    CHECK(text.find("LLaMA 3.1 8B") != std::string::npos);
    CHECK(text.find("30.20") != std::string::npos);
    CHECK(compare_models({mistral, mistral}).find("0.00") != std::string::npos);
}

TEST_CASE("compare_models rejects mismatched test sets") {
    EvalReport a = table_fixture("A", 0, 0, 0, 0, 0, 0, 10);
    EvalReport b = table_fixture("B", 0, 0, 0, 0, 0, 0, 20);
    b.n = 99;
    CHECK_THROWS_AS(compare_models({a, b}), MismatchedTestSets);
    b = a;
    b.dataset_digest = "otherdigest";
    CHECK_THROWS_AS(compare_models({a, b}), MismatchedTestSets);
}

TEST_CASE("malformed per-sample responses score zero with a diagnostic") {
    const auto records = make_test_set(3);
    MockEndpoint mock;
    mock.set_chat([](const json& body, int) {
        const std::string q = MockEndpoint::user_content(body);
        if (q.find("number 0") != std::string::npos) {
            return std::make_pair(200, std::string("{\"broken\": true}"));
        }
        return std::make_pair(200, testing::chat_completion_body("an answer"));
    });
    ModelGateway gateway(mock.base_url(), "embed", kFastPolicy);
    const EvalRun run = evaluate_model(records, gateway, fast_eval_config());
    int diagnosed = 0;
    for (const SampleRow& row : run.rows) {
        if (!row.diagnostic.empty()) {
            ++diagnosed;
            CHECK(row.metrics.bleu == 0.0);
            CHECK(row.metrics.token_f1 == 0.0);
            CHECK_FALSE(row.metrics.passed);
        }
    }
    CHECK(diagnosed == 1);
}

TEST_CASE("endpoint failure aborts evaluation") {
    const auto records = make_test_set(2);
    ModelGateway gateway("http://127.0.0.1:9/v1", "embed", kFastPolicy);
    CHECK_THROWS_AS(evaluate_model(records, gateway, fast_eval_config()), EndpointUnreachable);
}
