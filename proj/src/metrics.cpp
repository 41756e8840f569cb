#include "qaforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "qaforge/errors.hpp"
#include "qaforge/gateway.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

namespace {

bool is_alnum_ascii(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

using NgramCounts = std::map<std::string, int>;

// n-grams keyed by space-joined tokens; value is the occurrence count.
NgramCounts ngram_counts(const std::vector<std::string>& tokens, size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (size_t j = 1; j < n; ++j) {
            key += ' ';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

long clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
    long overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

double f1_of(double precision, double recall) {
    double denom = precision + recall;
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0);
    std::vector<size_t> cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1]) {
                cur[j] = prev[j - 1] + 1;
            } else {
                cur[j] = std::max(prev[j], cur[j - 1]);
            }
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::vector<std::string> tokenize_for_metrics(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (is_alnum_ascii(c)) {
            current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double bleu(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize_for_metrics(candidate);
    const auto ref = tokenize_for_metrics(reference);
    if (cand.empty()) return 0.0;

    double log_sum = 0.0;
    for (size_t n = 1; n <= 4; ++n) {
        const auto cand_counts = ngram_counts(cand, n);
        const auto ref_counts = ngram_counts(ref, n);
        const long total = cand.size() >= n ? static_cast<long>(cand.size() - n + 1) : 0;
        const long matches = clipped_overlap(cand_counts, ref_counts);
        double p;
        if (matches == 0) {
            p = (matches + 1.0) / (total + 1.0);
        } else {
            p = static_cast<double>(matches) / static_cast<double>(total);
        }
        log_sum += std::log(p);
    }
    const double geo = std::exp(log_sum / 4.0);
    double bp = 1.0;
    if (cand.size() < ref.size()) {
        bp = std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size()));
    }
    return bp * geo;
}

RougeScores rouge(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize_for_metrics(candidate);
    const auto ref = tokenize_for_metrics(reference);
    RougeScores scores;

    for (size_t n = 1; n <= 2; ++n) {
        const auto cand_counts = ngram_counts(cand, n);
        const auto ref_counts = ngram_counts(ref, n);
        long cand_total = 0;
        for (const auto& [g, c] : cand_counts) cand_total += c;
        long ref_total = 0;
        for (const auto& [g, c] : ref_counts) ref_total += c;
        const long overlap = clipped_overlap(cand_counts, ref_counts);
        const double p = cand_total > 0 ? static_cast<double>(overlap) / cand_total : 0.0;
        const double r = ref_total > 0 ? static_cast<double>(overlap) / ref_total : 0.0;
        (n == 1 ? scores.rouge1 : scores.rouge2) = f1_of(p, r);
    }

    const size_t lcs = lcs_length(cand, ref);
    const double p = cand.empty() ? 0.0 : static_cast<double>(lcs) / cand.size();
    const double r = ref.empty() ? 0.0 : static_cast<double>(lcs) / ref.size();
    scores.rougeL = f1_of(p, r);
    return scores;
}

double token_f1(std::string_view candidate, std::string_view reference) {
    const auto cand = tokenize_for_metrics(candidate);
    const auto ref = tokenize_for_metrics(reference);
    if (cand.empty() && ref.empty()) return 1.0;
    if (cand.empty() || ref.empty()) return 0.0;

    const auto cand_counts = ngram_counts(cand, 1);
    const auto ref_counts = ngram_counts(ref, 1);
    const long overlap = clipped_overlap(cand_counts, ref_counts);
    const double p = static_cast<double>(overlap) / cand.size();
    const double r = static_cast<double>(overlap) / ref.size();
    return f1_of(p, r);
}

namespace {

std::string normalize_for_exact_match(std::string_view s) {
    std::string folded = to_lower_ascii(s);
    std::string collapsed;
    collapsed.reserve(folded.size());
    bool in_space = false;
    for (char c : folded) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !collapsed.empty()) collapsed += ' ';
        in_space = false;
        collapsed += c;
    }
    const std::string punct = ".!?,;:";
    while (!collapsed.empty() && punct.find(collapsed.back()) != std::string::npos) {
        collapsed.pop_back();
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

}  // namespace

bool exact_match(std::string_view candidate, std::string_view reference) {
    return normalize_for_exact_match(candidate) == normalize_for_exact_match(reference);
}

double cosine_unit_similarity(const std::vector<double>& a, const std::vector<double>& b,
                              SimilarityNormalization norm) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("embedding dimensions differ: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("zero-norm embedding");
    const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
    double sim = norm == SimilarityNormalization::affine ? (cos + 1.0) / 2.0 : std::max(cos, 0.0);
    return std::clamp(sim, 0.0, 1.0);
}

double embedding_similarity(std::string_view candidate, std::string_view reference,
                            ModelGateway& gateway, SimilarityNormalization norm) {
    const auto vectors =
        gateway.embed_batch({std::string(candidate), std::string(reference)});
    return cosine_unit_similarity(vectors[0].values, vectors[1].values, norm);
}

bool judge_sample(const SampleMetrics& m, const JudgeThresholds& t) {
    return m.embedding_similarity >= t.min_embedding_similarity &&
           m.token_f1 >= t.min_token_f1;
}

SampleMetrics score_lexical(std::string_view candidate, std::string_view reference) {
    SampleMetrics m;
    m.bleu = bleu(candidate, reference);
    const RougeScores r = rouge(candidate, reference);
    m.rouge1 = r.rouge1;
    m.rouge2 = r.rouge2;
    m.rougeL = r.rougeL;
    m.token_f1 = token_f1(candidate, reference);
    m.exact_match = exact_match(candidate, reference);
    return m;
}

}  // namespace qaforge
