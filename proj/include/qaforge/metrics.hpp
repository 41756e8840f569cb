#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qaforge {

class ModelGateway;

// Shared lexical tokenizer for BLEU / ROUGE / token-F1: casefold, split on
// maximal runs of non-alphanumeric characters, drop empties.
std::vector<std::string> tokenize_for_metrics(std::string_view text);

// Sentence-level BLEU-4: geometric mean of modified n-gram precisions
// (n = 1..4, add-one smoothing on zero match counts) times the brevity
// penalty exp(1 - ref_len/cand_len) when the candidate is shorter.
// Empty candidate scores 0.
double bleu(std::string_view candidate, std::string_view reference);

struct RougeScores {
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
};

// F1 variants: ROUGE-n from clipped n-gram overlap, ROUGE-L from the
// longest common subsequence. F1 is 0 when precision and recall are both 0.
RougeScores rouge(std::string_view candidate, std::string_view reference);

// Multiset token overlap F1. Both sides empty -> 1.0, exactly one empty -> 0.
double token_f1(std::string_view candidate, std::string_view reference);

// Casefolded, whitespace-collapsed, trailing-punctuation-stripped equality.
bool exact_match(std::string_view candidate, std::string_view reference);

enum class SimilarityNormalization {
    affine,  // (cos + 1) / 2
    clamp,   // max(cos, 0)
};

// Cosine of two embedding vectors mapped into [0,1]. Throws ZeroVector when
// either side has zero norm.
double cosine_unit_similarity(const std::vector<double>& a, const std::vector<double>& b,
                              SimilarityNormalization norm = SimilarityNormalization::affine);

// Embeds both texts through the gateway and applies cosine_unit_similarity.
double embedding_similarity(std::string_view candidate, std::string_view reference,
                            ModelGateway& gateway,
                            SimilarityNormalization norm = SimilarityNormalization::affine);

struct JudgeThresholds {
    double min_embedding_similarity = 0.80;
    double min_token_f1 = 0.30;

    bool operator==(const JudgeThresholds&) const = default;
};

struct SampleMetrics {
    double bleu = 0.0;
    double rouge1 = 0.0;
    double rouge2 = 0.0;
    double rougeL = 0.0;
    double token_f1 = 0.0;
    double embedding_similarity = 0.0;
    bool exact_match = false;
    bool passed = false;
};

// Semantic floor AND lexical floor.
bool judge_sample(const SampleMetrics& m, const JudgeThresholds& t);

// All lexical metrics of candidate vs reference in one pass (embedding
// similarity and the pass flag are filled in by the caller).
SampleMetrics score_lexical(std::string_view candidate, std::string_view reference);

}  // namespace qaforge
