#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/chunker.hpp"
#include "qaforge/errors.hpp"
#include "qaforge/gateway.hpp"

namespace qaforge {

enum class QAType { factual, definition, reasoning, comparison, list, procedural };

inline constexpr int kQATypeCount = 6;
inline constexpr int kPairsPerChunk = 12;
inline constexpr int kPairsPerCategory = 2;

const std::vector<QAType>& all_qa_types();
std::string to_string(QAType t);
std::optional<QAType> qa_type_from_string(std::string_view s);

struct QAPair {
    std::string id;  // content hash of (doc_id, segment_index, question)
    QAType qa_type = QAType::factual;
    std::string question;
    std::string answer;
    std::string doc_id;
    std::size_t segment_index = 0;
    std::string species;
    std::string derived_from;  // source pair id for augmented paraphrases
};

// Structured validation failure for a generation payload. Recoverable:
// the caller regenerates.
struct QaParseError : Error {
    enum class Kind { JsonInvalid, MissingKey, CountMismatch, CategoryImbalance, UnknownType, EmptyField };

    QaParseError(Kind kind, const std::string& message)
        : Error(message), kind(kind) {}

    Kind kind;
    int found = 0;            // CountMismatch / CategoryImbalance
    std::string category;     // CategoryImbalance
    std::string value;        // UnknownType / MissingKey
    int index = -1;           // EmptyField
    std::string field;        // EmptyField
};

// The generation prompt template with the chunk substituted in.
std::string build_prompt(const Chunk& chunk);
const std::string& prompt_template();

// Content-hash identity shared by generated and augmented pairs.
std::string qa_pair_id(const std::string& doc_id, std::size_t segment_index,
                       const std::string& question);

// Strict validation of a generation payload: optional code fences stripped,
// JSON parsed, exactly 12 pairs with exactly 2 per category, no empty
// fields. Returns pairs stamped with the chunk's provenance and
// deterministic content-hash ids. Throws QaParseError.
std::vector<QAPair> parse_qa_response(const std::string& raw, const Chunk& chunk);

struct GenerationDiagnostic {
    std::string doc_id;
    std::size_t segment_index = 0;
    int attempts = 0;
    std::string last_error;
};

// Prompt + completion + parse, regenerating on parse failures up to
// policy.max_attempts total attempts. Exhaustion degrades to an empty list
// plus a diagnostic; only endpoint-level failures propagate.
std::vector<QAPair> generate_for_chunk(const Chunk& chunk, const std::string& species,
                                       ModelGateway& gateway, const RetryPolicy& policy,
                                       const ChatRequest& request_defaults,
                                       std::vector<GenerationDiagnostic>* diagnostics = nullptr,
                                       int* calls_made = nullptr);

// Fraction of answer tokens found in the chunk (clipped multiset counts).
// Pairs under the review floor are flagged, never dropped.
double groundedness_overlap(const QAPair& pair, const Chunk& chunk);
inline constexpr double kGroundednessReviewFloor = 0.30;

void write_pairs_tsv(const std::string& path, const std::vector<QAPair>& pairs);
std::vector<QAPair> read_pairs_tsv(const std::string& path);

}  // namespace qaforge
