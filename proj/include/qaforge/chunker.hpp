#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qaforge/ingest.hpp"

namespace qaforge {

struct ChunkConfig {
    std::size_t window_chars = 4000;
    std::size_t overlap_chars = 800;
    std::size_t backscan_chars = 100;

    void validate() const;  // throws ConfigError on invariant violation
};

struct Chunk {
    std::string doc_id;
    std::size_t segment_index = 0;
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::size_t est_tokens = 0;
};

// Whitespace-delimited word count, used as the window sizing heuristic.
std::size_t estimate_tokens(std::string_view text);

// Largest terminal-punctuation index i in [target - backscan, target) wins:
// returns i + 1. No hit: returns target. target at or past the end returns
// the text length, except that target > length(text) is a caller bug.
std::size_t find_sentence_boundary(std::string_view text, std::size_t target,
                                   std::size_t backscan);

// Greedy left-to-right sliding window with sentence-boundary adjustment.
// Every character lands in at least one chunk; starts strictly increase.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkConfig& cfg);

void write_chunks_tsv(const std::string& path, const std::vector<Chunk>& chunks);
std::vector<Chunk> read_chunks_tsv(const std::string& path);

}  // namespace qaforge
