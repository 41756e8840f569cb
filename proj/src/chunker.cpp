#include "qaforge/chunker.hpp"

#include <algorithm>
#include <cctype>

#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

void ChunkConfig::validate() const {
    if (window_chars == 0) throw ConfigError("chunk.window_chars must be > 0");
    if (overlap_chars >= window_chars) {
        throw ConfigError("chunk.overlap_chars must be smaller than window_chars");
    }
    if (backscan_chars > window_chars) {
        throw ConfigError("chunk.backscan_chars must not exceed window_chars");
    }
}

std::size_t estimate_tokens(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

namespace {

bool is_terminal(char c) {
    return c == '.' || c == '!' || c == '?';
}

}  // namespace

std::size_t find_sentence_boundary(std::string_view text, std::size_t target,
                                   std::size_t backscan) {
    if (target > text.size()) {
        throw TargetOutOfRange("boundary target " + std::to_string(target) +
                               " past end of text (" + std::to_string(text.size()) + ")");
    }
    if (target >= text.size()) return text.size();
    const std::size_t floor = target > backscan ? target - backscan : 0;
    for (std::size_t i = target; i > floor; --i) {
        if (is_terminal(text[i - 1])) return i;
    }
    return target;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkConfig& cfg) {
    cfg.validate();
    std::vector<Chunk> chunks;
    const std::string& text = doc.text;
    const std::size_t len = text.size();
    std::size_t start = 0;
    while (start < len) {
        const std::size_t raw_target = start + cfg.window_chars;
        std::size_t end;
        if (raw_target >= len) {
            end = len;
        } else {
            // backscan never reaches before start since backscan <= window
            end = find_sentence_boundary(text, raw_target, cfg.backscan_chars);
        }
        Chunk chunk;
        chunk.doc_id = doc.id;
        chunk.segment_index = chunks.size();
        chunk.char_start = start;
        chunk.char_end = end;
        chunk.text = text.substr(start, end - start);
        chunk.est_tokens = estimate_tokens(chunk.text);
        chunks.push_back(std::move(chunk));
        if (end >= len) break;
        start = std::max(end > cfg.overlap_chars ? end - cfg.overlap_chars : 0, start + 1);
    }
    return chunks;
}

void write_chunks_tsv(const std::string& path, const std::vector<Chunk>& chunks) {
    std::string out;
    for (const Chunk& c : chunks) {
        out += c.doc_id;
        out += '\t';
        out += std::to_string(c.segment_index);
        out += '\t';
        out += std::to_string(c.char_start);
        out += '\t';
        out += std::to_string(c.char_end);
        out += '\t';
        out += std::to_string(c.est_tokens);
        out += '\t';
        out += tsv_escape(c.text);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<Chunk> read_chunks_tsv(const std::string& path) {
    std::vector<Chunk> chunks;
    for (const std::string& line : split_on(read_file(path), '\n')) {
        if (line.empty()) continue;
        const auto f = split_tsv_line(line);
        if (f.size() != 6) throw Error("malformed chunk record: " + line.substr(0, 60));
        Chunk c;
        c.doc_id = f[0];
        c.segment_index = std::stoull(f[1]);
        c.char_start = std::stoull(f[2]);
        c.char_end = std::stoull(f[3]);
        c.est_tokens = std::stoull(f[4]);
        c.text = tsv_unescape(f[5]);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

}  // namespace qaforge
