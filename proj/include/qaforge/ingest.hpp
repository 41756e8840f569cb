#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qaforge {

enum class DocFormat { docx, plain_text, markdown };

DocFormat format_for_path(const std::string& path);  // throws UnsupportedFormat

struct RawDocument {
    std::string source_path;
    DocFormat format = DocFormat::plain_text;
    std::string bytes;
};

struct Document {
    std::string id;  // stable hash of source_path
    std::string species;
    std::string text;
    std::string source_path;
    std::size_t char_count = 0;
};

// Pulls the visible text out of an OOXML word/document.xml container:
// text runs concatenated in document order, one newline per paragraph,
// table rows flattened with cells joined by "; ".
// Throws NotAZipArchive / MissingDocumentPart / MalformedMarkup.
std::string extract_docx(const RawDocument& raw);

// Strips markdown heading markers, emphasis markers, and link syntax,
// keeping link anchor text.
std::string strip_markdown(std::string_view text);

// Whitespace standardization: control characters other than newline are
// removed, whitespace runs collapse to a single space (single newline when
// the run contained a line break), ends trimmed. Idempotent.
std::string normalize_text(std::string_view raw_text);

// One Document per path in lexicographic path order; paths missing from
// species_map get species "unlabeled".
std::vector<Document> load_corpus(const std::vector<std::string>& paths,
                                  const std::map<std::string, std::string>& species_map);

// Corpus manifest: one "path<TAB>species" record per line; blank lines and
// lines starting with '#' are skipped. Relative paths resolve against the
// manifest's directory.
std::vector<std::pair<std::string, std::string>> read_corpus_manifest(const std::string& path);

void write_documents_tsv(const std::string& path, const std::vector<Document>& docs);
std::vector<Document> read_documents_tsv(const std::string& path);

}  // namespace qaforge
