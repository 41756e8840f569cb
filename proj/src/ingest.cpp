#include "qaforge/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "qaforge/errors.hpp"
#include "qaforge/util.hpp"

namespace qaforge {

namespace {

// ---------------------------------------------------------------- zip ----

std::uint32_t read_u32(const std::string& b, size_t off) {
    if (off + 4 > b.size()) throw NotAZipArchive("truncated zip structure");
    return static_cast<std::uint8_t>(b[off]) | (static_cast<std::uint8_t>(b[off + 1]) << 8) |
           (static_cast<std::uint8_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[off + 3])) << 24);
}

std::uint16_t read_u16(const std::string& b, size_t off) {
    if (off + 2 > b.size()) throw NotAZipArchive("truncated zip structure");
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[off]) |
                                      (static_cast<std::uint8_t>(b[off + 1]) << 8));
}

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;

std::string inflate_raw(const std::string& compressed, std::size_t expected_size) {
    std::string out(expected_size, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
        throw NotAZipArchive("inflate initialization failed");
    }
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        throw NotAZipArchive("deflated zip entry is corrupt");
    }
    out.resize(out.size() - zs.avail_out);
    return out;
}

// Extracts one named entry. The central directory is authoritative for
// sizes and offsets; local headers with data descriptors lie about sizes.
std::string zip_read_entry(const std::string& bytes, const std::string& entry_name) {
    if (bytes.size() < 22) throw NotAZipArchive("input smaller than an empty zip");

    size_t eocd = std::string::npos;
    const size_t scan_floor = bytes.size() > 22 + 65535 ? bytes.size() - 22 - 65535 : 0;
    for (size_t pos = bytes.size() - 22; ; --pos) {
        if (read_u32(bytes, pos) == kEocdSig) {
            eocd = pos;
            break;
        }
        if (pos == scan_floor) break;
    }
    if (eocd == std::string::npos) throw NotAZipArchive("end-of-central-directory record not found");

    const std::uint16_t entry_count = read_u16(bytes, eocd + 10);
    const std::uint32_t cd_offset = read_u32(bytes, eocd + 16);
    size_t pos = cd_offset;
    for (std::uint16_t i = 0; i < entry_count; ++i) {
        if (read_u32(bytes, pos) != kCentralSig) {
            throw NotAZipArchive("central directory entry " + std::to_string(i) + " has a bad signature");
        }
        const std::uint16_t method = read_u16(bytes, pos + 10);
        const std::uint32_t comp_size = read_u32(bytes, pos + 20);
        const std::uint32_t uncomp_size = read_u32(bytes, pos + 24);
        const std::uint16_t name_len = read_u16(bytes, pos + 28);
        const std::uint16_t extra_len = read_u16(bytes, pos + 30);
        const std::uint16_t comment_len = read_u16(bytes, pos + 32);
        const std::uint32_t local_off = read_u32(bytes, pos + 42);
        if (pos + 46 + name_len > bytes.size()) throw NotAZipArchive("truncated central directory");
        const std::string name = bytes.substr(pos + 46, name_len);

        if (name == entry_name) {
            if (read_u32(bytes, local_off) != kLocalSig) {
                throw NotAZipArchive("local header signature mismatch for " + name);
            }
            const std::uint16_t local_name_len = read_u16(bytes, local_off + 26);
            const std::uint16_t local_extra_len = read_u16(bytes, local_off + 28);
            const size_t data_off = local_off + 30 + local_name_len + local_extra_len;
            if (data_off + comp_size > bytes.size()) {
                throw NotAZipArchive("entry data for " + name + " extends past end of archive");
            }
            const std::string payload = bytes.substr(data_off, comp_size);
            if (method == 0) return payload;
            if (method == 8) return inflate_raw(payload, uncomp_size);
            throw NotAZipArchive("unsupported compression method " + std::to_string(method));
        }
        pos += 46 + name_len + extra_len + comment_len;
    }
    throw MissingDocumentPart("archive has no entry " + entry_name);
}

// ---------------------------------------------------------------- xml ----

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const size_t semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            throw MalformedMarkup("unterminated entity reference");
        }
        const std::string_view ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                           : std::stol(std::string(ent.substr(1)));
            } catch (...) {
                throw MalformedMarkup("bad numeric character reference &" + std::string(ent) + ";");
            }
            if (code < 0x80) {
                out += static_cast<char>(code);
            } else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            } else {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
        } else {
            throw MalformedMarkup("unknown entity &" + std::string(ent) + ";");
        }
        i = semi;
    }
    return out;
}

// Minimal pull scan of the OOXML main part. Only the handful of w: elements
// that carry or delimit visible text matter here.
std::string extract_document_xml(const std::string& xml) {
    std::string out;
    std::string paragraph;
    std::string cell;
    std::vector<std::string> row;
    int cell_depth = 0;
    bool in_text_run = false;

    auto sink = [&]() -> std::string& { return cell_depth > 0 ? cell : paragraph; };

    size_t i = 0;
    while (i < xml.size()) {
        if (xml[i] != '<') {
            const size_t next = xml.find('<', i);
            const size_t end = next == std::string::npos ? xml.size() : next;
            if (in_text_run) sink() += decode_entities(std::string_view(xml).substr(i, end - i));
            i = end;
            continue;
        }
        if (xml.compare(i, 4, "<!--") == 0) {
            const size_t close = xml.find("-->", i);
            if (close == std::string::npos) throw MalformedMarkup("unterminated comment");
            i = close + 3;
            continue;
        }
        const size_t close = xml.find('>', i);
        if (close == std::string::npos) throw MalformedMarkup("unterminated tag at byte " + std::to_string(i));
        std::string_view tag(xml.data() + i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) throw MalformedMarkup("empty tag");
        if (tag[0] == '?') continue;  // declaration

        const bool closing = tag[0] == '/';
        if (closing) tag.remove_prefix(1);
        const bool self_closing = !tag.empty() && tag.back() == '/';
        if (self_closing) tag.remove_suffix(1);
        const size_t name_end = tag.find_first_of(" \t\r\n");
        const std::string_view name = name_end == std::string_view::npos ? tag : tag.substr(0, name_end);

        if (name == "w:t") {
            if (!closing && !self_closing) {
                if (in_text_run) throw MalformedMarkup("nested w:t run");
                in_text_run = true;
            } else if (closing) {
                if (!in_text_run) throw MalformedMarkup("stray closing w:t");
                in_text_run = false;
            }
        } else if (name == "w:tab" && !closing) {
            sink() += ' ';
        } else if (name == "w:br" && !closing) {
            sink() += '\n';
        } else if (name == "w:p" && closing) {
            if (cell_depth > 0) {
                if (!cell.empty() && cell.back() != ' ') cell += ' ';
            } else {
                out += paragraph;
                out += '\n';
                paragraph.clear();
            }
        } else if (name == "w:tc") {
            if (!closing) {
                if (++cell_depth == 1) cell.clear();
            } else {
                if (cell_depth == 0) throw MalformedMarkup("stray closing w:tc");
                if (--cell_depth == 0) {
                    row.push_back(trim(cell));
                    cell.clear();
                } else {
                    cell += "; ";
                }
            }
        } else if (name == "w:tr" && closing) {
            std::string line;
            for (size_t c = 0; c < row.size(); ++c) {
                if (c > 0) line += "; ";
                line += row[c];
            }
            out += line;
            out += '\n';
            row.clear();
        }
    }
    if (in_text_run) throw MalformedMarkup("unterminated w:t run");
    if (cell_depth != 0) throw MalformedMarkup("unterminated table cell");
    return out;
}

}  // namespace

DocFormat format_for_path(const std::string& path) {
    const size_t dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : to_lower_ascii(path.substr(dot));
    if (ext == ".docx") return DocFormat::docx;
    if (ext == ".txt") return DocFormat::plain_text;
    if (ext == ".md") return DocFormat::markdown;
    throw UnsupportedFormat(ext.empty() ? path : ext);
}

std::string extract_docx(const RawDocument& raw) {
    const std::string xml = zip_read_entry(raw.bytes, "word/document.xml");
    std::string text = extract_document_xml(xml);
    // trailing paragraph newline is insignificant
    while (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

std::string strip_markdown(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool at_line_start = true;
    for (size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (at_line_start && c == '#') {
            size_t j = i;
            while (j < text.size() && text[j] == '#') ++j;
            if (j < text.size() && text[j] == ' ') {
                i = j;  // swallow the marker and its space
                continue;
            }
        }
        at_line_start = c == '\n';
        if (c == '*') continue;
        if (c == '`') continue;
        if (c == '_') {
            const bool outer_before = i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])) ||
                                      text[i - 1] == '_';
            const bool outer_after = i + 1 == text.size() ||
                                     std::isspace(static_cast<unsigned char>(text[i + 1])) ||
                                     std::ispunct(static_cast<unsigned char>(text[i + 1]));
            if (outer_before || outer_after) continue;  // emphasis edge, not snake_case
        }
        if (c == '!' && i + 1 < text.size() && text[i + 1] == '[') continue;
        if (c == '[') {
            const size_t close = text.find(']', i);
            if (close != std::string_view::npos) {
                out += text.substr(i + 1, close - i - 1);
                i = close;
                if (i + 1 < text.size() && (text[i + 1] == '(' || text[i + 1] == '[')) {
                    const char closer = text[i + 1] == '(' ? ')' : ']';
                    const size_t target_end = text.find(closer, i + 1);
                    if (target_end != std::string_view::npos) i = target_end;
                }
                continue;
            }
        }
        out += c;
    }
    return out;
}

std::string normalize_text(std::string_view raw_text) {
    // pass 1: drop control characters that are neither newline nor
    // collapsible whitespace
    std::string cleaned;
    cleaned.reserve(raw_text.size());
    for (char c : raw_text) {
        const unsigned char u = static_cast<unsigned char>(c);
        if ((u < 0x20 && c != '\n' && c != '\t' && c != '\r') || u == 0x7F) continue;
        cleaned += c;
    }
    // pass 2: collapse whitespace runs; a run containing a newline is a
    // paragraph break
    std::string out;
    out.reserve(cleaned.size());
    size_t i = 0;
    while (i < cleaned.size()) {
        const char c = cleaned[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            bool has_newline = false;
            while (i < cleaned.size() &&
                   (cleaned[i] == ' ' || cleaned[i] == '\t' || cleaned[i] == '\r' || cleaned[i] == '\n')) {
                has_newline |= cleaned[i] == '\n';
                ++i;
            }
            if (!out.empty() && i < cleaned.size()) out += has_newline ? '\n' : ' ';
        } else {
            out += c;
            ++i;
        }
    }
    return out;
}

std::vector<Document> load_corpus(const std::vector<std::string>& paths,
                                  const std::map<std::string, std::string>& species_map) {
    std::vector<std::string> ordered = paths;
    std::sort(ordered.begin(), ordered.end());

    std::vector<Document> docs;
    docs.reserve(ordered.size());
    for (const std::string& path : ordered) {
        const DocFormat format = format_for_path(path);
        RawDocument raw{path, format, read_file(path)};
        std::string text;
        switch (format) {
            case DocFormat::docx: text = extract_docx(raw); break;
            case DocFormat::markdown: text = strip_markdown(raw.bytes); break;
            case DocFormat::plain_text: text = raw.bytes; break;
        }
        text = normalize_text(text);
        Document doc;
        doc.id = fnv1a64_hex(path);
        auto it = species_map.find(path);
        doc.species = it != species_map.end() ? it->second : "unlabeled";
        doc.text = std::move(text);
        doc.source_path = path;
        doc.char_count = doc.text.size();
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<std::pair<std::string, std::string>> read_corpus_manifest(const std::string& path) {
    const std::string content = read_file(path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<std::pair<std::string, std::string>> entries;
    for (const std::string& line : split_on(content, '\n')) {
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto fields = split_tsv_line(stripped);
        std::filesystem::path p(fields[0]);
        if (p.is_relative()) p = base / p;
        entries.emplace_back(p.string(), fields.size() > 1 ? trim(fields[1]) : "unlabeled");
    }
    return entries;
}

void write_documents_tsv(const std::string& path, const std::vector<Document>& docs) {
    std::string out;
    for (const Document& d : docs) {
        out += d.id;
        out += '\t';
        out += tsv_escape(d.species);
        out += '\t';
        out += tsv_escape(d.source_path);
        out += '\t';
        out += std::to_string(d.char_count);
        out += '\t';
        out += tsv_escape(d.text);
        out += '\n';
    }
    write_file(path, out);
}

std::vector<Document> read_documents_tsv(const std::string& path) {
    std::vector<Document> docs;
    for (const std::string& line : split_on(read_file(path), '\n')) {
        if (line.empty()) continue;
        const auto f = split_tsv_line(line);
        if (f.size() != 5) throw Error("malformed documents record: " + line.substr(0, 60));
        Document d;
        d.id = f[0];
        d.species = tsv_unescape(f[1]);
        d.source_path = tsv_unescape(f[2]);
        d.char_count = std::stoull(f[3]);
        d.text = tsv_unescape(f[4]);
        docs.push_back(std::move(d));
    }
    return docs;
}

}  // namespace qaforge
