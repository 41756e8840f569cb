#pragma once

// Shared helpers for the test suites: an in-process mock of the chat +
// embeddings endpoint, a minimal zip writer for docx fixtures, and
// deterministic fixture generators.

#include <zlib.h>

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "qaforge/qa_gen.hpp"
#include "qaforge/util.hpp"

namespace qaforge::testing {

using nlohmann::json;

inline std::string chat_completion_body(const std::string& text,
                                        const std::string& finish_reason = "stop") {
    json j = {{"choices",
               json::array({{{"message", {{"role", "assistant"}, {"content", text}}},
                             {"finish_reason", finish_reason}}})}};
    return j.dump();
}

// Deterministic pseudo-embedding: 8 strictly positive components derived
// from the text hash, identical for identical texts.
inline std::vector<double> embedding_for_text(const std::string& text) {
    std::vector<double> v(8);
    std::uint64_t h = fnv1a64(text);
    for (double& x : v) {
        h = h * 6364136223846793005ULL + 1442695040888963407ULL;
        x = 0.25 + 0.75 * static_cast<double>(h >> 40) / static_cast<double>(1 << 24);
    }
    return v;
}

inline std::string embeddings_body(const std::vector<std::string>& inputs) {
    json data = json::array();
    for (size_t i = 0; i < inputs.size(); ++i) {
        data.push_back({{"index", i}, {"embedding", embedding_for_text(inputs[i])}});
    }
    return json{{"data", data}}.dump();
}

// Scripted endpoint. Handlers may be replaced per test; call counts and the
// peak number of concurrently served requests are tracked.
class MockEndpoint {
  public:
    // returns (status, body)
    using ChatHook = std::function<std::pair<int, std::string>(const json& request, int call_no)>;
    using EmbedHook = std::function<std::pair<int, std::string>(const json& request, int call_no)>;

    MockEndpoint() {
        server_.Post("/v1/chat/completions",
                     [this](const httplib::Request& req, httplib::Response& res) {
                         serve(req, res, chat_hook_, chat_calls_);
                     });
        server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
            serve(req, res, embed_hook_, embed_calls_);
        });
        chat_hook_ = [](const json&, int) { return std::make_pair(200, chat_completion_body("OK")); };
        embed_hook_ = [](const json& request, int) {
            return std::make_pair(200, embeddings_body(request.at("input").get<std::vector<std::string>>()));
        };
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }

    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    void set_chat(ChatHook hook) { chat_hook_ = std::move(hook); }
    void set_embeddings(EmbedHook hook) { embed_hook_ = std::move(hook); }
    void set_handler_delay_ms(int ms) { handler_delay_ms_ = ms; }

    int chat_calls() const { return chat_calls_.load(); }
    int embed_calls() const { return embed_calls_.load(); }
    int peak_in_flight() const { return peak_in_flight_.load(); }

    // last user message content of a chat request body
    static std::string user_content(const json& request) {
        std::string content;
        for (const json& m : request.at("messages")) {
            if (m.at("role") == "user") content = m.at("content").get<std::string>();
        }
        return content;
    }

  private:
    template <typename Hook>
    void serve(const httplib::Request& req, httplib::Response& res, Hook& hook,
               std::atomic<int>& counter) {
        const int current = ++in_flight_;
        int peak = peak_in_flight_.load();
        while (current > peak && !peak_in_flight_.compare_exchange_weak(peak, current)) {
        }
        if (handler_delay_ms_ > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(handler_delay_ms_));
        }
        const int call_no = ++counter;
        json body;
        try {
            body = json::parse(req.body);
        } catch (...) {
            body = json::object();
        }
        const auto [status, response_body] = hook(body, call_no);
        res.status = status;
        res.set_content(response_body, "application/json");
        --in_flight_;
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    ChatHook chat_hook_;
    EmbedHook embed_hook_;
    std::atomic<int> chat_calls_{0};
    std::atomic<int> embed_calls_{0};
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_in_flight_{0};
    int handler_delay_ms_ = 0;
};

// ---- minimal zip writer (stored or deflated entries) for docx fixtures ----

struct ZipEntrySpec {
    std::string name;
    std::string content;
    bool deflate = false;
};

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xFF);
    out += static_cast<char>((v >> 8) & 0xFF);
}

inline void put_u32(std::string& out, std::uint32_t v) {
    out += static_cast<char>(v & 0xFF);
    out += static_cast<char>((v >> 8) & 0xFF);
    out += static_cast<char>((v >> 16) & 0xFF);
    out += static_cast<char>((v >> 24) & 0xFF);
}

inline std::string deflate_raw(const std::string& data) {
    z_stream zs{};
    deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY);
    std::string out(deflateBound(&zs, data.size()), '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    deflate(&zs, Z_FINISH);
    out.resize(out.size() - zs.avail_out);
    deflateEnd(&zs);
    return out;
}

}  // namespace detail

inline std::string make_zip(const std::vector<ZipEntrySpec>& entries) {
    std::string out;
    std::string central;
    for (const ZipEntrySpec& e : entries) {
        const std::uint32_t crc =
            crc32(0, reinterpret_cast<const Bytef*>(e.content.data()), e.content.size());
        const std::string payload = e.deflate ? detail::deflate_raw(e.content) : e.content;
        const std::uint16_t method = e.deflate ? 8 : 0;
        const std::uint32_t local_off = static_cast<std::uint32_t>(out.size());

        detail::put_u32(out, 0x04034b50);
        detail::put_u16(out, 20);      // version needed
        detail::put_u16(out, 0);       // flags
        detail::put_u16(out, method);
        detail::put_u16(out, 0);       // mod time
        detail::put_u16(out, 0);       // mod date
        detail::put_u32(out, crc);
        detail::put_u32(out, static_cast<std::uint32_t>(payload.size()));
        detail::put_u32(out, static_cast<std::uint32_t>(e.content.size()));
        detail::put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        detail::put_u16(out, 0);       // extra len
        out += e.name;
        out += payload;

        detail::put_u32(central, 0x02014b50);
        detail::put_u16(central, 20);  // version made by
        detail::put_u16(central, 20);  // version needed
        detail::put_u16(central, 0);
        detail::put_u16(central, method);
        detail::put_u16(central, 0);
        detail::put_u16(central, 0);
        detail::put_u32(central, crc);
        detail::put_u32(central, static_cast<std::uint32_t>(payload.size()));
        detail::put_u32(central, static_cast<std::uint32_t>(e.content.size()));
        detail::put_u16(central, static_cast<std::uint16_t>(e.name.size()));
        detail::put_u16(central, 0);   // extra
        detail::put_u16(central, 0);   // comment
        detail::put_u16(central, 0);   // disk
        detail::put_u16(central, 0);   // internal attrs
        detail::put_u32(central, 0);   // external attrs
        detail::put_u32(central, local_off);
        central += e.name;
    }
    const std::uint32_t central_off = static_cast<std::uint32_t>(out.size());
    out += central;
    detail::put_u32(out, 0x06054b50);
    detail::put_u16(out, 0);
    detail::put_u16(out, 0);
    detail::put_u16(out, static_cast<std::uint16_t>(entries.size()));
    detail::put_u16(out, static_cast<std::uint16_t>(entries.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(central.size()));
    detail::put_u32(out, central_off);
    detail::put_u16(out, 0);  // comment length
    return out;
}

// word/document.xml with one <w:t> run per element of each paragraph
inline std::string docx_xml(const std::vector<std::vector<std::string>>& paragraphs) {
    std::string xml = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<w:document><w:body>";
    for (const auto& runs : paragraphs) {
        xml += "<w:p>";
        for (const std::string& run : runs) {
            xml += "<w:r><w:t>" + run + "</w:t></w:r>";
        }
        xml += "</w:p>";
    }
    xml += "</w:body></w:document>";
    return xml;
}

inline std::string docx_bytes(const std::vector<std::vector<std::string>>& paragraphs,
                              bool deflate = false) {
    return make_zip({{"[Content_Types].xml", "<Types/>", deflate},
                     {"word/document.xml", docx_xml(paragraphs), deflate}});
}

// Chat behavior sufficient to drive the whole pipeline: generation prompts
// get a schema-conforming payload keyed to the chunk, evaluation questions
// get a deterministic short answer.
inline std::string valid_qa_payload(const std::string& tag);

inline MockEndpoint::ChatHook pipeline_chat_hook() {
    return [](const json& body, int) {
        const std::string content = MockEndpoint::user_content(body);
        if (content.rfind("Read the following", 0) == 0) {
            return std::make_pair(200,
                                  chat_completion_body(valid_qa_payload(fnv1a64_hex(content))));
        }
        if (content.rfind("Rewrite the following question", 0) == 0) {
            const std::string original = content.substr(content.rfind('\n') + 1);
            return std::make_pair(
                200, chat_completion_body("Stated another way entirely: " + original));
        }
        return std::make_pair(
            200, chat_completion_body("Deterministic response " + fnv1a64_hex(content) + "."));
    };
}

// A canonical, schema-conforming generation payload. The tag keeps
// questions distinct across chunks.
inline std::string valid_qa_payload(const std::string& tag) {
    json pairs = json::array();
    int k = 0;
    for (QAType type : all_qa_types()) {
        for (int i = 0; i < 2; ++i) {
            ++k;
            const std::string name = to_string(type);
            pairs.push_back({{"type", name},
                             {"question", "What does " + tag + " say about " + name + " item " +
                                              std::to_string(i + 1) + "?"},
                             {"answer", "The " + tag + " passage reports " + name + " detail " +
                                            std::to_string(k) + "."}});
        }
    }
    return json{{"qa_pairs", pairs}}.dump();
}

}  // namespace qaforge::testing
