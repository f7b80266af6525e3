#pragma once

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntempl/corpus.hpp"
#include "syntempl/error.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

// Pinned compressor parameters. CR values are comparable only between reports
// carrying the same id.
inline constexpr const char* kSerializationConfigId = "pos-tags-v1+deflate-l6-w15-m8";

// Streaming DEFLATE of the tag serialization: per document, tags joined by
// single spaces; documents joined by single newlines. Order-sensitive, so the
// stream is fed single-threaded.
class TagStreamCompressor {
  public:
    TagStreamCompressor() {
        stream_.zalloc = Z_NULL;
        stream_.zfree = Z_NULL;
        stream_.opaque = Z_NULL;
        if (deflateInit2(&stream_, 6, Z_DEFLATED, 15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
            throw DataError("deflate initialization failed");
    }
    ~TagStreamCompressor() {
        if (!finished_) deflateEnd(&stream_);
    }
    TagStreamCompressor(const TagStreamCompressor&) = delete;
    TagStreamCompressor& operator=(const TagStreamCompressor&) = delete;

    void add(const std::vector<std::string>& tags) {
        std::string chunk;
        if (any_) chunk.push_back('\n');
        chunk += join(tags, ' ');
        any_ = true;
        original_bytes_ += chunk.size();
        feed(chunk, Z_NO_FLUSH);
    }

    uint64_t original_bytes() const { return original_bytes_; }

    uint64_t finish() {
        if (!any_) throw DataError("compression_ratio over an empty corpus");
        if (!finished_) {
            feed({}, Z_FINISH);
            deflateEnd(&stream_);
            finished_ = true;
        }
        return compressed_bytes_;
    }

    double ratio() {
        const uint64_t compressed = finish();
        return static_cast<double>(original_bytes_) / static_cast<double>(compressed);
    }

  private:
    void feed(std::string_view data, int flush) {
        stream_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
        stream_.avail_in = static_cast<uInt>(data.size());
        unsigned char buf[1 << 15];
        do {
            stream_.next_out = buf;
            stream_.avail_out = sizeof(buf);
            const int rc = deflate(&stream_, flush);
            if (rc == Z_STREAM_ERROR) throw DataError("deflate stream error");
            compressed_bytes_ += sizeof(buf) - stream_.avail_out;
        } while (stream_.avail_out == 0);
    }

    z_stream stream_{};
    bool any_ = false;
    bool finished_ = false;
    uint64_t original_bytes_ = 0;
    uint64_t compressed_bytes_ = 0;
};

template <typename Range>
double compression_ratio(Range&& docs) {
    TagStreamCompressor c;
    for (const auto& d : docs) c.add(d.tags);
    return c.ratio();
}

struct PerNMetrics {
    double rate = 0.0;
    double tpt = 0.0;
    uint64_t template_count = 0;
};

struct DiversityReport {
    double cr_pos = 0.0;
    double avg_text_length = 0.0;  // tokens per document
    std::map<int, PerNMetrics> per_n;
    std::string corpus_id;
    std::string serialization_config_id = kSerializationConfigId;
    std::string config_hash;
};

struct PerplexityInput {
    // one entry per document: id + per-template entropies, in bits
    std::vector<std::pair<std::string, std::vector<double>>> docs;
};

struct PerplexityResult {
    double value = 0.0;
    std::vector<std::string> skipped_doc_ids;  // documents with zero templates
};

// Per-document mean of 2^H over its template entropies, then mean over
// documents. Documents without any entropy are excluded with a warning.
inline PerplexityResult avg_template_perplexity(const PerplexityInput& input) {
    PerplexityResult out;
    double sum = 0.0;
    size_t used = 0;
    for (const auto& [id, entropies] : input.docs) {
        if (entropies.empty()) {
            out.skipped_doc_ids.push_back(id);
            continue;
        }
        double doc_sum = 0.0;
        for (const double h : entropies) {
            if (!std::isfinite(h) || h < 0.0)
                throw DataError("non-finite or negative entropy for document \"" + id + "\"");
            doc_sum += std::exp2(h);
        }
        sum += doc_sum / static_cast<double>(entropies.size());
        ++used;
    }
    if (used == 0) throw DataError("no document carries any template entropy");
    out.value = sum / static_cast<double>(used);
    return out;
}

inline PerplexityInput load_perplexity_input(std::istream& in) {
    PerplexityInput input;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line, nullptr, false);
        if (!rec.is_object() || !rec.contains("doc_id") || !rec.contains("entropies"))
            throw DataError("malformed entropy record at line " + std::to_string(line_no));
        input.docs.emplace_back(rec.at("doc_id").get<std::string>(),
                                rec.at("entropies").get<std::vector<double>>());
    }
    return input;
}

// ---- report serialization and rendering -------------------------------------

inline nlohmann::json report_to_json(const DiversityReport& r) {
    nlohmann::json per_n = nlohmann::json::object();
    for (const auto& [n, m] : r.per_n)
        per_n[std::to_string(n)] = {
            {"rate", m.rate}, {"tpt", m.tpt}, {"template_count", m.template_count}};
    return {{"format", "syntempl-report"},
            {"version", 1},
            {"corpus_id", r.corpus_id},
            {"cr_pos", r.cr_pos},
            {"avg_text_length", r.avg_text_length},
            {"per_n", per_n},
            {"serialization_config_id", r.serialization_config_id},
            {"config_hash", r.config_hash}};
}

inline DiversityReport report_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "syntempl-report")
        throw DataError("not a diversity report");
    DiversityReport r;
    r.corpus_id = j.value("corpus_id", "");
    r.cr_pos = j.at("cr_pos").get<double>();
    r.avg_text_length = j.at("avg_text_length").get<double>();
    r.serialization_config_id = j.value("serialization_config_id", "");
    r.config_hash = j.value("config_hash", "");
    for (const auto& [ns, m] : j.at("per_n").items()) {
        PerNMetrics pm;
        pm.rate = m.at("rate").get<double>();
        pm.tpt = m.at("tpt").get<double>();
        pm.template_count = m.at("template_count").get<uint64_t>();
        r.per_n[std::stoi(ns)] = pm;
    }
    return r;
}

namespace detail {

inline std::string fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

}  // namespace detail

// Table rows: corpus, CR-POS, average length, then per-n "rate% (tpt)".
inline std::string render_reports_md(const std::vector<DiversityReport>& reports) {
    std::map<int, bool> ns;
    for (const auto& r : reports)
        for (const auto& [n, _] : r.per_n) ns[n] = true;
    std::string out = "| Corpus | CR-POS | Avg length |";
    for (const auto& [n, _] : ns) out += " >=1 Templates % (n=" + std::to_string(n) + ") |";
    out += "\n|---|---|---|";
    for (size_t i = 0; i < ns.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : reports) {
        out += "| " + r.corpus_id + " | " + detail::fixed(r.cr_pos, 2) + " | " +
               detail::fixed(r.avg_text_length, 1) + " |";
        for (const auto& [n, _] : ns) {
            auto it = r.per_n.find(n);
            if (it == r.per_n.end()) {
                out += " - |";
            } else {
                out += " " + detail::fixed(100.0 * it->second.rate, 1) + " (" +
                       detail::fixed(it->second.tpt, 3) + ") |";
            }
        }
        out += "\n";
    }
    return out;
}

inline std::string render_reports_csv(const std::vector<DiversityReport>& reports) {
    std::map<int, bool> ns;
    for (const auto& r : reports)
        for (const auto& [n, _] : r.per_n) ns[n] = true;
    std::string out = "corpus,cr_pos,avg_text_length";
    for (const auto& [n, _] : ns)
        out += ",rate_n" + std::to_string(n) + ",tpt_n" + std::to_string(n);
    out += "\n";
    for (const auto& r : reports) {
        out += r.corpus_id + "," + detail::fixed(r.cr_pos, 6) + "," +
               detail::fixed(r.avg_text_length, 3);
        for (const auto& [n, _] : ns) {
            auto it = r.per_n.find(n);
            if (it == r.per_n.end())
                out += ",,";
            else
                out += "," + detail::fixed(it->second.rate, 6) + "," +
                       detail::fixed(it->second.tpt, 6);
        }
        out += "\n";
    }
    return out;
}

}  // namespace syntempl
