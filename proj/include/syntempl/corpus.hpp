#pragma once

#include <istream>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "syntempl/error.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

struct Document {
    std::string id;
    std::string text;
};

// One document with aligned POS tags. offsets, when present, are byte spans
// into the source text, non-overlapping and increasing.
struct TaggedDocument {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> tags;
    std::vector<std::pair<size_t, size_t>> offsets;
};

enum class CorpusFormat { PlainLines, JsonlRaw, JsonlTagged };

inline const char* format_name(CorpusFormat f) {
    switch (f) {
        case CorpusFormat::PlainLines: return "plain-lines";
        case CorpusFormat::JsonlRaw: return "json-lines-raw";
        case CorpusFormat::JsonlTagged: return "json-lines-tagged";
    }
    return "?";
}

inline std::optional<CorpusFormat> parse_format(std::string_view s) {
    if (s == "plain-lines" || s == "plain") return CorpusFormat::PlainLines;
    if (s == "json-lines-raw" || s == "jsonl" || s == "jsonl-raw") return CorpusFormat::JsonlRaw;
    if (s == "json-lines-tagged" || s == "jsonl-tagged") return CorpusFormat::JsonlTagged;
    return std::nullopt;
}

// Sniff the format from the first non-empty line. A line that parses as a
// JSON object is unambiguous; anything else could be plain text or garbage,
// so callers without an explicit declaration get an error for non-JSON input.
inline CorpusFormat detect_format(std::string_view first_line) {
    auto parsed = nlohmann::json::parse(first_line, nullptr, false);
    if (parsed.is_object()) {
        if (parsed.contains("tokens") && parsed.contains("tags")) return CorpusFormat::JsonlTagged;
        if (parsed.contains("text")) return CorpusFormat::JsonlRaw;
        throw DataError("json-lines record at line 1 has neither \"text\" nor \"tokens\"/\"tags\"");
    }
    throw DataError(
        "cannot detect corpus format from first line; declare it explicitly "
        "(plain-lines, json-lines-raw, json-lines-tagged)");
}

namespace detail {

inline std::string require_string(const nlohmann::json& rec, const char* field, size_t line_no) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_string())
        throw DataError("malformed record at line " + std::to_string(line_no) +
                        ": missing or non-string field \"" + field + "\"");
    return it->get<std::string>();
}

inline std::vector<std::string> require_string_array(const nlohmann::json& rec, const char* field,
                                                     size_t line_no) {
    auto it = rec.find(field);
    if (it == rec.end() || !it->is_array())
        throw DataError("malformed record at line " + std::to_string(line_no) +
                        ": missing or non-array field \"" + field + "\"");
    std::vector<std::string> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_string())
            throw DataError("malformed record at line " + std::to_string(line_no) +
                            ": non-string element in \"" + field + "\"");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace detail

// Single-reader streaming ingestion. Yields records in file order and
// rejects duplicate ids, invalid UTF-8, and malformed records with the
// offending line number.
class CorpusReader {
  public:
    using Record = std::variant<Document, TaggedDocument>;

    CorpusReader(std::istream& in, CorpusFormat format) : in_(in), format_(format) {}

    CorpusFormat format() const { return format_; }

    std::optional<Record> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (format_ != CorpusFormat::PlainLines && line.empty()) continue;
            if (!utf8_valid(line))
                throw DataError("invalid UTF-8 at line " + std::to_string(line_no_));
            switch (format_) {
                case CorpusFormat::PlainLines: {
                    Document d{"line-" + std::to_string(line_no_ - 1), line};
                    check_id(d.id);
                    return Record{std::move(d)};
                }
                case CorpusFormat::JsonlRaw: {
                    auto rec = parse_line(line);
                    Document d{detail::require_string(rec, "id", line_no_),
                               detail::require_string(rec, "text", line_no_)};
                    check_id(d.id);
                    return Record{std::move(d)};
                }
                case CorpusFormat::JsonlTagged: {
                    auto rec = parse_line(line);
                    TaggedDocument d;
                    d.id = detail::require_string(rec, "id", line_no_);
                    d.tokens = detail::require_string_array(rec, "tokens", line_no_);
                    d.tags = detail::require_string_array(rec, "tags", line_no_);
                    if (d.tokens.size() != d.tags.size())
                        throw DataError("length mismatch at line " + std::to_string(line_no_) +
                                        ": |tokens| = " + std::to_string(d.tokens.size()) +
                                        ", |tags| = " + std::to_string(d.tags.size()));
                    check_id(d.id);
                    return Record{std::move(d)};
                }
            }
        }
        return std::nullopt;
    }

    // Convenience for formats that yield raw documents.
    std::optional<Document> next_document() {
        auto rec = next();
        if (!rec) return std::nullopt;
        if (auto* d = std::get_if<Document>(&*rec)) return std::move(*d);
        throw DataError("expected raw documents but input is " + std::string(format_name(format_)));
    }

    std::optional<TaggedDocument> next_tagged() {
        auto rec = next();
        if (!rec) return std::nullopt;
        if (auto* d = std::get_if<TaggedDocument>(&*rec)) return std::move(*d);
        throw DataError("expected tagged documents but input is " +
                        std::string(format_name(format_)));
    }

  private:
    nlohmann::json parse_line(const std::string& line) {
        auto rec = nlohmann::json::parse(line, nullptr, false);
        if (!rec.is_object())
            throw DataError("malformed record at line " + std::to_string(line_no_) +
                            ": not a JSON object");
        return rec;
    }

    void check_id(const std::string& id) {
        if (id.empty()) throw DataError("empty id at line " + std::to_string(line_no_));
        if (!seen_ids_.insert(id).second)
            throw DataError("duplicate id \"" + id + "\" at line " + std::to_string(line_no_));
    }

    std::istream& in_;
    CorpusFormat format_;
    size_t line_no_ = 0;
    std::unordered_set<std::string> seen_ids_;
};

inline void write_document(std::ostream& out, const Document& doc) {
    nlohmann::json rec{{"id", doc.id}, {"text", doc.text}};
    out << rec.dump() << '\n';
}

inline void write_tagged(std::ostream& out, const TaggedDocument& doc) {
    nlohmann::json rec{{"id", doc.id}, {"tokens", doc.tokens}, {"tags", doc.tags}};
    out << rec.dump() << '\n';
}

}  // namespace syntempl
