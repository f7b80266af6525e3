#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "syntempl/corpus.hpp"
#include "syntempl/error.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

struct TemplateMatch {
    std::string doc_id;
    size_t start = 0;  // token index
    int n = 0;
    uint64_t rank = 0;
    std::string matched_text;  // tokens joined by single spaces
};

// Hash index over a TemplateSet so per-document matching is a window probe.
class TemplateIndex {
  public:
    explicit TemplateIndex(const TemplateSet& set) {
        for (const auto& [n, templates] : set.per_n) {
            auto& m = per_n_[n];
            for (const auto& t : templates) m.emplace(t.key(), t.rank);
        }
    }

    const std::map<int, std::unordered_map<std::string, uint64_t, StringHash, StringEq>>& per_n()
        const {
        return per_n_;
    }

  private:
    std::map<int, std::unordered_map<std::string, uint64_t, StringHash, StringEq>> per_n_;
};

// All (start, template) occurrences, overlapping and nested included,
// sorted by (start, n, rank).
inline std::vector<TemplateMatch> match(const TaggedDocument& doc, const TemplateIndex& index) {
    std::vector<TemplateMatch> out;
    std::string joined;
    std::vector<size_t> starts;
    for (const auto& [n, table] : index.per_n()) {
        size_t pos = 0;
        detail::for_each_window(doc.tags, static_cast<size_t>(n), joined, starts,
                                [&](std::string_view key) {
                                    auto it = table.find(key);
                                    if (it != table.end()) {
                                        TemplateMatch m;
                                        m.doc_id = doc.id;
                                        m.start = pos;
                                        m.n = n;
                                        m.rank = it->second;
                                        out.push_back(std::move(m));
                                    }
                                    ++pos;
                                });
    }
    std::sort(out.begin(), out.end(), [](const TemplateMatch& a, const TemplateMatch& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.n != b.n) return a.n < b.n;
        return a.rank < b.rank;
    });
    for (auto& m : out) {
        std::vector<std::string> span(doc.tokens.begin() + m.start,
                                      doc.tokens.begin() + m.start + m.n);
        m.matched_text = join(span, ' ');
    }
    return out;
}

inline std::vector<TemplateMatch> match(const TaggedDocument& doc, const TemplateSet& set) {
    return match(doc, TemplateIndex(set));
}

struct PerNAggregate {
    uint64_t docs_with_match = 0;
    uint64_t total_matches = 0;
};

// Associative aggregates over a corpus; merge-able across parallel workers.
struct MatchReport {
    std::map<int, PerNAggregate> per_n;
    uint64_t doc_count = 0;
    uint64_t total_tokens = 0;

    void merge(const MatchReport& other) {
        doc_count += other.doc_count;
        total_tokens += other.total_tokens;
        for (const auto& [n, agg] : other.per_n) {
            per_n[n].docs_with_match += agg.docs_with_match;
            per_n[n].total_matches += agg.total_matches;
        }
    }
};

class MatchAccumulator {
  public:
    explicit MatchAccumulator(const TemplateIndex& index) : index_(index) {}

    // Consumes the per-document match list (already computed or computed here).
    void add(const TaggedDocument& doc) { add(doc, match(doc, index_)); }

    void add(const TaggedDocument& doc, const std::vector<TemplateMatch>& matches) {
        ++report_.doc_count;
        report_.total_tokens += doc.tokens.size();
        std::map<int, uint64_t> by_n;
        for (const auto& m : matches) ++by_n[m.n];
        for (const auto& [n, table] : index_.per_n()) {
            auto& agg = report_.per_n[n];
            auto it = by_n.find(n);
            if (it != by_n.end() && it->second > 0) {
                ++agg.docs_with_match;
                agg.total_matches += it->second;
            }
        }
    }

    const MatchReport& report() const { return report_; }

  private:
    const TemplateIndex& index_;
    MatchReport report_;
};

inline double template_rate(const MatchReport& report, int n) {
    if (report.doc_count == 0) throw DataError("template_rate over an empty corpus");
    auto it = report.per_n.find(n);
    const uint64_t hits = it == report.per_n.end() ? 0 : it->second.docs_with_match;
    return static_cast<double>(hits) / static_cast<double>(report.doc_count);
}

// Mean matches per text over mean words per text; algebraically equal to
// total matches / total words.
inline double templates_per_token(const MatchReport& report, int n) {
    if (report.doc_count == 0) throw DataError("templates_per_token over an empty corpus");
    if (report.total_tokens == 0) throw DataError("templates_per_token with zero total tokens");
    auto it = report.per_n.find(n);
    const uint64_t matches = it == report.per_n.end() ? 0 : it->second.total_matches;
    return static_cast<double>(matches) / static_cast<double>(report.total_tokens);
}

// template_rate at every mined n (the per-length incidence curve)
inline std::map<int, double> incidence_curve(const MatchReport& report) {
    std::map<int, double> out;
    for (const auto& [n, _] : report.per_n) out[n] = template_rate(report, n);
    return out;
}

inline std::string incidence_curve_csv(const std::map<int, double>& curve) {
    std::string out = "n,rate\n";
    for (const auto& [n, rate] : curve) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%d,%.6f\n", n, rate);
        out += buf;
    }
    return out;
}

template <typename Range>
MatchReport match_corpus(Range&& docs, const TemplateSet& set) {
    TemplateIndex index(set);
    MatchAccumulator acc(index);
    for (const auto& d : docs) acc.add(d);
    return acc.report();
}

inline nlohmann::json match_report_to_json(const MatchReport& r) {
    nlohmann::json per_n = nlohmann::json::object();
    for (const auto& [n, agg] : r.per_n)
        per_n[std::to_string(n)] = {{"docs_with_match", agg.docs_with_match},
                                    {"total_matches", agg.total_matches}};
    return {{"format", "syntempl-match-report"},
            {"version", 1},
            {"doc_count", r.doc_count},
            {"total_tokens", r.total_tokens},
            {"per_n", per_n}};
}

inline void write_match(std::ostream& out, const TemplateMatch& m) {
    nlohmann::json rec{{"doc_id", m.doc_id},
                       {"start", m.start},
                       {"n", m.n},
                       {"rank", m.rank},
                       {"text", m.matched_text}};
    out << rec.dump() << '\n';
}

template <typename Range>
double template_rate(Range&& docs, const TemplateSet& set, int n) {
    return template_rate(match_corpus(std::forward<Range>(docs), set), n);
}

template <typename Range>
double templates_per_token(Range&& docs, const TemplateSet& set, int n) {
    return templates_per_token(match_corpus(std::forward<Range>(docs), set), n);
}

}  // namespace syntempl
