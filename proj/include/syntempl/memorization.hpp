#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "syntempl/error.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/tagger.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

struct MemorizationCase {
    std::string case_id;
    std::vector<std::string> prefix;
    std::vector<std::string> source_cont;
    std::vector<std::string> generated_cont;
    std::optional<uint64_t> source_freq;
};

struct MemorizationVerdict {
    bool exact = false;
    bool style = false;
    size_t compared_length = 0;
    // token indices (within the continuation) where tokens differ but tags agree
    std::vector<size_t> diff_positions;
};

// Exact: the generation reproduces the source continuation verbatim and runs
// at least as long. Style: the tag sequences agree over the compared span even
// where tokens differ. Both continuations are tagged jointly with the prefix
// so left context conditions the tags, then compared on the continuation only.
inline MemorizationVerdict judge(const MemorizationCase& c, const TaggerModel& model) {
    if (c.source_cont.empty())
        throw DataError("case \"" + c.case_id + "\": empty source continuation");
    if (c.generated_cont.empty())
        throw DataError("case \"" + c.case_id + "\": empty generated continuation");

    const size_t L = std::min(c.source_cont.size(), c.generated_cont.size());

    MemorizationVerdict v;
    v.compared_length = L;
    v.exact = c.generated_cont.size() >= c.source_cont.size() &&
              std::equal(c.source_cont.begin(), c.source_cont.begin() + L,
                         c.generated_cont.begin());

    auto tag_cont = [&](const std::vector<std::string>& cont) {
        std::vector<std::string> tokens = c.prefix;
        tokens.insert(tokens.end(), cont.begin(), cont.begin() + L);
        auto tags = model.tag_tokens(tokens);
        return std::vector<std::string>(tags.begin() + c.prefix.size(), tags.end());
    };
    const auto source_tags = tag_cont(c.source_cont);
    const auto generated_tags = tag_cont(c.generated_cont);

    v.style = source_tags == generated_tags;
    if (v.style && !v.exact) {
        for (size_t i = 0; i < L; ++i)
            if (c.source_cont[i] != c.generated_cont[i]) v.diff_positions.push_back(i);
    }
    return v;
}

struct Bucket {
    uint64_t freq_min = 0;
    uint64_t freq_max = 0;
    size_t case_count = 0;
    double pct_exact = 0.0;
    double pct_style = 0.0;
};

struct BucketedSummary {
    std::vector<Bucket> buckets;  // ascending frequency strata
    size_t total_cases = 0;
};

// Sorts by (source frequency, case id) and splits into `bucket_count` strata
// of equal size; the remainder goes to the lowest buckets.
inline BucketedSummary bucket_summary(
    const std::vector<std::pair<MemorizationCase, MemorizationVerdict>>& cases,
    size_t bucket_count = 10) {
    if (cases.size() < bucket_count)
        throw DataError("need at least " + std::to_string(bucket_count) + " cases, have " +
                        std::to_string(cases.size()));
    std::string missing;
    for (const auto& [c, _] : cases)
        if (!c.source_freq) missing += (missing.empty() ? "" : ", ") + c.case_id;
    if (!missing.empty()) throw DataError("cases missing source frequency: " + missing);

    std::vector<const std::pair<MemorizationCase, MemorizationVerdict>*> order;
    order.reserve(cases.size());
    for (const auto& c : cases) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (*a->first.source_freq != *b->first.source_freq)
            return *a->first.source_freq < *b->first.source_freq;
        return a->first.case_id < b->first.case_id;
    });

    BucketedSummary out;
    out.total_cases = cases.size();
    const size_t base = cases.size() / bucket_count;
    const size_t remainder = cases.size() % bucket_count;
    size_t pos = 0;
    for (size_t b = 0; b < bucket_count; ++b) {
        const size_t size = base + (b < remainder ? 1 : 0);
        Bucket bucket;
        bucket.case_count = size;
        bucket.freq_min = *order[pos]->first.source_freq;
        bucket.freq_max = *order[pos + size - 1]->first.source_freq;
        size_t exact = 0, style = 0;
        for (size_t i = pos; i < pos + size; ++i) {
            exact += order[i]->second.exact ? 1 : 0;
            style += order[i]->second.style ? 1 : 0;
        }
        bucket.pct_exact = 100.0 * static_cast<double>(exact) / static_cast<double>(size);
        bucket.pct_style = 100.0 * static_cast<double>(style) / static_cast<double>(size);
        out.buckets.push_back(bucket);
        pos += size;
    }
    return out;
}

// Cuts each n-gram in a token-level counts file into a prefix/continuation
// pair. The generated side stays empty; it is filled in externally and the
// file re-read for judging.
inline std::vector<MemorizationCase> make_cases(const NgramCounts& token_counts,
                                                size_t prefix_len = 50, size_t max_cases = 0) {
    if (prefix_len < 1) throw DataError("prefix length must be >= 1");
    if (static_cast<size_t>(token_counts.n) <= prefix_len)
        throw DataError("counts n = " + std::to_string(token_counts.n) +
                        " leaves no continuation after a " + std::to_string(prefix_len) +
                        "-token prefix");
    std::vector<std::pair<std::string_view, const NgramEntry*>> order;
    order.reserve(token_counts.counts.size());
    for (const auto& [key, e] : token_counts.counts) order.emplace_back(key, &e);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second->occurrences != b.second->occurrences)
            return a.second->occurrences > b.second->occurrences;
        return a.first < b.first;
    });
    if (max_cases > 0 && order.size() > max_cases) order.resize(max_cases);

    std::vector<MemorizationCase> out;
    out.reserve(order.size());
    for (size_t i = 0; i < order.size(); ++i) {
        auto tokens = split(order[i].first, ' ');
        MemorizationCase c;
        c.case_id = "case-" + std::to_string(i);
        c.prefix.assign(tokens.begin(), tokens.begin() + prefix_len);
        c.source_cont.assign(tokens.begin() + prefix_len, tokens.end());
        c.source_freq = order[i].second->occurrences;
        out.push_back(std::move(c));
    }
    return out;
}

// ---- serialization ----------------------------------------------------------

inline nlohmann::json case_to_json(const MemorizationCase& c) {
    nlohmann::json j{{"case_id", c.case_id},
                     {"prefix", c.prefix},
                     {"source_cont", c.source_cont},
                     {"generated_cont", c.generated_cont}};
    if (c.source_freq) j["source_freq"] = *c.source_freq;
    return j;
}

inline std::vector<MemorizationCase> load_cases(std::istream& in) {
    std::vector<MemorizationCase> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line, nullptr, false);
        if (!rec.is_object() || !rec.contains("case_id"))
            throw DataError("malformed case record at line " + std::to_string(line_no));
        MemorizationCase c;
        c.case_id = rec.at("case_id").get<std::string>();
        c.prefix = rec.at("prefix").get<std::vector<std::string>>();
        c.source_cont = rec.at("source_cont").get<std::vector<std::string>>();
        if (rec.contains("generated_cont"))
            c.generated_cont = rec.at("generated_cont").get<std::vector<std::string>>();
        if (rec.contains("source_freq")) c.source_freq = rec.at("source_freq").get<uint64_t>();
        out.push_back(std::move(c));
    }
    return out;
}

inline nlohmann::json summary_to_json(const BucketedSummary& s) {
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : s.buckets)
        buckets.push_back({{"freq_min", b.freq_min},
                           {"freq_max", b.freq_max},
                           {"case_count", b.case_count},
                           {"pct_exact", b.pct_exact},
                           {"pct_style", b.pct_style}});
    return {{"format", "syntempl-memorization-summary"},
            {"version", 1},
            {"total_cases", s.total_cases},
            {"buckets", buckets}};
}

inline std::string summary_to_markdown(const BucketedSummary& s) {
    std::string out = "| Bucket | Frequency range | Cases | Exact % | Style % |\n";
    out += "|---|---|---|---|---|\n";
    for (size_t i = 0; i < s.buckets.size(); ++i) {
        const auto& b = s.buckets[i];
        char buf[160];
        std::snprintf(buf, sizeof(buf), "| %zu | [%llu, %llu] | %zu | %.1f | %.1f |\n", i + 1,
                      static_cast<unsigned long long>(b.freq_min),
                      static_cast<unsigned long long>(b.freq_max), b.case_count, b.pct_exact,
                      b.pct_style);
        out += buf;
    }
    return out;
}

}  // namespace syntempl
