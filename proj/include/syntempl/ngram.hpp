#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "syntempl/corpus.hpp"
#include "syntempl/countmin.hpp"
#include "syntempl/error.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

namespace detail {

// Calls fn(key_view) for every width-n window of `tags`. The view points into
// `joined`, which is reused across calls.
template <typename Fn>
void for_each_window(const std::vector<std::string>& tags, size_t n, std::string& joined,
                     std::vector<size_t>& starts, Fn&& fn) {
    if (tags.size() < n || n == 0) return;
    joined.clear();
    starts.clear();
    for (size_t i = 0; i < tags.size(); ++i) {
        starts.push_back(joined.size() + (i ? 1 : 0));
        if (i) joined.push_back(' ');
        joined += tags[i];
    }
    starts.push_back(joined.size() + 1);
    const size_t windows = tags.size() - n + 1;
    for (size_t i = 0; i < windows; ++i)
        fn(std::string_view(joined.data() + starts[i], starts[i + n] - 1 - starts[i]));
}

}  // namespace detail

// Canonical key for a tag sequence: tags joined by a single 0x20 byte.
inline std::string ngram_key(const std::vector<std::string>& tags) { return join(tags, ' '); }

struct NgramEntry {
    uint64_t occurrences = 0;
    uint64_t doc_frequency = 0;
    uint64_t last_doc = UINT64_MAX;  // internal, not serialized
};

struct NgramCounts {
    int n = 0;
    uint64_t total_windows = 0;
    std::unordered_map<std::string, NgramEntry, StringHash, StringEq> counts;
    std::unordered_set<std::string> doc_ids;  // empty when loaded from file
};

// Streaming sliding-window counter. Windows never cross document boundaries;
// overlapping windows all count. Document frequency counts distinct documents
// with at least one window of the key.
class NgramCounter {
  public:
    explicit NgramCounter(int n) : n_(n) {
        if (n < 1) throw DataError("n must be >= 1");
        counts_.n = n;
    }

    void add(const TaggedDocument& doc) {
        if (!counts_.doc_ids.insert(doc.id).second)
            throw DataError("duplicate document id in counting pass: " + doc.id);
        add_tags(doc.tags);
    }

    // Same counting, identity supplied by serial only (used by callers that
    // track doc ids themselves).
    void add_tags(const std::vector<std::string>& tags) {
        const size_t n = static_cast<size_t>(n_);
        ++doc_serial_;
        if (tags.size() < n) return;
        counts_.total_windows += tags.size() - n + 1;
        detail::for_each_window(tags, n, joined_, starts_, [&](std::string_view key) {
            if (filter_ && !filter_(key)) return;
            auto it = counts_.counts.find(key);
            if (it == counts_.counts.end())
                it = counts_.counts.emplace(std::string(key), NgramEntry{}).first;
            NgramEntry& e = it->second;
            ++e.occurrences;
            if (e.last_doc != doc_serial_) {
                e.last_doc = doc_serial_;
                ++e.doc_frequency;
            }
        });
    }

    // Restricts exact counting to keys accepted by `filter` (prefilter pass 2).
    void set_filter(std::function<bool(std::string_view)> filter) {
        filter_ = std::move(filter);
    }

    NgramCounts take() { return std::move(counts_); }
    const NgramCounts& counts() const { return counts_; }

  private:
    int n_;
    uint64_t doc_serial_ = 0;
    std::string joined_;
    std::vector<size_t> starts_;
    std::function<bool(std::string_view)> filter_;
    NgramCounts counts_;
};

template <typename Range>
NgramCounts count_ngrams(Range&& docs, int n) {
    NgramCounter c(n);
    for (const auto& d : docs) c.add(d);
    return c.take();
}

// Memory-bounded two-pass counting: pass 1 fills a count-min sketch, pass 2
// counts exactly only the n-grams whose sketch estimate reaches tau. The
// sketch overestimates, so the surviving set is a superset of the true >= tau
// set and the result is exact for every retained key.
//
// `replay` must invoke its callback once per document, in the same document
// order, each time it is called.
template <typename Replay>
NgramCounts count_ngrams_prefiltered(Replay&& replay, int n, uint64_t tau,
                                     size_t sketch_width = 1 << 20, size_t sketch_depth = 4) {
    CountMinSketch sketch(sketch_width, sketch_depth);
    {
        std::string joined;
        std::vector<size_t> starts;
        replay([&](const TaggedDocument& doc) {
            detail::for_each_window(doc.tags, static_cast<size_t>(n), joined, starts,
                                    [&](std::string_view key) { sketch.add(key); });
        });
    }
    NgramCounter counter(n);
    counter.set_filter([&](std::string_view key) { return sketch.estimate(key) >= tau; });
    replay([&](const TaggedDocument& doc) { counter.add(doc); });
    return counter.take();
}

// Pointwise sum over shards covering disjoint document sets.
inline NgramCounts merge_counts(const NgramCounts& a, const NgramCounts& b) {
    if (a.n != b.n)
        throw DataError("cannot merge counts with different n: " + std::to_string(a.n) + " vs " +
                        std::to_string(b.n));
    for (const auto& id : b.doc_ids)
        if (a.doc_ids.count(id))
            throw DataError("overlapping document id across shards: " + id);
    NgramCounts out;
    out.n = a.n;
    out.total_windows = a.total_windows + b.total_windows;
    out.counts = a.counts;
    for (const auto& [key, e] : b.counts) {
        NgramEntry& dst = out.counts[key];
        dst.occurrences += e.occurrences;
        dst.doc_frequency += e.doc_frequency;
        dst.last_doc = UINT64_MAX;
    }
    out.doc_ids = a.doc_ids;
    out.doc_ids.insert(b.doc_ids.begin(), b.doc_ids.end());
    return out;
}

struct Template {
    std::vector<std::string> tags;
    int n = 0;
    uint64_t occurrences = 0;
    uint64_t doc_frequency = 0;
    uint64_t rank = 0;  // 1-based within its n

    std::string key() const { return ngram_key(tags); }
};

struct TemplateSet {
    std::map<int, std::vector<Template>> per_n;
    std::string corpus_id;
    uint64_t top_k = 0;
    uint64_t tau = 0;
    std::string config_hash;

    std::vector<int> lengths() const {
        std::vector<int> out;
        for (const auto& [n, _] : per_n) out.push_back(n);
        return out;
    }
    size_t total() const {
        size_t t = 0;
        for (const auto& [_, v] : per_n) t += v.size();
        return t;
    }
};

namespace detail {

// canonical order: occurrences desc, then key lexicographic asc
inline bool canonical_less(const std::pair<std::string_view, uint64_t>& a,
                           const std::pair<std::string_view, uint64_t>& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
}

}  // namespace detail

inline std::vector<Template> extract_templates(const NgramCounts& counts, uint64_t top_k = 100,
                                               uint64_t tau = 4) {
    if (top_k < 1) throw DataError("top_k must be >= 1");
    if (tau < 2) throw DataError("tau must be >= 2");
    std::vector<std::pair<std::string_view, const NgramEntry*>> eligible;
    for (const auto& [key, e] : counts.counts)
        if (e.occurrences >= tau) eligible.emplace_back(key, &e);
    std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
        if (a.second->occurrences != b.second->occurrences)
            return a.second->occurrences > b.second->occurrences;
        return a.first < b.first;
    });
    if (eligible.size() > top_k) eligible.resize(top_k);
    std::vector<Template> out;
    out.reserve(eligible.size());
    for (size_t i = 0; i < eligible.size(); ++i) {
        Template t;
        t.tags = split(eligible[i].first, ' ');
        t.n = counts.n;
        t.occurrences = eligible[i].second->occurrences;
        t.doc_frequency = eligible[i].second->doc_frequency;
        t.rank = i + 1;
        out.push_back(std::move(t));
    }
    return out;
}

// tau heuristic for callers that want it scaled with corpus size
inline uint64_t tau_auto(uint64_t doc_count) {
    return std::max<uint64_t>(4, (doc_count + 124) / 125);
}

struct RankResult {
    bool found = false;
    std::optional<uint64_t> rank;  // 1-based in canonical order
};

// Ranks query n-grams inside a reference count table; rank 1 = most frequent.
inline std::vector<RankResult> rank_in_reference(const std::vector<std::string>& query_keys,
                                                 const NgramCounts& reference) {
    std::vector<std::pair<std::string_view, uint64_t>> order;
    order.reserve(reference.counts.size());
    for (const auto& [key, e] : reference.counts) order.emplace_back(key, e.occurrences);
    std::sort(order.begin(), order.end(), detail::canonical_less);
    std::unordered_map<std::string_view, uint64_t> rank_of;
    rank_of.reserve(order.size());
    for (size_t i = 0; i < order.size(); ++i) rank_of[order[i].first] = i + 1;

    std::vector<RankResult> out;
    out.reserve(query_keys.size());
    for (const auto& q : query_keys) {
        const size_t qn = static_cast<size_t>(std::count(q.begin(), q.end(), ' ')) + 1;
        if (static_cast<int>(qn) != reference.n)
            throw DataError("query n-gram \"" + q + "\" has n = " + std::to_string(qn) +
                            " but reference has n = " + std::to_string(reference.n));
        auto it = rank_of.find(q);
        if (it == rank_of.end())
            out.push_back({false, std::nullopt});
        else
            out.push_back({true, it->second});
    }
    return out;
}

inline double coverage_fraction(const std::vector<RankResult>& results) {
    if (results.empty()) return 0.0;
    size_t found = 0;
    for (const auto& r : results) found += r.found ? 1 : 0;
    return static_cast<double>(found) / static_cast<double>(results.size());
}

// Uniform sample (without replacement) of n-grams present in `counts` but not
// in `exclude`. Deterministic for a fixed seed.
inline std::vector<std::string> sample_nontemplates(const NgramCounts& counts,
                                                    const std::unordered_set<std::string>& exclude,
                                                    size_t k, uint64_t seed) {
    std::vector<std::string> pool;
    for (const auto& [key, _] : counts.counts)
        if (!exclude.count(key)) pool.push_back(key);
    std::sort(pool.begin(), pool.end());  // seed-stable regardless of map order
    std::mt19937_64 rng(seed);
    for (size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng() % i]);
    if (pool.size() > k) pool.resize(k);
    return pool;
}

// ---- serialization ----------------------------------------------------------

inline void save_counts(const NgramCounts& counts, const std::string& path) {
    std::vector<std::pair<std::string_view, const NgramEntry*>> order;
    order.reserve(counts.counts.size());
    for (const auto& [key, e] : counts.counts) order.emplace_back(key, &e);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second->occurrences != b.second->occurrences)
            return a.second->occurrences > b.second->occurrences;
        return a.first < b.first;
    });
    AtomicFile file(path);
    auto& out = file.stream();
    out << "{\"format\":\"syntempl-counts\",\"version\":1,\"n\":" << counts.n
        << ",\"total_windows\":" << counts.total_windows << ",\"entries\":[";
    for (size_t i = 0; i < order.size(); ++i) {
        if (i) out << ',';
        out << '[' << nlohmann::json(std::string(order[i].first)).dump() << ','
            << order[i].second->occurrences << ',' << order[i].second->doc_frequency << ']';
    }
    out << "]}\n";
    file.commit();
}

inline NgramCounts load_counts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read counts file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object() || j.value("format", "") != "syntempl-counts")
        throw DataError("not a counts file: " + path);
    NgramCounts c;
    c.n = j.at("n").get<int>();
    c.total_windows = j.at("total_windows").get<uint64_t>();
    for (const auto& e : j.at("entries")) {
        NgramEntry entry;
        entry.occurrences = e.at(1).get<uint64_t>();
        entry.doc_frequency = e.at(2).get<uint64_t>();
        c.counts.emplace(e.at(0).get<std::string>(), entry);
    }
    return c;
}

inline nlohmann::json template_to_json(const Template& t) {
    return {{"tags", t.tags},
            {"n", t.n},
            {"occurrences", t.occurrences},
            {"doc_frequency", t.doc_frequency},
            {"rank", t.rank}};
}

inline void save_templates(const TemplateSet& set, const std::string& path) {
    nlohmann::json j;
    j["format"] = "syntempl-templates";
    j["version"] = 1;
    j["corpus_id"] = set.corpus_id;
    j["top_k"] = set.top_k;
    j["tau"] = set.tau;
    j["config_hash"] = set.config_hash;
    nlohmann::json per_n = nlohmann::json::object();
    for (const auto& [n, templates] : set.per_n) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : templates) arr.push_back(template_to_json(t));
        per_n[std::to_string(n)] = std::move(arr);
    }
    j["templates"] = std::move(per_n);
    AtomicFile file(path);
    file.stream() << j.dump(2) << '\n';
    file.commit();
}

inline TemplateSet load_templates(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read template file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object() || j.value("format", "") != "syntempl-templates")
        throw DataError("not a template file: " + path);
    TemplateSet set;
    set.corpus_id = j.value("corpus_id", "");
    set.top_k = j.value("top_k", 0);
    set.tau = j.value("tau", 0);
    set.config_hash = j.value("config_hash", "");
    for (const auto& [ns, arr] : j.at("templates").items()) {
        const int n = std::stoi(ns);
        for (const auto& e : arr) {
            Template t;
            t.tags = e.at("tags").get<std::vector<std::string>>();
            t.n = e.at("n").get<int>();
            t.occurrences = e.at("occurrences").get<uint64_t>();
            t.doc_frequency = e.at("doc_frequency").get<uint64_t>();
            t.rank = e.at("rank").get<uint64_t>();
            set.per_n[n].push_back(std::move(t));
        }
    }
    return set;
}

}  // namespace syntempl
