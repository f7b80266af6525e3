#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "syntempl/corpus.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/tagger.hpp"
#include "syntempl/util.hpp"

namespace testutil {

using syntempl::TaggedDocument;

inline std::filesystem::path data_dir() { return SYNTEMPL_DATA_DIR; }

inline std::vector<TaggedDocument> load_sample() {
    std::ifstream in(data_dir() / "tagged_sample.jsonl", std::ios::binary);
    syntempl::CorpusReader reader(in, syntempl::CorpusFormat::JsonlTagged);
    std::vector<TaggedDocument> docs;
    while (auto d = reader.next_tagged()) docs.push_back(std::move(*d));
    return docs;
}

// Trains once per process; the bundled model used across tagger-dependent tests.
inline const syntempl::TaggerModel& sample_model() {
    static const syntempl::TaggerModel model =
        syntempl::TaggerModel::train(load_sample(), 5, /*seed=*/42);
    return model;
}

// Random tagged corpus over a small alphabet; document lengths in [0, max_len].
inline std::vector<TaggedDocument> random_corpus(std::mt19937_64& rng, size_t docs, size_t max_len,
                                                 size_t alphabet = 5) {
    static const std::vector<std::string> tags{"DT", "NN", "JJ", "IN", "VBD",
                                               "RB", "CC", "CD", "TO", "MD"};
    std::vector<TaggedDocument> out;
    for (size_t d = 0; d < docs; ++d) {
        TaggedDocument doc;
        doc.id = "doc-" + std::to_string(d);
        const size_t len = rng() % (max_len + 1);
        for (size_t i = 0; i < len; ++i) {
            doc.tags.push_back(tags[rng() % alphabet]);
            doc.tokens.push_back("w" + std::to_string(rng() % alphabet));
        }
        out.push_back(std::move(doc));
    }
    return out;
}

// Quadratic reference counter: enumerates every window of every document.
struct NaiveCounts {
    std::map<std::string, std::pair<uint64_t, uint64_t>> entries;  // key -> (occ, df)
    uint64_t total_windows = 0;
};

inline NaiveCounts naive_count(const std::vector<TaggedDocument>& docs, size_t n) {
    NaiveCounts out;
    for (const auto& doc : docs) {
        std::map<std::string, bool> seen;
        if (doc.tags.size() < n) continue;
        for (size_t i = 0; i + n <= doc.tags.size(); ++i) {
            std::vector<std::string> window(doc.tags.begin() + i, doc.tags.begin() + i + n);
            const std::string key = syntempl::join(window, ' ');
            ++out.entries[key].first;
            if (!seen[key]) {
                seen[key] = true;
                ++out.entries[key].second;
            }
            ++out.total_windows;
        }
    }
    return out;
}

inline bool counts_equal(const syntempl::NgramCounts& got, const NaiveCounts& want) {
    if (got.total_windows != want.total_windows) return false;
    if (got.counts.size() != want.entries.size()) return false;
    for (const auto& [key, e] : want.entries) {
        auto it = got.counts.find(key);
        if (it == got.counts.end()) return false;
        if (it->second.occurrences != e.first || it->second.doc_frequency != e.second)
            return false;
    }
    return true;
}

class TempDir {
  public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<int> counter{0};
        path_ = base / ("syntempl-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline void write_tagged_file(const std::filesystem::path& p,
                              const std::vector<TaggedDocument>& docs) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    for (const auto& d : docs) syntempl::write_tagged(out, d);
}

}  // namespace testutil
