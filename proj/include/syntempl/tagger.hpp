#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "syntempl/corpus.hpp"
#include "syntempl/error.hpp"
#include "syntempl/tagset.hpp"
#include "syntempl/tokenizer.hpp"

namespace syntempl {

// Greedy averaged-perceptron POS tagger. Immutable after training or loading,
// so a single model can be shared across tagging threads.
class TaggerModel {
  public:
    static constexpr int kFormatVersion = 1;

    TaggerModel() : tagset_(TagSet::ptb()) {}
    explicit TaggerModel(TagSet tagset) : tagset_(std::move(tagset)) {}

    const TagSet& tagset() const { return tagset_; }
    int iterations() const { return iterations_; }
    size_t feature_count() const { return weights_.size(); }
    size_t dictionary_size() const { return tag_dict_.size(); }

    static std::string normalize(const std::string& word) {
        bool all_digit = !word.empty();
        bool has_digit = false;
        bool has_hyphen = false;
        for (char c : word) {
            const bool d = std::isdigit(static_cast<unsigned char>(c)) != 0;
            has_digit |= d;
            all_digit &= d;
            has_hyphen |= (c == '-');
        }
        if (all_digit) return "!DIGIT";
        if (has_digit && has_hyphen) return "!MIXED";
        std::string out = word;
        std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
        });
        return out;
    }

    std::vector<std::string> tag_tokens(const std::vector<std::string>& tokens) const {
        std::vector<std::string> tags;
        tags.reserve(tokens.size());
        std::vector<std::string> norm(tokens.size());
        for (size_t i = 0; i < tokens.size(); ++i) norm[i] = normalize(tokens[i]);
        std::string prev = kStart1, prev2 = kStart2;
        std::vector<std::string> feats;
        for (size_t i = 0; i < tokens.size(); ++i) {
            std::string tag;
            auto dict = tag_dict_.find(tokens[i]);
            if (dict != tag_dict_.end()) {
                tag = dict->second;
            } else {
                features(tokens, norm, i, prev, prev2, feats);
                tag = predict(feats);
            }
            prev2 = std::move(prev);
            prev = tag;
            tags.push_back(std::move(tag));
        }
        return tags;
    }

    TaggedDocument tag(const Document& doc) const {
        TaggedDocument out;
        out.id = doc.id;
        auto toks = tokenize(doc.text);
        out.tokens.reserve(toks.size());
        out.offsets.reserve(toks.size());
        for (auto& t : toks) {
            out.tokens.push_back(std::move(t.text));
            out.offsets.emplace_back(t.begin, t.end);
        }
        out.tags = tag_tokens(out.tokens);
        return out;
    }

    // Trains on gold documents with per-iteration shuffling driven by `seed`.
    // Words seen with exactly one tag at least `dict_threshold` times
    // short-circuit the perceptron at tag time.
    static TaggerModel train(const std::vector<TaggedDocument>& gold, int iterations,
                             uint64_t seed, const TagSet& tagset = TagSet::ptb(),
                             size_t dict_threshold = 5, bool average = true) {
        if (gold.empty()) throw DataError("cannot train on an empty gold corpus");
        if (iterations < 1) throw DataError("iterations must be >= 1");
        for (const auto& d : gold) {
            if (d.tokens.size() != d.tags.size())
                throw DataError("gold document \"" + d.id + "\": token/tag length mismatch");
            for (const auto& t : d.tags)
                if (!tagset.contains(t))
                    throw DataError("gold document \"" + d.id + "\": tag \"" + t +
                                    "\" not in tagset");
        }

        TaggerModel model(tagset);
        model.build_dictionary(gold, dict_threshold);

        struct Cell {
            double weight = 0;
            double total = 0;
            uint64_t stamp = 0;
        };
        std::unordered_map<std::string, std::map<std::string, Cell>> w;
        uint64_t updates = 0;
        auto upd = [&](const std::string& feat, const std::string& tag, double delta) {
            Cell& c = w[feat][tag];
            c.total += c.weight * static_cast<double>(updates - c.stamp);
            c.stamp = updates;
            c.weight += delta;
        };

        std::vector<size_t> order(gold.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937_64 rng(seed);

        std::vector<std::string> feats;
        for (int it = 0; it < iterations; ++it) {
            // Fisher-Yates, not std::shuffle, so the order is stable across stdlibs.
            for (size_t i = order.size(); i > 1; --i) {
                size_t j = rng() % i;
                std::swap(order[i - 1], order[j]);
            }
            for (size_t di : order) {
                const auto& doc = gold[di];
                std::vector<std::string> norm(doc.tokens.size());
                for (size_t i = 0; i < norm.size(); ++i) norm[i] = normalize(doc.tokens[i]);
                std::string prev = kStart1, prev2 = kStart2;
                for (size_t i = 0; i < doc.tokens.size(); ++i) {
                    std::string guess;
                    auto dict = model.tag_dict_.find(doc.tokens[i]);
                    if (dict != model.tag_dict_.end()) {
                        guess = dict->second;
                    } else {
                        features(doc.tokens, norm, i, prev, prev2, feats);
                        guess = predict_raw(w, tagset, feats);
                        ++updates;
                        if (guess != doc.tags[i]) {
                            for (const auto& f : feats) {
                                upd(f, doc.tags[i], 1.0);
                                upd(f, guess, -1.0);
                            }
                        }
                    }
                    prev2 = std::move(prev);
                    prev = guess;  // greedy: condition on own predictions
                }
            }
        }

        for (auto& [feat, tags] : w) {
            for (auto& [tag, cell] : tags) {
                cell.total += cell.weight * static_cast<double>(updates - cell.stamp);
                const double value =
                    average ? cell.total / static_cast<double>(std::max<uint64_t>(updates, 1))
                            : cell.weight;
                if (value != 0.0) model.weights_[feat][tag] = value;
            }
        }
        model.iterations_ = iterations;
        return model;
    }

    void save(const std::string& path) const {
        nlohmann::json j;
        j["format"] = "syntempl-tagger";
        j["version"] = kFormatVersion;
        j["iterations"] = iterations_;
        j["tagset"] = tagset_.tags();
        // std::map keys serialize sorted, keeping model files diffable
        j["tag_dict"] = std::map<std::string, std::string>(tag_dict_.begin(), tag_dict_.end());
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [feat, tags] : std::map<std::string, std::map<std::string, double>>(
                 weights_.begin(), weights_.end()))
            w[feat] = tags;
        j["weights"] = std::move(w);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write model file: " + path);
        out << j.dump() << '\n';
    }

    static TaggerModel load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot read model file: " + path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_object() || j.value("format", "") != "syntempl-tagger")
            throw DataError("not a tagger model file: " + path);
        if (j.value("version", -1) != kFormatVersion)
            throw DataError("unsupported model version in " + path);
        TaggerModel m{TagSet(j.at("tagset").get<std::vector<std::string>>())};
        m.iterations_ = j.value("iterations", 0);
        for (auto& [word, tag] : j.at("tag_dict").items())
            m.tag_dict_[word] = tag.get<std::string>();
        for (auto& [feat, tags] : j.at("weights").items())
            for (auto& [tag, wgt] : tags.items())
                m.weights_[feat][tag] = wgt.get<double>();
        return m;
    }

  private:
    static constexpr const char* kStart1 = "-START-";
    static constexpr const char* kStart2 = "-START2-";
    static constexpr const char* kEnd = "-END-";

    static void features(const std::vector<std::string>& tokens,
                         const std::vector<std::string>& norm, size_t i, const std::string& prev,
                         const std::string& prev2, std::vector<std::string>& out) {
        out.clear();
        const std::string& word = tokens[i];
        const std::string& w = norm[i];
        out.push_back("w=" + w);
        const size_t len = w.size();
        out.push_back("s1=" + w.substr(len >= 1 ? len - 1 : 0));
        out.push_back("s2=" + w.substr(len >= 2 ? len - 2 : 0));
        out.push_back("s3=" + w.substr(len >= 3 ? len - 3 : 0));
        out.push_back("c1=" + w.substr(0, 1));
        out.push_back("t1=" + prev);
        out.push_back("t2t1=" + prev2 + " " + prev);
        out.push_back("w-1=" + (i > 0 ? norm[i - 1] : kStart1));
        out.push_back("w+1=" + (i + 1 < norm.size() ? norm[i + 1] : kEnd));
        if (!word.empty() && std::isdigit(static_cast<unsigned char>(word[0])))
            out.push_back("digit");
        if (word.find('-') != std::string::npos) out.push_back("hyphen");
        if (!word.empty() && std::isupper(static_cast<unsigned char>(word[0])))
            out.push_back("cap");
    }

    std::string predict(const std::vector<std::string>& feats) const {
        std::map<std::string, double> scores;
        for (const auto& f : feats) {
            auto it = weights_.find(f);
            if (it == weights_.end()) continue;
            for (const auto& [tag, wgt] : it->second) scores[tag] += wgt;
        }
        if (scores.empty()) return tagset_.tags().front();
        return best_tag(scores);
    }

    template <typename W>
    static std::string predict_raw(const W& w, const TagSet& tagset,
                                   const std::vector<std::string>& feats) {
        std::map<std::string, double> scores;
        for (const auto& f : feats) {
            auto it = w.find(f);
            if (it == w.end()) continue;
            for (const auto& [tag, cell] : it->second) scores[tag] += cell.weight;
        }
        if (scores.empty()) return tagset.tags().front();
        return best_tag(scores);
    }

    // ties break to the lexicographically smallest tag (map iteration order)
    static std::string best_tag(const std::map<std::string, double>& scores) {
        std::string best = "NN";
        double best_score = -1e300;
        for (const auto& [tag, s] : scores) {
            if (s > best_score) {
                best_score = s;
                best = tag;
            }
        }
        return best;
    }

    void build_dictionary(const std::vector<TaggedDocument>& gold, size_t threshold) {
        std::unordered_map<std::string, std::unordered_map<std::string, size_t>> seen;
        for (const auto& d : gold)
            for (size_t i = 0; i < d.tokens.size(); ++i) ++seen[d.tokens[i]][d.tags[i]];
        for (const auto& [word, tags] : seen) {
            if (tags.size() != 1) continue;
            const auto& [tag, count] = *tags.begin();
            if (count >= threshold) tag_dict_[word] = tag;
        }
    }

    TagSet tagset_;
    int iterations_ = 0;
    std::unordered_map<std::string, std::map<std::string, double>> weights_;
    std::unordered_map<std::string, std::string> tag_dict_;
};

}  // namespace syntempl
