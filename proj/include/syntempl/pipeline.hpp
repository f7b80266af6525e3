#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "syntempl/corpus.hpp"
#include "syntempl/error.hpp"
#include "syntempl/matcher.hpp"
#include "syntempl/metrics.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/tagger.hpp"
#include "syntempl/util.hpp"

namespace syntempl {

struct PipelineConfig {
    std::vector<int> ns{4, 5, 6, 7, 8};
    uint64_t top_k = 100;
    uint64_t tau = 4;
    bool tau_auto = false;
    uint64_t seed = 0;
    unsigned threads = std::thread::hardware_concurrency();
    size_t control_k = 100;

    nlohmann::json to_json() const {
        return {{"ns", ns},          {"top_k", top_k},
                {"tau", tau},        {"tau_auto", tau_auto},
                {"seed", seed},      {"control_k", control_k},
                {"serialization_config_id", kSerializationConfigId}};
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig c;
        if (j.contains("ns")) c.ns = j.at("ns").get<std::vector<int>>();
        c.top_k = j.value("top_k", c.top_k);
        c.tau = j.value("tau", c.tau);
        c.tau_auto = j.value("tau_auto", c.tau_auto);
        c.seed = j.value("seed", c.seed);
        c.control_k = j.value("control_k", c.control_k);
        if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
        return c;
    }

    // threads do not affect results, so they stay out of the provenance hash
    std::string hash() const {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(to_json().dump())));
        return buf;
    }
};

struct AnalyzeResult {
    DiversityReport report;
    TemplateSet templates;
    MatchReport matches;
    std::map<int, NgramCounts> counts;
};

namespace detail {

// Pulls batches of records from a reader, tags raw documents in parallel
// (order preserved within a batch), and hands each tagged batch to `sink`
// in document order.
inline void tagged_batches(CorpusReader& reader, const TaggerModel* model, unsigned threads,
                           const std::function<void(std::vector<TaggedDocument>&)>& sink) {
    constexpr size_t kBatch = 1024;
    if (threads < 1) threads = 1;
    std::vector<CorpusReader::Record> raw;
    std::vector<TaggedDocument> batch;
    for (;;) {
        raw.clear();
        while (raw.size() < kBatch) {
            auto rec = reader.next();
            if (!rec) break;
            raw.push_back(std::move(*rec));
        }
        if (raw.empty()) break;
        batch.assign(raw.size(), TaggedDocument{});
        auto work = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i) {
                if (auto* t = std::get_if<TaggedDocument>(&raw[i])) {
                    batch[i] = std::move(*t);
                } else {
                    const auto& d = std::get<Document>(raw[i]);
                    if (!model)
                        throw DataError("raw document \"" + d.id +
                                        "\" in a pipeline without a tagger model");
                    batch[i] = model->tag(d);
                }
            }
        };
        if (threads == 1 || raw.size() < 2 * threads) {
            work(0, raw.size());
        } else {
            std::vector<std::thread> pool;
            const size_t chunk = (raw.size() + threads - 1) / threads;
            std::vector<std::exception_ptr> errors(threads);
            for (unsigned t = 0; t < threads; ++t) {
                const size_t b = std::min(raw.size(), t * chunk);
                const size_t e = std::min(raw.size(), b + chunk);
                pool.emplace_back([&, t, b, e] {
                    try {
                        work(b, e);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& err : errors)
                if (err) std::rethrow_exception(err);
        }
        sink(batch);
    }
}

}  // namespace detail

// Single-machine analysis run: pass 1 tags the corpus (caching the tagged
// stream to disk) and counts n-grams; templates are extracted and pass 2
// matches them back over the cached corpus for the rate metrics and CR.
class Pipeline {
  public:
    Pipeline(PipelineConfig config, const TaggerModel* model)
        : config_(std::move(config)), model_(model) {
        if (config_.ns.empty()) throw DataError("config has an empty n range");
    }

    AnalyzeResult analyze(CorpusReader& reader, const std::string& corpus_id,
                          const std::filesystem::path& tagged_cache) {
        const std::string config_hash = config_.hash();

        // pass 1: tag, cache, count, compress
        std::map<int, NgramCounter> counters;
        for (int n : config_.ns) counters.emplace(n, NgramCounter(n));
        TagStreamCompressor compressor;
        uint64_t doc_count = 0, token_count = 0;

        {
            AtomicFile cache(tagged_cache);
            detail::tagged_batches(
                reader, model_, config_.threads, [&](std::vector<TaggedDocument>& batch) {
                    // counting parallelizes across n; each counter owns its map
                    std::vector<std::thread> pool;
                    for (auto& [n, counter] : counters)
                        pool.emplace_back([&batch, &c = counter] {
                            for (const auto& d : batch) c.add(d);
                        });
                    for (const auto& d : batch) {
                        write_tagged(cache.stream(), d);
                        compressor.add(d.tags);
                        ++doc_count;
                        token_count += d.tokens.size();
                    }
                    for (auto& th : pool) th.join();
                });
            cache.commit();
        }
        if (doc_count == 0) throw DataError("empty corpus: " + corpus_id);

        AnalyzeResult result;
        for (auto& [n, counter] : counters) result.counts.emplace(n, counter.take());

        const uint64_t tau =
            config_.tau_auto ? tau_auto(doc_count) : config_.tau;
        result.templates.corpus_id = corpus_id;
        result.templates.top_k = config_.top_k;
        result.templates.tau = tau;
        result.templates.config_hash = config_hash;
        for (const auto& [n, counts] : result.counts) {
            auto templates = extract_templates(counts, config_.top_k, tau);
            if (!templates.empty()) result.templates.per_n[n] = std::move(templates);
        }

        // pass 2: match over the cached tagged corpus
        TemplateIndex index(result.templates);
        MatchAccumulator acc(index);
        {
            std::ifstream in(tagged_cache, std::ios::binary);
            CorpusReader tagged_reader(in, CorpusFormat::JsonlTagged);
            while (auto doc = tagged_reader.next_tagged()) acc.add(*doc);
        }
        result.matches = acc.report();

        result.report.corpus_id = corpus_id;
        result.report.config_hash = config_hash;
        result.report.cr_pos = compressor.ratio();
        result.report.avg_text_length =
            static_cast<double>(token_count) / static_cast<double>(doc_count);
        for (int n : config_.ns) {
            PerNMetrics m;
            auto it = result.templates.per_n.find(n);
            m.template_count = it == result.templates.per_n.end() ? 0 : it->second.size();
            m.rate = result.matches.per_n.count(n) ? template_rate(result.matches, n) : 0.0;
            m.tpt = result.matches.per_n.count(n) ? templates_per_token(result.matches, n) : 0.0;
            result.report.per_n[n] = m;
        }
        return result;
    }

    const PipelineConfig& config() const { return config_; }

  private:
    PipelineConfig config_;
    const TaggerModel* model_;
};

struct CoverageReport {
    std::string template_source_id;
    std::string reference_id;
    int n = 0;
    double coverage = 0.0;  // fraction of templates found in the reference
    size_t found = 0;
    size_t total = 0;
    double control_coverage = 0.0;  // same statistic for non-template n-grams
    size_t control_found = 0;
    size_t control_total = 0;
    uint64_t control_seed = 0;

    nlohmann::json to_json() const {
        return {{"format", "syntempl-coverage"},
                {"version", 1},
                {"template_source_id", template_source_id},
                {"reference_id", reference_id},
                {"n", n},
                {"coverage", coverage},
                {"found", found},
                {"total", total},
                {"control_coverage", control_coverage},
                {"control_found", control_found},
                {"control_total", control_total},
                {"control_seed", control_seed}};
    }
};

// Fraction of mined templates present in a reference count table, next to the
// same fraction for a seeded uniform sample of non-template n-grams drawn from
// the template-source corpus.
inline CoverageReport coverage(const TemplateSet& templates, int n, const NgramCounts& reference,
                               const NgramCounts& source_counts, size_t control_k, uint64_t seed,
                               const std::string& reference_id = "") {
    if (reference.n != n)
        throw DataError("reference counts have n = " + std::to_string(reference.n) +
                        ", expected " + std::to_string(n));
    if (source_counts.n != n)
        throw DataError("template-source counts have n = " + std::to_string(source_counts.n) +
                        ", expected " + std::to_string(n));
    auto it = templates.per_n.find(n);
    if (it == templates.per_n.end() || it->second.empty())
        throw DataError("template set has no templates of n = " + std::to_string(n));

    CoverageReport out;
    out.template_source_id = templates.corpus_id;
    out.reference_id = reference_id;
    out.n = n;
    out.control_seed = seed;

    std::vector<std::string> keys;
    std::unordered_set<std::string> template_keys;
    for (const auto& t : it->second) {
        keys.push_back(t.key());
        template_keys.insert(keys.back());
    }
    auto ranks = rank_in_reference(keys, reference);
    out.total = ranks.size();
    for (const auto& r : ranks) out.found += r.found ? 1 : 0;
    out.coverage = coverage_fraction(ranks);

    auto control = sample_nontemplates(source_counts, template_keys, control_k, seed);
    out.control_total = control.size();
    if (!control.empty()) {
        auto control_ranks = rank_in_reference(control, reference);
        for (const auto& r : control_ranks) out.control_found += r.found ? 1 : 0;
        out.control_coverage = coverage_fraction(control_ranks);
    }
    return out;
}

}  // namespace syntempl
