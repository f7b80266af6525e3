// syntempl: syntactic template mining and diversity analysis over text corpora.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "syntempl/corpus.hpp"
#include "syntempl/matcher.hpp"
#include "syntempl/memorization.hpp"
#include "syntempl/metrics.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/pipeline.hpp"
#include "syntempl/stats.hpp"
#include "syntempl/tagger.hpp"
#include "syntempl/util.hpp"

namespace fs = std::filesystem;
using namespace syntempl;

namespace {

std::ifstream open_input(const std::string& path) {
    if (!fs::exists(path)) throw DataError("input file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path);
    return in;
}

CorpusFormat resolve_format(const std::string& path, const std::string& declared) {
    if (declared != "auto") {
        auto f = parse_format(declared);
        if (!f) throw UsageError("unknown format: " + declared);
        return *f;
    }
    auto in = open_input(path);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) return detect_format(line);
    throw DataError("cannot detect format of empty file: " + path);
}

// "6", "4,6,8", "4..8", "4-8"
std::vector<int> parse_n_spec(const std::string& spec) {
    std::vector<int> out;
    auto add_range = [&](const std::string& part) {
        size_t dots = part.find("..");
        size_t dash = part.find('-');
        std::string lo_s, hi_s;
        if (dots != std::string::npos) {
            lo_s = part.substr(0, dots);
            hi_s = part.substr(dots + 2);
        } else if (dash != std::string::npos && dash > 0) {
            lo_s = part.substr(0, dash);
            hi_s = part.substr(dash + 1);
        } else {
            lo_s = hi_s = part;
        }
        int lo = std::stoi(lo_s), hi = std::stoi(hi_s);
        if (lo < 1 || hi < lo) throw UsageError("bad n range: " + part);
        for (int n = lo; n <= hi; ++n) out.push_back(n);
    };
    for (const auto& part : split(spec, ','))
        if (!part.empty()) add_range(part);
    if (out.empty()) throw UsageError("empty n specification");
    return out;
}

std::vector<double> load_numbers(const std::string& path) {
    auto in = open_input(path);
    std::vector<double> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            size_t used = 0;
            double v = std::stod(line, &used);
            out.push_back(v);
        } catch (const std::exception&) {
            throw DataError(path + ": not a number at line " + std::to_string(line_no));
        }
    }
    if (out.empty()) throw DataError(path + ": no numbers");
    return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    AtomicFile f(path);
    f.stream() << content;
    f.commit();
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) {
    AtomicFile f(path);
    f.stream() << j.dump(2) << '\n';
    f.commit();
}

// ---- subcommand bodies ----

struct TrainArgs {
    std::string in, out;
    int iterations = 5;
    uint64_t seed = 1;
    size_t dict_threshold = 5;
};

int cmd_train(const TrainArgs& a) {
    auto in = open_input(a.in);
    CorpusReader reader(in, CorpusFormat::JsonlTagged);
    std::vector<TaggedDocument> gold;
    while (auto d = reader.next_tagged()) gold.push_back(std::move(*d));
    auto model = TaggerModel::train(gold, a.iterations, a.seed, TagSet::ptb(), a.dict_threshold);
    model.save(a.out);
    std::cerr << "trained on " << gold.size() << " documents, " << model.feature_count()
              << " features, dictionary " << model.dictionary_size() << " words\n";
    return 0;
}

struct TagArgs {
    std::string model, in, out, format = "auto";
    unsigned threads = std::thread::hardware_concurrency();
};

int cmd_tag(const TagArgs& a) {
    auto model = TaggerModel::load(a.model);
    auto format = resolve_format(a.in, a.format);
    auto in = open_input(a.in);
    CorpusReader reader(in, format);
    AtomicFile out(a.out);
    uint64_t docs = 0;
    detail::tagged_batches(reader, &model, a.threads, [&](std::vector<TaggedDocument>& batch) {
        for (const auto& d : batch) {
            write_tagged(out.stream(), d);
            ++docs;
        }
    });
    out.commit();
    std::cerr << "tagged " << docs << " documents\n";
    return 0;
}

struct MineArgs {
    std::string in, out, n_spec = "4..8", save_counts_prefix, unit = "tags";
    uint64_t top_k = 100;
    uint64_t tau = 4;
    bool tau_auto_flag = false;
    unsigned threads = std::thread::hardware_concurrency();
};

int cmd_mine(const MineArgs& a) {
    if (a.unit != "tags" && a.unit != "tokens")
        throw UsageError("--unit must be tags or tokens");
    auto ns = parse_n_spec(a.n_spec);
    std::map<int, NgramCounter> counters;
    for (int n : ns) counters.emplace(n, NgramCounter(n));

    auto in = open_input(a.in);
    CorpusReader reader(in, CorpusFormat::JsonlTagged);
    uint64_t doc_count = 0;
    std::vector<TaggedDocument> batch;
    for (;;) {
        batch.clear();
        while (batch.size() < 1024) {
            auto d = reader.next_tagged();
            if (!d) break;
            batch.push_back(std::move(*d));
        }
        if (batch.empty()) break;
        doc_count += batch.size();
        std::vector<std::thread> pool;
        for (auto& [n, counter] : counters)
            pool.emplace_back([&batch, &c = counter, unit = a.unit] {
                for (const auto& d : batch) {
                    if (unit == "tags")
                        c.add(d);
                    else
                        c.add_tags(d.tokens);
                }
            });
        for (auto& th : pool) th.join();
    }
    if (doc_count == 0) throw DataError("empty corpus: " + a.in);

    const uint64_t tau = a.tau_auto_flag ? tau_auto(doc_count) : a.tau;
    TemplateSet set;
    set.corpus_id = fs::path(a.in).filename().string();
    set.top_k = a.top_k;
    set.tau = tau;
    for (auto& [n, counter] : counters) {
        auto counts = counter.take();
        auto templates = extract_templates(counts, a.top_k, tau);
        if (!templates.empty()) set.per_n[n] = std::move(templates);
        if (!a.save_counts_prefix.empty())
            save_counts(counts, a.save_counts_prefix + "-n" + std::to_string(n) + ".json");
    }
    save_templates(set, a.out);
    std::cerr << "mined " << set.total() << " templates (tau=" << tau << ") from " << doc_count
              << " documents\n";
    return 0;
}

struct MatchArgs {
    std::string templates, in, out, report_out;
};

int cmd_match(const MatchArgs& a) {
    auto set = load_templates(a.templates);
    TemplateIndex index(set);
    MatchAccumulator acc(index);
    auto in = open_input(a.in);
    CorpusReader reader(in, CorpusFormat::JsonlTagged);
    AtomicFile out(a.out);
    while (auto doc = reader.next_tagged()) {
        auto matches = match(*doc, index);
        for (const auto& m : matches) write_match(out.stream(), m);
        acc.add(*doc, matches);
    }
    out.commit();
    if (!a.report_out.empty()) {
        auto j = match_report_to_json(acc.report());
        j["config_hash"] = set.config_hash;
        write_json_atomic(a.report_out, j);
    }
    return 0;
}

struct MetricsArgs {
    std::string in, out, templates, entropies;
};

int cmd_metrics(const MetricsArgs& a) {
    DiversityReport report;
    report.corpus_id = fs::path(a.in).filename().string();

    TagStreamCompressor compressor;
    uint64_t docs = 0, tokens = 0;
    TemplateSet set;
    std::optional<TemplateIndex> index;
    std::optional<MatchAccumulator> acc;
    if (!a.templates.empty()) {
        set = load_templates(a.templates);
        report.config_hash = set.config_hash;
        index.emplace(set);
        acc.emplace(*index);
    }
    {
        auto in = open_input(a.in);
        CorpusReader reader(in, CorpusFormat::JsonlTagged);
        while (auto doc = reader.next_tagged()) {
            compressor.add(doc->tags);
            ++docs;
            tokens += doc->tokens.size();
            if (acc) acc->add(*doc);
        }
    }
    if (docs == 0) throw DataError("empty corpus: " + a.in);
    report.cr_pos = compressor.ratio();
    report.avg_text_length = static_cast<double>(tokens) / static_cast<double>(docs);
    if (acc) {
        for (const auto& [n, _] : acc->report().per_n) {
            PerNMetrics m;
            m.rate = template_rate(acc->report(), n);
            m.tpt = templates_per_token(acc->report(), n);
            auto it = set.per_n.find(n);
            m.template_count = it == set.per_n.end() ? 0 : it->second.size();
            report.per_n[n] = m;
        }
    }

    nlohmann::json j = report_to_json(report);
    if (!a.entropies.empty()) {
        auto ein = open_input(a.entropies);
        auto input = load_perplexity_input(ein);
        auto ppl = avg_template_perplexity(input);
        j["avg_template_perplexity"] = ppl.value;
        for (const auto& id : ppl.skipped_doc_ids)
            std::cerr << "warning: document \"" << id << "\" has no template entropies, excluded\n";
    }
    write_json_atomic(a.out, j);
    return 0;
}

struct AnalyzeArgs {
    std::string in, model, config, out_dir, format = "auto";
    unsigned threads = 0;
};

int cmd_analyze(const AnalyzeArgs& a) {
    PipelineConfig config;
    if (!a.config.empty()) {
        auto in = open_input(a.config);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_object()) throw DataError("config file is not a JSON object: " + a.config);
        config = PipelineConfig::from_json(j);
    }
    if (a.threads > 0) config.threads = a.threads;

    std::optional<TaggerModel> model;
    if (!a.model.empty()) model = TaggerModel::load(a.model);

    auto format = resolve_format(a.in, a.format);
    auto in = open_input(a.in);
    CorpusReader reader(in, format);

    fs::create_directories(a.out_dir);
    const fs::path out_dir(a.out_dir);

    Pipeline pipeline(config, model ? &*model : nullptr);
    auto result = pipeline.analyze(reader, fs::path(a.in).filename().string(),
                                   out_dir / "tagged.jsonl");

    save_templates(result.templates, (out_dir / "templates.json").string());
    write_json_atomic((out_dir / "report.json").string(), report_to_json(result.report));
    {
        auto j = match_report_to_json(result.matches);
        j["config_hash"] = pipeline.config().hash();
        write_json_atomic((out_dir / "match_report.json").string(), j);
    }
    write_text_atomic((out_dir / "incidence.csv").string(),
                      incidence_curve_csv(incidence_curve(result.matches)));
    for (const auto& [n, counts] : result.counts)
        save_counts(counts, (out_dir / ("counts-n" + std::to_string(n) + ".json")).string());
    std::cerr << "analyze: wrote artifacts to " << out_dir.string() << " (config "
              << pipeline.config().hash() << ")\n";
    return 0;
}

struct CoverageArgs {
    std::string templates, reference, source_counts, out;
    int n = 6;
    size_t control_k = 100;
    uint64_t seed = 0;
};

int cmd_coverage(const CoverageArgs& a) {
    auto set = load_templates(a.templates);
    auto reference = load_counts(a.reference);
    auto source = load_counts(a.source_counts);
    auto report = coverage(set, a.n, reference, source, a.control_k, a.seed,
                           fs::path(a.reference).filename().string());
    if (a.out.empty())
        std::cout << report.to_json().dump(2) << '\n';
    else
        write_json_atomic(a.out, report.to_json());
    return 0;
}

struct MakeCasesArgs {
    std::string counts, out;
    size_t prefix_len = 50;
    size_t max_cases = 0;
};

int cmd_make_cases(const MakeCasesArgs& a) {
    auto counts = load_counts(a.counts);
    auto cases = make_cases(counts, a.prefix_len, a.max_cases);
    AtomicFile out(a.out);
    for (const auto& c : cases) out.stream() << case_to_json(c).dump() << '\n';
    out.commit();
    std::cerr << "wrote " << cases.size() << " cases\n";
    return 0;
}

struct MemcheckArgs {
    std::string cases, model, out, markdown_out, judgments_out;
    size_t seeds = 0;
    size_t sample_size = 0;
};

int cmd_memcheck(const MemcheckArgs& a) {
    auto model = TaggerModel::load(a.model);
    auto in = open_input(a.cases);
    auto cases = load_cases(in);
    if (cases.empty()) throw DataError("no cases in " + a.cases);

    std::vector<std::pair<MemorizationCase, MemorizationVerdict>> judged;
    judged.reserve(cases.size());
    size_t exact = 0, style = 0;
    for (auto& c : cases) {
        auto v = judge(c, model);
        exact += v.exact ? 1 : 0;
        style += v.style ? 1 : 0;
        judged.emplace_back(std::move(c), v);
    }

    if (!a.judgments_out.empty()) {
        AtomicFile jout(a.judgments_out);
        for (const auto& [c, v] : judged) {
            nlohmann::json rec{{"case_id", c.case_id},
                               {"exact", v.exact},
                               {"style", v.style},
                               {"compared_length", v.compared_length},
                               {"diff_positions", v.diff_positions}};
            jout.stream() << rec.dump() << '\n';
        }
        jout.commit();
    }

    nlohmann::json j;
    const double total = static_cast<double>(judged.size());
    j["total_cases"] = judged.size();
    j["pct_exact"] = 100.0 * static_cast<double>(exact) / total;
    j["pct_style"] = 100.0 * static_cast<double>(style) / total;

    const bool all_freq = std::all_of(judged.begin(), judged.end(),
                                      [](const auto& p) { return p.first.source_freq.has_value(); });
    if (all_freq && judged.size() >= 10) {
        auto summary = bucket_summary(judged);
        j["buckets"] = summary_to_json(summary)["buckets"];
        if (!a.markdown_out.empty()) write_text_atomic(a.markdown_out, summary_to_markdown(summary));
    }

    // averaged rates over seeded case subsamples
    if (a.seeds > 0) {
        const size_t k = a.sample_size > 0 ? std::min(a.sample_size, judged.size()) : judged.size();
        double sum_exact = 0, sum_style = 0;
        for (size_t s = 0; s < a.seeds; ++s) {
            std::mt19937_64 rng(s);
            std::vector<size_t> idx(judged.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
            size_t se = 0, ss = 0;
            for (size_t i = 0; i < k; ++i) {
                se += judged[idx[i]].second.exact ? 1 : 0;
                ss += judged[idx[i]].second.style ? 1 : 0;
            }
            sum_exact += 100.0 * static_cast<double>(se) / static_cast<double>(k);
            sum_style += 100.0 * static_cast<double>(ss) / static_cast<double>(k);
        }
        j["seeded"] = {{"seeds", a.seeds},
                       {"sample_size", k},
                       {"mean_pct_exact", sum_exact / static_cast<double>(a.seeds)},
                       {"mean_pct_style", sum_style / static_cast<double>(a.seeds)}};
    }

    if (a.out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_atomic(a.out, j);
    return 0;
}

struct RanktestArgs {
    std::string a_path, b_path, out;
};

int cmd_ranktest(const RanktestArgs& a) {
    auto result = mann_whitney_u(load_numbers(a.a_path), load_numbers(a.b_path));
    nlohmann::json j{{"u_statistic", result.u_statistic},
                     {"p_two_tailed", result.p_two_tailed},
                     {"median_a", result.median_a},
                     {"median_b", result.median_b},
                     {"n_a", result.n_a},
                     {"n_b", result.n_b}};
    if (a.out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_atomic(a.out, j);
    return 0;
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string format = "md", out;
};

int cmd_report(const ReportArgs& a) {
    std::vector<DiversityReport> reports;
    for (const auto& path : a.inputs) {
        auto in = open_input(path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        reports.push_back(report_from_json(j));
    }
    for (size_t i = 1; i < reports.size(); ++i) {
        if (reports[i].config_hash != reports[0].config_hash)
            throw DataError("reports carry different config hashes: " + reports[0].config_hash +
                            " vs " + reports[i].config_hash);
        if (reports[i].serialization_config_id != reports[0].serialization_config_id)
            throw DataError("reports carry different serialization configs");
    }
    std::string rendered;
    if (a.format == "md") {
        rendered = render_reports_md(reports);
    } else if (a.format == "csv") {
        rendered = render_reports_csv(reports);
    } else if (a.format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : reports) arr.push_back(report_to_json(r));
        rendered = arr.dump(2) + "\n";
    } else {
        throw UsageError("unknown report format: " + a.format);
    }
    if (a.out.empty())
        std::cout << rendered;
    else
        write_text_atomic(a.out, rendered);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"syntactic template mining and diversity analysis"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train a POS tagger on gold tagged data");
    train->add_option("--in", train_args.in, "gold corpus (json-lines-tagged)")->required();
    train->add_option("--out", train_args.out, "model file to write")->required();
    train->add_option("--iterations", train_args.iterations, "training iterations");
    train->add_option("--seed", train_args.seed, "shuffle seed");
    train->add_option("--dict-threshold", train_args.dict_threshold,
                      "unambiguous-word dictionary threshold");

    TagArgs tag_args;
    auto* tag = app.add_subcommand("tag", "tokenize and POS-tag a corpus");
    tag->add_option("--model", tag_args.model, "tagger model file")->required();
    tag->add_option("--in", tag_args.in, "input corpus")->required();
    tag->add_option("--out", tag_args.out, "tagged output (json-lines-tagged)")->required();
    tag->add_option("--format", tag_args.format, "input format (auto|plain-lines|json-lines-raw)");
    tag->add_option("--threads", tag_args.threads, "worker threads");

    MineArgs mine_args;
    auto* mine = app.add_subcommand("mine", "count n-grams and extract templates");
    mine->add_option("--in", mine_args.in, "tagged corpus")->required();
    mine->add_option("--out", mine_args.out, "template file to write")->required();
    mine->add_option("--n", mine_args.n_spec, "n values, e.g. 6 or 4..8");
    mine->add_option("--top-k", mine_args.top_k, "templates kept per n");
    mine->add_option("--tau", mine_args.tau, "minimum occurrence count");
    mine->add_flag("--tau-auto", mine_args.tau_auto_flag, "scale tau with corpus size");
    mine->add_option("--unit", mine_args.unit, "count over tags or tokens");
    mine->add_option("--save-counts", mine_args.save_counts_prefix,
                     "also write counts files with this path prefix");
    mine->add_option("--threads", mine_args.threads, "worker threads");

    MatchArgs match_args;
    auto* match_cmd = app.add_subcommand("match", "locate template occurrences");
    match_cmd->add_option("--templates", match_args.templates, "template file")->required();
    match_cmd->add_option("--in", match_args.in, "tagged corpus")->required();
    match_cmd->add_option("--out", match_args.out, "match dump (json-lines)")->required();
    match_cmd->add_option("--report", match_args.report_out, "aggregate match report (JSON)");

    MetricsArgs metrics_args;
    auto* metrics = app.add_subcommand("metrics", "diversity metrics over a tagged corpus");
    metrics->add_option("--in", metrics_args.in, "tagged corpus")->required();
    metrics->add_option("--out", metrics_args.out, "report file to write")->required();
    metrics->add_option("--templates", metrics_args.templates, "template file for rate metrics");
    metrics->add_option("--entropies", metrics_args.entropies,
                        "per-document template entropies (json-lines, bits)");

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "end-to-end tag, mine, match, metrics");
    analyze->add_option("--in", analyze_args.in, "input corpus")->required();
    analyze->add_option("--model", analyze_args.model, "tagger model (optional for tagged input)");
    analyze->add_option("--config", analyze_args.config, "pipeline config (JSON)");
    analyze->add_option("--out-dir", analyze_args.out_dir, "output directory")->required();
    analyze->add_option("--format", analyze_args.format, "input format");
    analyze->add_option("--threads", analyze_args.threads, "worker threads");

    CoverageArgs coverage_args;
    auto* cov = app.add_subcommand("coverage", "template coverage in a reference corpus");
    cov->add_option("--templates", coverage_args.templates, "template file")->required();
    cov->add_option("--n", coverage_args.n, "template length to check");
    cov->add_option("--reference", coverage_args.reference, "reference counts file")->required();
    cov->add_option("--source-counts", coverage_args.source_counts,
                    "counts of the template-source corpus (control pool)")
        ->required();
    cov->add_option("--control-k", coverage_args.control_k, "control sample size");
    cov->add_option("--seed", coverage_args.seed, "control sampling seed");
    cov->add_option("--out", coverage_args.out, "output file (default stdout)");

    MakeCasesArgs make_cases_args;
    auto* mkcases = app.add_subcommand("make-cases",
                                       "cut token n-grams into prefix/continuation cases");
    mkcases->add_option("--counts", make_cases_args.counts, "token-level counts file")->required();
    mkcases->add_option("--out", make_cases_args.out, "cases file to write")->required();
    mkcases->add_option("--prefix-len", make_cases_args.prefix_len, "prefix length in tokens");
    mkcases->add_option("--max-cases", make_cases_args.max_cases, "keep only the top K n-grams");

    MemcheckArgs memcheck_args;
    auto* memcheck = app.add_subcommand("memcheck", "exact and style memorization verdicts");
    memcheck->add_option("--cases", memcheck_args.cases, "cases file (json-lines)")->required();
    memcheck->add_option("--model", memcheck_args.model, "tagger model file")->required();
    memcheck->add_option("--out", memcheck_args.out, "summary JSON (default stdout)");
    memcheck->add_option("--markdown", memcheck_args.markdown_out, "bucket table as markdown");
    memcheck->add_option("--judgments", memcheck_args.judgments_out,
                         "per-case verdicts (json-lines)");
    memcheck->add_option("--seeds", memcheck_args.seeds, "average rates over N seeded subsamples");
    memcheck->add_option("--sample-size", memcheck_args.sample_size, "subsample size per seed");

    RanktestArgs ranktest_args;
    auto* ranktest = app.add_subcommand("ranktest", "Mann-Whitney U rank comparison");
    ranktest->add_option("--a", ranktest_args.a_path, "sample A, one number per line")->required();
    ranktest->add_option("--b", ranktest_args.b_path, "sample B, one number per line")->required();
    ranktest->add_option("--out", ranktest_args.out, "output file (default stdout)");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "render diversity reports");
    report->add_option("--in", report_args.inputs, "report JSON files")->required();
    report->add_option("--format", report_args.format, "md, csv, or json");
    report->add_option("--out", report_args.out, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*train) return cmd_train(train_args);
        if (*tag) return cmd_tag(tag_args);
        if (*mine) return cmd_mine(mine_args);
        if (*match_cmd) return cmd_match(match_args);
        if (*metrics) return cmd_metrics(metrics_args);
        if (*analyze) return cmd_analyze(analyze_args);
        if (*cov) return cmd_coverage(coverage_args);
        if (*mkcases) return cmd_make_cases(make_cases_args);
        if (*memcheck) return cmd_memcheck(memcheck_args);
        if (*ranktest) return cmd_ranktest(ranktest_args);
        if (*report) return cmd_report(report_args);
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
