#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "catch_amalgamated.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "syntempl/memorization.hpp"
#include "syntempl/metrics.hpp"
#include "syntempl/ngram.hpp"
#include "syntempl/stats.hpp"

using namespace syntempl;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run_cli(const testutil::TempDir& tmp, const std::string& args) {
    const auto out_path = tmp / "cli-stdout.txt";
    const auto err_path = tmp / "cli-stderr.txt";
    std::string cmd = std::string(SYNTEMPL_CLI_PATH) + " " + args + " >" + out_path.string() +
                      " 2>" + err_path.string();
    int raw = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = testutil::read_file(out_path);
    r.err = testutil::read_file(err_path);
    fs::remove(out_path);
    fs::remove(err_path);
    return r;
}

const fs::path& model_path() {
    static const testutil::TempDir dir;
    static const fs::path p = [] {
        auto path = dir / "model.json";
        testutil::sample_model().save(path.string());
        return path;
    }();
    return p;
}

}  // namespace

TEST_CASE("help exits zero") {
    testutil::TempDir tmp;
    CHECK(run_cli(tmp, "mine --help").exit_code == 0);
    CHECK(run_cli(tmp, "--help").exit_code == 0);
}

TEST_CASE("missing subcommand or bad flag exits one") {
    testutil::TempDir tmp;
    CHECK(run_cli(tmp, "").exit_code == 1);
    CHECK(run_cli(tmp, "mine --no-such-flag").exit_code == 1);
}

TEST_CASE("missing input file exits two and names the path") {
    testutil::TempDir tmp;
    const auto missing = tmp / "nope.jsonl";
    auto r = run_cli(tmp, "mine --in " + missing.string() + " --out " + (tmp / "t.json").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find(missing.string()) != std::string::npos);
}

TEST_CASE("subcommand chain matches analyze artifacts") {
    testutil::TempDir tmp;
    // raw input corpus
    const auto raw = tmp / "raw.jsonl";
    {
        std::ofstream out(raw);
        write_document(out, Document{"a", "the cat sat on the mat. the dog sat on the rug."});
        write_document(out, Document{"b", "the cat sat on the rug. she will play."});
        write_document(out, Document{"c", "they watch a play near the mat."});
    }
    const auto config = tmp / "config.json";
    testutil::write_file(config, R"({"ns":[3,4],"top_k":50,"tau":2,"seed":0})");

    // chained subcommands
    const auto tagged = tmp / "tagged.jsonl";
    REQUIRE(run_cli(tmp, "tag --model " + model_path().string() + " --in " + raw.string() +
                             " --out " + tagged.string() + " --threads 2")
                .exit_code == 0);
    const auto templates = tmp / "templates.json";
    REQUIRE(run_cli(tmp, "mine --in " + tagged.string() + " --out " + templates.string() +
                             " --n 3,4 --top-k 50 --tau 2")
                .exit_code == 0);
    const auto matches = tmp / "matches.jsonl";
    const auto match_report = tmp / "match_report.json";
    REQUIRE(run_cli(tmp, "match --templates " + templates.string() + " --in " + tagged.string() +
                             " --out " + matches.string() + " --report " + match_report.string())
                .exit_code == 0);
    const auto metrics_out = tmp / "metrics.json";
    REQUIRE(run_cli(tmp, "metrics --in " + tagged.string() + " --templates " + templates.string() +
                             " --out " + metrics_out.string())
                .exit_code == 0);

    // one-shot pipeline
    const auto out_dir = tmp / "analysis";
    REQUIRE(run_cli(tmp, "analyze --in " + raw.string() + " --model " + model_path().string() +
                             " --config " + config.string() + " --out-dir " + out_dir.string())
                .exit_code == 0);

    // tagged caches agree
    CHECK(testutil::read_file(tagged) == testutil::read_file(out_dir / "tagged.jsonl"));

    // template sets agree on content
    auto chained = load_templates(templates.string());
    auto oneshot = load_templates((out_dir / "templates.json").string());
    REQUIRE(chained.per_n.size() == oneshot.per_n.size());
    for (const auto& [n, ts] : chained.per_n) {
        REQUIRE(oneshot.per_n.at(n).size() == ts.size());
        for (size_t i = 0; i < ts.size(); ++i) {
            CHECK(oneshot.per_n.at(n)[i].key() == ts[i].key());
            CHECK(oneshot.per_n.at(n)[i].occurrences == ts[i].occurrences);
            CHECK(oneshot.per_n.at(n)[i].rank == ts[i].rank);
        }
    }

    // diversity numbers agree
    auto chained_report = nlohmann::json::parse(testutil::read_file(metrics_out));
    auto oneshot_report = nlohmann::json::parse(testutil::read_file(out_dir / "report.json"));
    CHECK(chained_report.at("cr_pos") == oneshot_report.at("cr_pos"));
    CHECK(chained_report.at("per_n") == oneshot_report.at("per_n"));
    CHECK(chained_report.at("avg_text_length") == oneshot_report.at("avg_text_length"));

    auto chained_matches = nlohmann::json::parse(testutil::read_file(match_report));
    auto oneshot_matches = nlohmann::json::parse(testutil::read_file(out_dir / "match_report.json"));
    CHECK(chained_matches.at("per_n") == oneshot_matches.at("per_n"));
    CHECK(chained_matches.at("total_tokens") == oneshot_matches.at("total_tokens"));

    // incidence curve present with one row per configured n
    auto csv = testutil::read_file(out_dir / "incidence.csv");
    CHECK(csv.rfind("n,rate\n", 0) == 0);
    CHECK(csv.find("\n3,") != std::string::npos);
    CHECK(csv.find("\n4,") != std::string::npos);
}

TEST_CASE("report rendering matches the golden file") {
    testutil::TempDir tmp;
    DiversityReport alpha;
    alpha.corpus_id = "alpha";
    alpha.cr_pos = 5.25;
    alpha.avg_text_length = 42.5;
    alpha.config_hash = "cafebabe";
    alpha.per_n[4] = {0.5, 0.01, 100};
    alpha.per_n[6] = {0.25, 0.005, 80};
    DiversityReport beta;
    beta.corpus_id = "beta";
    beta.cr_pos = 4.0;
    beta.avg_text_length = 30.0;
    beta.config_hash = "cafebabe";
    beta.per_n[4] = {1.0, 0.1, 60};

    const auto a_path = tmp / "alpha.json";
    const auto b_path = tmp / "beta.json";
    testutil::write_file(a_path, report_to_json(alpha).dump(2) + "\n");
    testutil::write_file(b_path, report_to_json(beta).dump(2) + "\n");

    const auto rendered = tmp / "report.md";
    auto r = run_cli(tmp, "report --in " + a_path.string() + " --in " + b_path.string() +
                              " --format md --out " + rendered.string());
    REQUIRE(r.exit_code == 0);
    CHECK(testutil::read_file(rendered) ==
          testutil::read_file(fs::path(SYNTEMPL_GOLDEN_DIR) / "report.md"));

    // mixed provenance is refused
    beta.config_hash = "deadbeef";
    testutil::write_file(b_path, report_to_json(beta).dump(2) + "\n");
    CHECK(run_cli(tmp, "report --in " + a_path.string() + " --in " + b_path.string()).exit_code ==
          2);
}

TEST_CASE("failed runs leave no partial output") {
    testutil::TempDir tmp;
    const auto bad = tmp / "bad.jsonl";
    {
        std::ofstream out(bad, std::ios::binary);
        out << R"({"id":"a","text":"fine text"})" << '\n';
        out << "{\"id\":\"b\",\"text\":\"broken \xff\xfe bytes\"}\n";
    }
    const auto tagged = tmp / "tagged.jsonl";
    auto r = run_cli(tmp, "tag --model " + model_path().string() + " --in " + bad.string() +
                              " --out " + tagged.string() + " --format json-lines-raw");
    CHECK(r.exit_code == 2);
    CHECK_FALSE(fs::exists(tagged));
    for (const auto& entry : fs::directory_iterator(tmp.path()))
        CHECK(entry.path().string().find(".tmp.") == std::string::npos);
}

TEST_CASE("ranktest emits the library result as json") {
    testutil::TempDir tmp;
    const auto a_path = tmp / "a.txt";
    const auto b_path = tmp / "b.txt";
    testutil::write_file(a_path, "1\n2\n3\n4\n");
    testutil::write_file(b_path, "10\n675\n");
    const auto out = tmp / "rank.json";
    auto r = run_cli(tmp, "ranktest --a " + a_path.string() + " --b " + b_path.string() +
                              " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(testutil::read_file(out));
    auto want = mann_whitney_u({1, 2, 3, 4}, {10, 675});
    CHECK(j.at("u_statistic").get<double>() == want.u_statistic);
    CHECK(j.at("p_two_tailed").get<double>() == want.p_two_tailed);
    CHECK(j.at("median_a").get<double>() == 2.5);
    CHECK(j.at("median_b").get<double>() == 342.5);
    CHECK(j.at("n_a").get<int>() == 4);

    // non-numeric data exits two
    testutil::write_file(b_path, "10\nbanana\n");
    CHECK(run_cli(tmp, "ranktest --a " + a_path.string() + " --b " + b_path.string()).exit_code ==
          2);
}

TEST_CASE("make-cases and memcheck round trip through files") {
    testutil::TempDir tmp;
    // token-level counts: mine over tokens from a tiny tagged corpus
    const auto tagged = tmp / "tagged.jsonl";
    {
        std::ofstream out(tagged);
        TaggedDocument d;
        for (int rep = 0; rep < 5; ++rep)
            for (const std::string& w : {"the", "cat", "sat", "on", "the", "mat", "."}) {
                d.tokens.push_back(w);
                d.tags.push_back("X");
            }
        d.id = "a";
        write_tagged(out, d);
    }
    REQUIRE(run_cli(tmp, "mine --in " + tagged.string() + " --out " + (tmp / "t.json").string() +
                             " --n 6 --tau 2 --unit tokens --save-counts " +
                             (tmp / "counts").string())
                .exit_code == 0);
    const auto cases = tmp / "cases.jsonl";
    REQUIRE(run_cli(tmp, "make-cases --counts " + (tmp / "counts-n6.json").string() + " --out " +
                             cases.string() + " --prefix-len 3 --max-cases 5")
                .exit_code == 0);

    // fill in generated continuations = source continuations
    std::vector<MemorizationCase> loaded;
    {
        std::ifstream in(cases);
        loaded = load_cases(in);
    }
    REQUIRE(!loaded.empty());
    {
        std::ofstream out(cases, std::ios::trunc);
        for (auto& c : loaded) {
            c.generated_cont = c.source_cont;
            out << case_to_json(c).dump() << '\n';
        }
    }
    const auto summary = tmp / "summary.json";
    auto r = run_cli(tmp, "memcheck --cases " + cases.string() + " --model " +
                              model_path().string() + " --out " + summary.string());
    REQUIRE(r.exit_code == 0);
    auto j = nlohmann::json::parse(testutil::read_file(summary));
    CHECK(j.at("pct_exact").get<double>() == 100.0);
    CHECK(j.at("pct_style").get<double>() == 100.0);
}
