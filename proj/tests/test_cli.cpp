#include "doctest.h"

#include <fstream>
#include <sstream>

#include "kgdd/cli.hpp"
#include "kgdd/formats.hpp"
#include "support.hpp"

using namespace kgdd;
using namespace kgdd::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args, const std::string& input = {}) {
    args.insert(args.begin(), "kgdd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::istringstream in(input);
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), in, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t lines(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

const std::string config = (fs::path(KGDD_SOURCE_DIR) / "configs" / "restaurants.json").string();

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate, run, evaluate and sweep") {
    const auto dir = scratch_dir("cli-flow");
    const auto data = (dir / "data.csv").string(), gold = (dir / "gold.csv").string(),
               results = (dir / "results.jsonl").string();
    auto r = cli({"generate", "--entities", "150", "--duplicates", "12", "--out", data, "--gold", gold});
    REQUIRE(r.code == exit_ok);
    CHECK(lines(data) == 163);

    r = cli({"run", "--config", config, "--data", data, "--out", results, "--floor", "0.5", "--report",
             (dir / "report.json").string()});
    REQUIRE(r.code == exit_ok);
    std::ifstream rs(results);
    const auto assertions = read_results(rs);
    CHECK(!assertions.empty());
    CHECK(Json::parse(slurp(dir / "report.json")).contains("candidateCount"));

    r = cli({"evaluate", "--results", results, "--gold", gold, "--config", config, "--out", (dir / "eval.json").string()});
    REQUIRE(r.code == exit_ok);
    CHECK(r.out.find("f1") != std::string::npos);
    const auto eval = Json::parse(slurp(dir / "eval.json"));
    std::ifstream gs(gold);
    const auto expected = score(accepted_pairs(assertions, 0.85), read_gold(gs), WorldAssumption::closed);
    CHECK(eval.at("tp") == expected.tp);
    CHECK(eval.at("fp") == expected.fp);

    r = cli({"sweep", "--results", results, "--gold", gold, "--config", config, "--thresholds", "0.9,0.8", "--out",
             (dir / "sweep.json").string()});
    REQUIRE(r.code == exit_ok);
    const auto sweep = Json::parse(slurp(dir / "sweep.json"));
    REQUIRE(sweep.size() == 2);
    CHECK(sweep[1].at("recall").get<double>() >= sweep[0].at("recall").get<double>());

    r = cli({"fuse", "--config", config, "--data", data, "--results", results, "--out", (dir / "fused.csv").string(),
             "--decisions", (dir / "decisions.jsonl").string()});
    REQUIRE(r.code == exit_ok);
    CHECK(lines(dir / "fused.csv") > 1);
    CHECK(lines(dir / "decisions.jsonl") > 0);

    r = cli({"features", "--data", data, "--gold", gold, "--config", config});
    REQUIRE(r.code == exit_ok);
    CHECK(r.out.find("name") != std::string::npos);
}

TEST_CASE("interactive labeling appends to the gold file") {
    const auto dir = scratch_dir("cli-label");
    const auto data = (dir / "data.csv").string(), results = (dir / "results.jsonl").string(),
               gold = (dir / "new-gold.csv").string();
    REQUIRE(cli({"generate", "--entities", "80", "--duplicates", "8", "--out", data, "--gold",
                 (dir / "g.csv").string()})
                .code == exit_ok);
    REQUIRE(cli({"run", "--config", config, "--data", data, "--out", results}).code == exit_ok);
    auto r = cli({"label", "--results", results, "--gold", gold, "--data", data, "--labeler", "maria"}, "y\ns\nn\nq\n");
    REQUIRE(r.code == exit_ok);
    CHECK(r.out.find("2 labels recorded") != std::string::npos);
    std::ifstream gs(gold);
    const auto g = read_gold(gs);
    CHECK(g.size() == 2);
    CHECK(g.count(Verdict::same) == 1);
    CHECK(g.history()[0].labeler == "maria");
    // Labeled pairs are not asked again.
    r = cli({"label", "--results", results, "--gold", gold, "--limit", "1"}, "r\n");
    REQUIRE(r.code == exit_ok);
    std::ifstream gs2(gold);
    CHECK(read_gold(gs2).size() == 3);
}

TEST_CASE("exit codes") {
    const auto dir = scratch_dir("cli-errors");
    CHECK(cli({"--help"}).code == exit_ok);
    CHECK(cli({"run"}).code != exit_ok);
    std::ofstream(dir / "bad.json") << R"({"match": {"tree": {"property": "name"}, "typo": 1}})";
    std::ofstream(dir / "data.csv") << "id,name\nr1,A\nr2,B\n";
    std::ofstream(dir / "broken.csv") << "id,name\nr1,\"unterminated\n";
    auto r = cli({"run", "--config", (dir / "bad.json").string(), "--data", (dir / "data.csv").string(), "--out",
                  (dir / "o.jsonl").string()});
    CHECK(r.code == exit_config);
    CHECK(r.err.find("typo") != std::string::npos);
    r = cli({"run", "--config", config, "--data", (dir / "broken.csv").string(), "--out", (dir / "o.jsonl").string()});
    CHECK(r.code == exit_data);
    r = cli({"evaluate", "--results", (dir / "missing.jsonl").string(), "--gold", (dir / "missing.csv").string()});
    CHECK(r.code != exit_ok);
}

}
