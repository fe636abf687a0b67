#include "doctest.h"
#include "fixtures.hpp"

#include "allabel/error.hpp"
#include "allabel/harness.hpp"
#include "allabel/util.hpp"

using namespace allabel;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.synthetic.samples = 40;
  c.pools = PoolRange::parse("10:20:5");
  c.runs = 3;
  c.seeds = {1, 2, 3};
  return c;
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("pool ranges and proportions") {
    CHECK(PoolRange::parse("10:60:5").sizes().size() == 11);
    CHECK(PoolRange::parse("10:60:5").to_string() == "10:60:5");
    CHECK(PoolRange::parse("5:5:1").sizes() == std::vector<std::size_t>{5});
    CHECK_THROWS_AS(PoolRange::parse("10:60"), std::invalid_argument);
    CHECK_THROWS_AS(PoolRange::parse("a:b:c"), std::invalid_argument);
    CHECK_THROWS_AS(PoolRange::parse("10:5:1").sizes(), std::invalid_argument);
    CHECK(parse_proportion("1:3:1") == std::array<unsigned, 3>{1, 3, 1});
    CHECK(proportion_string({1, 5, 1}) == "1:5:1");
    CHECK_THROWS_AS(parse_proportion("1:0:1"), std::invalid_argument);
  }

  TEST_CASE("config parsing is strict") {
    const auto c = ExperimentConfig::from_json(nlohmann::json::parse(
        R"({"pool_sizes": "5:10:5", "runs": 2, "seeds": [4, 5], "proportions": ["1:1:1"],
            "annotator": {"kind": "sim", "base_accuracy": 0.2}, "dataset": {"synthetic": {"samples": 50}}})"));
    CHECK(c.pools.start == 5);
    CHECK(c.runs == 2);
    CHECK(c.proportions.size() == 1);
    CHECK(c.annotator.sim.base_accuracy == 0.2);
    CHECK(c.synthetic.samples == 50);
    CHECK(ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump())).to_json() == c.to_json());
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"pool_size": "5:10:5"})")), SchemaError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"annotator": {"kind": "sim", "beta": 1}})")),
                    SchemaError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"runs": "five"})")), SchemaError);

    ExperimentConfig bad = small_config();
    CHECK_NOTHROW(bad.validate(40));
    CHECK_THROWS_AS(bad.validate(15), std::invalid_argument);
    bad.seeds = {1};
    CHECK_THROWS_AS(bad.validate(40), std::invalid_argument);
  }

  TEST_CASE("deterministic strategies repeat across runs") {
    auto config = small_config();
    config.strategies = {"allabel", "random"};
    const Dataset ds = load_experiment_dataset(config);
    auto annot = make_annotator(config.annotator, ds);
    const auto t = run_sweep(ds, config, *annot);
    std::map<std::size_t, std::vector<double>> allabel_runs;
    for (const auto& r : t.rows)
      if (r.strategy == "allabel") allabel_runs[r.pool_size].push_back(r.f1);
    REQUIRE(allabel_runs.size() == 3);
    for (const auto& [m, f] : allabel_runs) {
      REQUIRE(f.size() == 3);
      CHECK(f[0] == f[1]);
      CHECK(f[1] == f[2]);
    }
    const auto* a = t.find("allabel", 10, 3);
    REQUIRE(a);
    CHECK_FALSE(a->stddev_f1);
    CHECK(a->stage_sizes == std::vector<std::size_t>{2, 6, 2});
    REQUIRE(t.find("random", 10, 3));
    CHECK(t.find("random", 10, 3)->stddev_f1);
    CHECK(t.reference.size() == 1);
  }

  TEST_CASE("full pool with a perfect annotator scores 1") {
    auto config = small_config();
    config.synthetic.samples = 20;
    config.strategies = {"random", "allabel"};
    config.pools = PoolRange::parse("20:20:1");
    config.runs = 1;
    config.seeds = {1};
    config.annotator.sim.base_accuracy = 1.0;
    const Dataset ds = load_experiment_dataset(config);
    auto annot = make_annotator(config.annotator, ds);
    const auto t = run_sweep(ds, config, *annot);
    CHECK(t.find("random", 20, 3)->mean_f1 == 1.0);
    CHECK(t.find("allabel", 20, 3)->mean_f1 == 1.0);
    CHECK(t.reference[0].second == 1.0);
  }

  TEST_CASE("report files") {
    fixture::TempDir dir;
    auto config = small_config();
    config.strategies = {"allabel", "random", "coreset_cold", "perplexity"};
    config.synthetic.samples = 60;
    config.pools = PoolRange::parse("10:60:5");
    config.runs = 2;
    config.seeds = {1, 2};
    const Dataset ds = load_experiment_dataset(config);
    auto annot = make_annotator(config.annotator, ds);
    const auto t = run_sweep(ds, config, *annot);
    CHECK(t.aggregates.size() == 44);
    CHECK(t.rows.size() == 88);
    CHECK(t.convergence.size() == 4);

    emit_report(t, dir / "a");
    emit_report(t, dir / "b");
    for (const char* f : {"table.csv", "table.json", "plot.csv"})
      CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
    const auto csv = read_file(dir / "a" / "table.csv");
    CHECK(csv.starts_with("strategy,order,proportion,pool_size,shots,runs,mean_f1,stddev_f1,stage_sizes,complete\n"));
    CHECK(lines(csv) == 45);
    CHECK(lines(read_file(dir / "a" / "plot.csv")) == 89);

    ResultTable one;
    one.corpus_size = 60;
    one.rows = {t.rows[0]};
    one.aggregates = {t.aggregates[0]};
    CHECK(lines(table_csv(one)) == 2);
    CHECK_THROWS_AS(emit_report(ResultTable{}, dir / "c"), std::invalid_argument);
  }

  TEST_CASE("ablation with one order and one proportion equals the sweep") {
    auto config = small_config();
    config.strategies = {"allabel"};
    const Dataset ds = load_experiment_dataset(config);
    auto annot = make_annotator(config.annotator, ds);
    const auto sweep = run_sweep(ds, config, *annot);
    const auto abl = run_ablation(ds, {"d-s-u"}, {{1, 3, 1}}, config, *annot);
    CHECK(table_csv(sweep) == table_csv(abl));
    CHECK(plot_csv(sweep) == plot_csv(abl));

    const auto grid = run_ablation(ds, {"dsu", "sdu", "sud"}, {{1, 1, 1}, {1, 3, 1}}, config, *annot);
    CHECK(grid.aggregates.size() == 3 * 2 * 3);
    CHECK(grid.convergence.size() == 6);
  }

  TEST_CASE("an interrupted log resumes without new calls") {
    fixture::TempDir dir;
    auto config = small_config();
    config.strategies = {"allabel", "random"};
    const Dataset ds = load_experiment_dataset(config);
    auto annot = make_annotator(config.annotator, ds);
    std::string first;
    {
      ResultsLog log(dir / "log.jsonl");
      first = table_csv(run_sweep(ds, config, *annot, &log));
    }
    std::size_t calls_line_count = 0;
    ResultsLog log(dir / "log.jsonl");
    const auto before = log.size();
    const auto again = run_sweep(ds, config, *annot, &log, [&](const std::string& l) {
      if (l.starts_with("annotator calls 0,")) ++calls_line_count;
    });
    CHECK(table_csv(again) == first);
    CHECK(log.size() == before);
    CHECK(calls_line_count == 1);
  }
}
