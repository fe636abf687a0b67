#include <cmath>

#include "doctest.h"
#include "f1_fixture.hpp"

#include "allabel/error.hpp"
#include "allabel/evaluation.hpp"

using namespace allabel;

TEST_SUITE("evaluation") {
  TEST_CASE("the four outcomes") {
    const std::vector<EntityRecord> silver{{{"precursor_name", "AgNO3"}, {"amount", "0.2 mmol"}}};
    CHECK(classify(silver, silver) == Outcome::tp);
    CHECK(classify({}, {}) == Outcome::tn);
    CHECK(classify(silver, {}) == Outcome::fn);
    CHECK(classify({{{"amount", "0.2 mmol"}}}, {{{"amount", "0.3 mmol"}}}) == Outcome::fp);
    CHECK(classify({}, silver) == Outcome::fp);
  }

  TEST_CASE("matching is exact up to whitespace and normalization form") {
    CHECK(normalize_value("  0.2 \t mmol ") == "0.2 mmol");
    CHECK(normalize_value("caf\x65\xcc\x81") == "caf\xc3\xa9");
    CHECK(normalize_value("\xff\xfe  x") == "\xff\xfe x");
    CHECK(classify({{{"v", "Zn(NO3)2"}}}, {{{"v", "zn(no3)2"}}}) == Outcome::fp);
    CHECK(classify({{{"v", "a"}}, {{"v", "b"}}}, {{{"v", "b"}}, {{"v", "a"}}}) == Outcome::tp);
    CHECK(classify({{{"v", "a"}}}, {{{"v", "a"}}, {{"v", "a"}}}) == Outcome::fp);
  }

  TEST_CASE("f1") {
    CHECK(f1({1, 0, 0, 0}) == 1.0);
    CHECK(f1({0, 1, 0, 1}) == 0.0);
    CHECK(std::abs(f1({1, 1, 0, 0}) - 2.0 / 3.0) <= 1e-15);
    CHECK(f1({0, 0, 3, 0}) == 1.0);
    CHECK(f1({0, 0, 0, 0}) == 0.0);
  }

  TEST_CASE("dataset scores") {
    const auto fx = fixture::f1_case();
    CHECK(score(fx.dataset, fx.dataset.gold()).dataset_f1 == 1.0);

    AnnotationMap empty;
    for (const auto& [id, a] : fx.dataset.gold()) {
      Annotations none;
      for (const auto& t : fx.dataset.schema().entity_types()) none[t.name] = {};
      empty[id] = {id, none};
    }
    AnnotationMap all_present = fx.dataset.gold();
    for (auto& [id, a] : all_present)
      for (auto& [type, recs] : a.annotations)
        if (recs.empty()) recs.push_back({{"x", "y"}});
    const Dataset full(fx.dataset.schema(), fx.dataset.samples(), all_present);
    CHECK(score(full, empty).dataset_f1 == 0.0);

    const auto r = score(fx.dataset, fx.predictions);
    CHECK(std::abs(r.dataset_f1 - fixture::kF1MeanOfMeans) <= 1e-12);
    CHECK(r.counts == MatchCounts{4, 3, 3, 2});
    REQUIRE(r.samples.size() == 4);
    CHECK(r.samples[1].outcomes.at("Modulator") == Outcome::fp);

    const auto pooled = score(fx.dataset, fx.predictions, {{}, Aggregation::pooled});
    CHECK(std::abs(pooled.dataset_f1 - fixture::kF1Pooled) <= 1e-12);

    ScoreOptions skip;
    skip.exclude = {"s2", "s4"};
    CHECK(std::abs(score(fx.dataset, fx.predictions, skip).dataset_f1 - 5.0 / 6.0) <= 1e-12);

    auto missing = fx.predictions;
    missing.erase("s3");
    CHECK_THROWS_AS(score(fx.dataset, missing), Error);
  }

  TEST_CASE("two samples by two types") {
    const DatasetSchema schema({{"A", {"x"}}, {"B", {"x"}}});
    AnnotationMap gold, pred;
    gold["s1"] = {"s1", {{"A", {{{"x", "1"}}}}, {"B", {}}}};
    pred["s1"] = {"s1", {{"A", {{{"x", "1"}}}}, {"B", {}}}};
    gold["s2"] = {"s2", {{"A", {{{"x", "2"}}}}, {"B", {}}}};
    pred["s2"] = {"s2", {{"A", {}}, {"B", {{{"x", "3"}}}}}};
    const Dataset ds(schema, {{"s1", "t", std::nullopt}, {"s2", "u", std::nullopt}}, gold);
    CHECK(score(ds, pred).dataset_f1 == 0.5);
    CHECK(std::abs(score(ds, pred, {{}, Aggregation::pooled}).dataset_f1 - 1.0 / 3.0) <= 1e-12);
  }

  TEST_CASE("convergence fraction") {
    CHECK(convergence_fraction({{10, 93.0}}, 94.4, 2.0, 200) == 5.0);
    CHECK_FALSE(convergence_fraction({{10, 0.5}, {20, 0.6}}, 0.7, 0.0, 100));
    CHECK(convergence_fraction({{10, 0.5}, {20, 0.6}, {30, 0.69}, {40, 0.71}}, 0.7, 0.02, 100) == 30.0);
    CHECK_THROWS_AS(convergence_fraction({}, 0.7, 0.02, 100), std::invalid_argument);
    CHECK_THROWS_AS(convergence_fraction({{20, 0.5}, {10, 0.6}}, 0.7, 0.02, 100), std::invalid_argument);
  }

  TEST_CASE("report json") {
    const auto fx = fixture::f1_case();
    const auto j = report_to_json(score(fx.dataset, fx.predictions));
    CHECK(j["aggregation"] == "mean_of_means");
    CHECK(j["samples"].size() == 4);
  }
}
