#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "allabel/similarity.hpp"

using namespace allabel;

namespace {

Dataset texts(const std::vector<std::string>& docs) {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < docs.size(); ++i) samples.push_back({"d" + std::to_string(i), docs[i], std::nullopt});
  return Dataset(DatasetSchema({EntityType{"T", {"v"}}}), std::move(samples));
}

}  // namespace

TEST_SUITE("similarity") {
  TEST_CASE("tokenize") {
    CHECK(tokenize("AgNO3 (0.2 mmol)") == std::vector<std::string>{"agno3", "0", "2", "mmol"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  --  ").empty());
    CHECK(tokenize("Zn(NO3)2\xc2\xb7" "6H2O") == std::vector<std::string>{"zn", "no3", "2\xc2\xb7" "6h2o"});
  }

  TEST_CASE("index statistics") {
    const Bm25Index one({"x"}, {{"a", "b", "c", "d"}});
    CHECK(one.avg_dl() == 4.0);
    const Bm25Index three({"x", "y", "z"}, {{"a", "b"}, {"b", "c"}, {"d"}});
    CHECK(three.df("b") == 2);
    CHECK(three.df("a") == 1);
    CHECK(three.df("nope") == 0);
    CHECK(three.idf("b") == doctest::Approx(std::log((3.0 - 2 + 0.5) / (2 + 0.5) + 1.0)).epsilon(1e-15));
  }

  TEST_CASE("two-document fixture") {
    const std::vector<std::vector<std::string>> docs{
        tokenize("AgNO3 (0.2 mmol) was dissolved in water and stirred with water"),
        tokenize("Zinc nitrate was dissolved in DMF")};
    REQUIRE(docs[0].size() == 12);
    REQUIRE(docs[1].size() == 6);
    const Bm25Index index({"d1", "d2"}, docs);
    CHECK(index.avg_dl() == 9.0);
    const auto q = tokenize("AgNO3 dissolved in water");
    const double s1 = bm25_score(index, q, "d1");
    const double s2 = bm25_score(index, q, "d2");
    CHECK(std::abs(s1 - 1.814201105872117) / 1.814201105872117 <= 1e-12);
    CHECK(std::abs(s2 - 0.42899189833871665) / 0.42899189833871665 <= 1e-12);
    CHECK(bm25_score(index, {"copper", "sulfate"}, "d1") == 0.0);
    CHECK_THROWS_AS(bm25_score(index, q, "d3"), std::out_of_range);
  }

  TEST_CASE("zero overlap stays zero whatever k1") {
    const Bm25Index a({"x", "y"}, {{"a", "b"}, {"c"}}, {1.5, 0.75});
    const Bm25Index b({"x", "y"}, {{"a", "b"}, {"c"}}, {3.0, 0.75});
    CHECK(bm25_score(a, {"c"}, "x") == 0.0);
    CHECK(bm25_score(b, {"c"}, "x") == 0.0);
  }

  TEST_CASE("row scoring agrees with pairwise scoring") {
    const Dataset ds = texts({"alpha beta gamma", "beta beta delta", "gamma epsilon", "alpha alpha alpha zeta",
                              "unrelated words only"});
    const Bm25Backend backend(ds);
    std::vector<double> row(ds.size());
    for (std::size_t q = 0; q < ds.size(); ++q) {
      backend.score_row(q, row);
      for (std::size_t d = 0; d < ds.size(); ++d) CHECK(row[d] == backend.score(q, d));
    }
  }

  TEST_CASE("four-document matrix matches a cell-by-cell recomputation") {
    const std::vector<std::string> raw{"AgNO3 dissolved in water", "Zinc nitrate in DMF with water",
                                       "AgNO3 and zinc nitrate mixed", "heated at 120 C for 24 h"};
    const Dataset ds = texts(raw);
    std::vector<std::vector<std::string>> docs;
    for (const auto& t : raw) docs.push_back(tokenize(t));
    for (Exec exec : {Exec::serial, Exec::parallel}) {
      const auto m = build_matrix(ds, Bm25Backend(ds), exec);
      CHECK_FALSE(m.normalized());
      for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          if (i == j) {
            CHECK(m.masked(i, j));
            continue;
          }
          const double want = oracle::bm25(docs, docs[i], j);
          CHECK(m.at(i, j) == doctest::Approx(want).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("two samples give two unmasked cells") {
    const auto m = build_matrix(texts({"a b", "b c"}), Bm25Backend(texts({"a b", "b c"})));
    std::size_t live = 0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) live += m.masked(i, j) ? 0 : 1;
    CHECK(live == 2);
    CHECK_THROWS_AS(build_matrix(texts({"a"}), Bm25Backend(texts({"a"}))), std::invalid_argument);
  }

  TEST_CASE("identical texts score symmetrically") {
    const Dataset ds = texts({"copper acetate in ethanol", "other words here", "copper acetate in ethanol"});
    const auto m = build_matrix(ds, Bm25Backend(ds));
    CHECK(m.at(0, 2) == m.at(2, 0));
  }

  TEST_CASE("normalize") {
    const SimilarityMatrix m({"a", "b"}, {"a", "b", "c"}, {-100, 5, 10, 10, -100, 0});
    const auto n = normalize(m);
    CHECK(n.normalized());
    CHECK(n.masked(0, 0));
    CHECK(n.masked(1, 1));
    CHECK(n.at(0, 1) == 0.5);
    CHECK(n.at(0, 2) == 1.0);
    CHECK(n.at(1, 0) == 1.0);
    CHECK(n.at(1, 2) == 0.0);

    const SimilarityMatrix cells({"q"}, {"x", "y", "z"}, {0, 5, 10});
    const auto cn = normalize(cells);
    CHECK(cn.at(0, 0) == 0.0);
    CHECK(cn.at(0, 1) == 0.5);
    CHECK(cn.at(0, 2) == 1.0);

    const SimilarityMatrix flat({"q"}, {"x", "y"}, {3.7, 3.7});
    CHECK(normalize(flat).at(0, 0) == 0.0);
    CHECK(normalize(flat).at(0, 1) == 0.0);
    CHECK_THROWS_AS(normalize(n), std::invalid_argument);
  }

  TEST_CASE("drop columns and select rows") {
    const auto m = fixture::random_square(5, 3);
    CHECK(drop_columns(m, {}) == m);
    const std::vector<std::string> drop{"s2"};
    const auto d = drop_columns(m, drop);
    CHECK(d.rows() == 5);
    CHECK(d.cols() == 4);
    CHECK(d.col_ids() == std::vector<std::string>{"s0", "s1", "s3", "s4"});
    CHECK(d.at(0, 2) == m.at(0, 3));
    CHECK(d.masked(3, 2));
    CHECK(d.normalized());

    const std::vector<std::string> rows{"s4", "s1"};
    const auto r = select_rows(m, rows);
    CHECK(r.row_ids() == rows);
    CHECK(r.at(0, 0) == m.at(4, 0));
    CHECK(r.masked(1, 1));
    const std::vector<std::string> bad{"nope"};
    CHECK_THROWS(select_rows(m, bad));
  }

  TEST_CASE("ranked breaks ties by position") {
    const SimilarityMatrix m({"a"}, {"a", "b", "c", "d"}, {0, 0.9, 0.1, 0.9}, true);
    const auto r = ranked(m, "a");
    REQUIRE(r.candidates.size() == 3);
    CHECK(r.candidates[0].id == "b");
    CHECK(r.candidates[1].id == "d");
    CHECK(r.candidates[2].id == "c");
    CHECK(r.candidates[2].rank == 3);

    const SimilarityMatrix one({"a"}, {"a", "b"}, {0, 0.3}, true);
    REQUIRE(ranked(one, "a").candidates.size() == 1);
    CHECK(ranked(one, "a").candidates[0].rank == 1);
  }

  TEST_CASE("ranked lists match the sort oracle") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto m = fixture::random_square(8, seed, seed % 2 == 0);
      for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto got = ranked(m, m.row_ids()[r]);
        const auto want = oracle::ranking(m, r);
        REQUIRE(got.candidates.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(got.candidates[i].id == want[i]);
      }
    }
  }

  TEST_CASE("symmetric score is the larger direction") {
    const SimilarityMatrix m({"a", "b"}, {"a", "b"}, {0, 0.2, 0.7, 0}, true);
    CHECK(symmetric_score(m, 0, 1) == 0.7);
    CHECK(symmetric_score(m, 1, 0) == 0.7);
  }

  TEST_CASE("dense backend is cosine similarity") {
    const DenseBackend dense({{1, 0}, {1, 1}, {0, 2}});
    CHECK(dense.score(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(dense.score(0, 2) == 0.0);
    CHECK(dense.score(1, 2) == doctest::Approx(1.0 / std::sqrt(2.0)));
  }
}
