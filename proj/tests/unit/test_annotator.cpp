#include <atomic>
#include <cmath>
#include <thread>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "allabel/annotator.hpp"
#include "allabel/error.hpp"
#include "allabel/evaluation.hpp"
#include "allabel/results_log.hpp"
#include "allabel/simulator.hpp"
#include "allabel/synthetic.hpp"
#include "allabel/util.hpp"

using namespace allabel;

namespace {

const DatasetSchema kMof({{"Metal_Source", {"precursor_name", "amount"}}, {"Solvent", {"solvent_name", "volume"}}});

Completion with_logprobs(std::vector<double> lps) {
  Completion c;
  std::vector<TokenLogprob> t;
  for (double lp : lps) {
    t.push_back({"x", lp});
    c.text += "x";
  }
  c.token_logprobs = std::move(t);
  return c;
}

class Counting final : public Annotator {
 public:
  std::string id() const override { return "counting"; }
  bool supports_logprobs() const override { return false; }
  Completion annotate(const AnnotationRequest& r) override {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --active;
    ++calls;
    if (r.sample_id == "bad") throw AnnotatorError("scripted failure");
    return {"echo " + r.sample_id, std::nullopt, {}};
  }

  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  std::atomic<int> calls{0};
};

}  // namespace

TEST_SUITE("annotator") {
  TEST_CASE("perplexity") {
    const std::vector<double> zeros{0.0, 0.0, 0.0, 0.0};
    CHECK(perplexity(zeros) == 1.0);
    const double v = 37.0;
    const std::vector<double> uniform(5, -std::log(v));
    CHECK(std::abs(perplexity(uniform) - v) <= 1e-12 * v);
    const std::vector<double> three{-1.0, -2.0, -3.0};
    CHECK(std::abs(perplexity(three) - 7.38905609893065) <= 1e-12);
    CHECK(std::abs(perplexity(three) - oracle::perplexity(three)) <= 1e-12);
    CHECK(perplexity(with_logprobs(three)) == perplexity(three));
    CHECK_THROWS_AS(perplexity(Completion{"text", std::nullopt, {}}), CapabilityError);
    CHECK_THROWS_AS(perplexity(std::vector<double>{}), std::invalid_argument);
  }

  TEST_CASE("entity perplexity averages per type") {
    Completion c;
    c.text = R"([{"Metal_Source":[],"Solvent":[]}])";
    // tokens: `[{` | `"Metal_Source":[],` | `"Solvent":[]` | `}]`
    c.token_logprobs = std::vector<TokenLogprob>{{"[{", -5.0},
                                                 {"\"Metal_Source\":[],", -1.0},
                                                 {"\"Solvent\":[]", -3.0},
                                                 {"}]", -3.0}};
    CHECK(entity_perplexity(c, kMof) == doctest::Approx((std::exp(1.0) + std::exp(3.0)) / 2.0));
    const auto plain = with_logprobs({-2.0, -2.0});
    CHECK(entity_perplexity(plain, kMof) == doctest::Approx(std::exp(2.0)));
  }

  TEST_CASE("parse model output") {
    const std::string table =
        R"([{"Metal_Source": [{"precursor_name": "AgNO3","amount": "0.2 mmol" }], "Solvent": []}])";
    const auto p = parse_output(table, kMof);
    CHECK(p.violations.empty());
    REQUIRE(p.annotations.at("Metal_Source").size() == 1);
    CHECK(p.annotations.at("Metal_Source")[0].at("precursor_name") == "AgNO3");
    CHECK(p.annotations.at("Metal_Source")[0].at("amount") == "0.2 mmol");
    CHECK(p.annotations.at("Solvent").empty());

    const auto fenced = parse_output("Here you go:\n```json\n" + table + "\n```\nDone.", kMof);
    CHECK(fenced.annotations == p.annotations);

    const auto partial = parse_output(R"([{"Metal_Source": [{"precursor_name": "AgNO3","amount": "0.2 mmol"}]}])", kMof);
    CHECK(partial.annotations == p.annotations);

    const auto extra = parse_output(R"([{"Linker": [{"name": "bpe"}], "Solvent": [{"solvent_name": "DMF", "colour": "x"}]}])",
                                    kMof);
    CHECK(extra.violations.size() == 2);
    CHECK(extra.annotations.count("Linker") == 0);
    CHECK(extra.annotations.at("Solvent")[0].count("colour") == 0);

    const auto merged = parse_output(R"([{"Solvent": [{"solvent_name": "DMF"}]}, {"Solvent": [{"solvent_name": "water"}]}])", kMof);
    CHECK(merged.annotations.at("Solvent").size() == 2);

    CHECK_THROWS_AS(parse_output("I could not find any entities.", kMof), ParseError);
    CHECK_THROWS_AS(parse_output("[1, 2]", kMof), ParseError);
  }

  TEST_CASE("prompt hash is stable") {
    CHECK(prompt_hash("abc") == prompt_hash("abc"));
    CHECK(prompt_hash("abc") != prompt_hash("abd"));
    CHECK(prompt_hash("").size() == 16);
  }

  TEST_CASE("annotate_all keeps order and bounds concurrency") {
    Counting counting;
    std::vector<AnnotationRequest> reqs;
    for (int i = 0; i < 24; ++i) reqs.push_back({i == 7 ? "bad" : "q" + std::to_string(i), "p", {}});
    const auto out = annotate_all(counting, reqs, 3);
    CHECK(counting.peak.load() <= 3);
    CHECK(counting.calls.load() == 24);
    for (int i = 0; i < 24; ++i) {
      if (i == 7) {
        CHECK_FALSE(out[i].completion);
        CHECK(out[i].error.find("scripted") != std::string::npos);
      } else {
        REQUIRE(out[i].completion);
        CHECK(out[i].completion->text == "echo q" + std::to_string(i));
      }
    }
    CHECK_THROWS_AS(annotate_all(counting, reqs, 0), std::invalid_argument);
  }

  TEST_CASE("simulator extremes") {
    const Dataset ds = make_synthetic({.samples = 30});
    Demonstration demo{"x", "t", {}, 0.8};
    std::vector<Demonstration> demos{demo};

    SimulatedAnnotatorModel perfect;
    perfect.base_accuracy = 0.5;
    perfect.similarity_gain = 1.0;  // 0.5 + 0.8 clamps to 1
    SimulatedAnnotatorModel hopeless;
    hopeless.base_accuracy = 0.0;
    hopeless.similarity_gain = 0.0;
    for (const auto& s : ds.samples()) {
      const auto& gold = *ds.gold_for(s.id);
      const auto good = simulated_annotate(s.id, demos, gold, ds.schema(), perfect);
      CHECK(parse_output(good.text, ds.schema()).annotations == complete_annotations(gold, ds.schema()));
      const auto bad = parse_output(simulated_annotate(s.id, demos, gold, ds.schema(), hopeless).text, ds.schema());
      for (const auto& t : ds.schema().entity_types())
        CHECK(classify(gold.at(t.name), bad.annotations.at(t.name)) != (gold.at(t.name).empty() ? Outcome::tn : Outcome::tp));
    }
  }

  TEST_CASE("simulator is deterministic and perplexity falls with similarity") {
    const Dataset ds = make_synthetic({.samples = 10});
    SimulatedAnnotatorModel model;
    const auto& s = ds.samples()[3];
    const auto& gold = *ds.gold_for(s.id);
    double last = std::numeric_limits<double>::infinity();
    for (double sim : {0.05, 0.25, 0.45, 0.65, 0.85}) {
      std::vector<Demonstration> demos{{"a", "t", {}, sim}, {"b", "t", {}, sim}};
      const auto c1 = simulated_annotate(s.id, demos, gold, ds.schema(), model);
      const auto c2 = simulated_annotate(s.id, demos, gold, ds.schema(), model);
      CHECK(c1 == c2);
      const double pp = perplexity(c1);
      CHECK(pp < last);
      last = pp;
    }
    SimulatedAnnotator annot(model, ds.schema(), {});
    CHECK_THROWS_AS(annot.annotate({"syn-000", "p", {}}), AnnotatorError);
    model.base_accuracy = 1.5;
    CHECK_THROWS_AS(model.validate(), std::invalid_argument);
  }

  TEST_CASE("results log survives a truncated line and serves replays") {
    fixture::TempDir dir;
    const auto path = dir / "log.jsonl";
    {
      ResultsLog log(path);
      log.append({"a", prompt_hash("pa"), "sim", Completion{"[]", std::nullopt, {}}, nullptr, {}});
      log.append({"b", prompt_hash("pb"), "sim", std::nullopt, nullptr, "HTTP 500"});
    }
    {
      std::ofstream out(path, std::ios::app | std::ios::binary);
      out << R"({"sample_id": "c", "prompt_ha)";
    }
    ResultsLog log(path);
    CHECK(log.size() == 2);
    CHECK(log.find("sim", "a", prompt_hash("pa")));
    CHECK_FALSE(log.find("sim", "b", prompt_hash("pb")));
    CHECK_FALSE(log.find("sim", "c", prompt_hash("pa")));
    log.append({"c", prompt_hash("pc"), "sim", Completion{"[1]", std::nullopt, {}}, nullptr, {}});
    const auto entries = ResultsLog::read(path);
    REQUIRE(entries.size() == 3);
    CHECK(entries[2].sample_id == "c");

    ReplayAnnotator replay(path);
    CHECK(replay.annotate({"zzz", "pa", {}}).text == "[]");
    CHECK(replay.annotate({"c", "other prompt", {}}).text == "[1]");
    CHECK_THROWS_AS(replay.annotate({"b", "pb", {}}), AnnotatorError);
    CHECK_THROWS_AS(ReplayAnnotator(dir / "none.jsonl"), IoError);
  }

  TEST_CASE("cached annotator") {
    fixture::TempDir dir;
    Counting inner;
    {
      ResultsLog log(dir / "log.jsonl");
      CachedAnnotator cached(inner, &log);
      CHECK(cached.annotate({"q1", "prompt", {}}).text == "echo q1");
      CHECK(cached.annotate({"q1", "prompt", {}}).text == "echo q1");
      CHECK(cached.annotate({"q2", "prompt", {}}).text == "echo q2");
      CHECK_THROWS_AS(cached.annotate({"bad", "prompt", {}}), AnnotatorError);
      CHECK(cached.calls() == 3);
      CHECK(cached.hits() == 1);
    }
    ResultsLog reopened(dir / "log.jsonl");
    CachedAnnotator again(inner, &reopened);
    again.annotate({"q2", "prompt", {}});
    CHECK(again.hits() == 1);
    CHECK(again.calls() == 0);
    CHECK(reopened.size() == 3);

    CachedAnnotator memo(inner, nullptr);
    memo.annotate({"q9", "p", {}});
    memo.annotate({"q9", "p", {}});
    CHECK(memo.calls() == 1);
  }
}
