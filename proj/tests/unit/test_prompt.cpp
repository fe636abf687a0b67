#include <regex>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "allabel/error.hpp"
#include "allabel/prompt.hpp"

using namespace allabel;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

const DatasetSchema kSchema({{"Metal_Source", {"precursor_name", "amount"}}, {"Solvent", {"solvent_name"}}});

}  // namespace

TEST_SUITE("retrieval_prompting") {
  TEST_CASE("k-shot retrieval") {
    const auto m = fixture::random_square(7, 21);
    const std::vector<std::string> pool{"s1", "s2", "s3"};
    const auto all = retrieve_kshots(m, "s0", pool, 3);
    CHECK(all.picks.size() == 3);
    CHECK_FALSE(all.short_pool);
    for (std::size_t i = 1; i < 3; ++i) CHECK(all.picks[i - 1].score >= all.picks[i].score);

    const std::vector<std::string> with_self{"s0", "s4", "s5"};
    const auto r = retrieve_kshots(m, "s0", with_self, 3);
    CHECK(r.picks.size() == 2);
    CHECK(r.short_pool);
    for (const auto& p : r.picks) CHECK(p.id != "s0");

    const std::vector<std::string> only_self{"s0"};
    CHECK_THROWS_AS(retrieve_kshots(m, "s0", only_self, 3), Error);
    CHECK_THROWS_AS(retrieve_kshots(m, "s0", pool, 0), std::invalid_argument);
  }

  TEST_CASE("k-shot retrieval matches a full sort") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto m = fixture::random_square(7, seed, true);
      const std::vector<std::string> pool = fixture::ids(7);
      const auto full = oracle::ranking(m, 3);
      const auto got = retrieve_kshots(m, "s3", pool, 3);
      REQUIRE(got.picks.size() == 3);
      for (std::size_t i = 0; i < 3; ++i) {
        CHECK(got.picks[i].id == full[i]);
        CHECK(got.picks[i].rank == i + 1);
      }
    }
  }

  TEST_CASE("template parsing") {
    const auto t = PromptTemplate::parse(
        "[ROLE]\nYou annotate.\n[TASK]\nFind {{entity_types}}.\n\n[BACKGROUND]\nTypes:\n{{schema}}\n[FORMAT]\nJSON.\n");
    CHECK(t.role == "You annotate.");
    CHECK(t.format == "JSON.");
    const auto inst = t.instantiate(kSchema);
    CHECK(inst.task == "Find \"Metal_Source\", \"Solvent\".");
    CHECK(inst.background == "Types:\n- Metal_Source: precursor_name, amount\n- Solvent: solvent_name");
    CHECK(PromptTemplate::parse(t.to_text()) == t);
    CHECK_THROWS(PromptTemplate::parse("[ROLE]\nx\n[TASK]\ny\n[FORMAT]\nz\n"));
    CHECK_THROWS(PromptTemplate::parse("[ROLE]\n\n[TASK]\ny\n[BACKGROUND]\nb\n[FORMAT]\nz\n"));
  }

  TEST_CASE("prompt layout") {
    const auto tmpl = PromptTemplate::default_for(kSchema);
    const auto zero = assemble_prompt(tmpl, {}, "Dissolve CuCl2 in water.", kSchema);
    CHECK(zero.size() >= std::string("Input 1: Dissolve CuCl2 in water.\n").size());
    CHECK(zero.ends_with("Input 1: Dissolve CuCl2 in water.\n"));
    CHECK(count(zero, "Output 1:") == 0);

    std::vector<Demonstration> demos;
    for (int i = 0; i < 3; ++i) {
      Annotations a{{"Metal_Source", {{{"precursor_name", "AgNO3"}, {"amount", std::to_string(i) + " mmol"}}}},
                    {"Solvent", {}}};
      demos.push_back({"d" + std::to_string(i), "text " + std::to_string(i), a, 0.5});
    }
    const auto p = assemble_prompt(tmpl, demos, "query text", kSchema);
    CHECK(p == assemble_prompt(tmpl, demos, "query text", kSchema));
    CHECK(std::regex_search(p, std::regex("Output 3: .*\n\nInput 4: query text\n$")));
    CHECK(count(p, "\nOutput ") == 3);
    CHECK(p.find("Input 1: text 0\nOutput 1: "
                 "[{\"Metal_Source\":[{\"precursor_name\":\"AgNO3\",\"amount\":\"0 mmol\"}],\"Solvent\":[]}]") !=
          std::string::npos);
    CHECK(p.find(tmpl.role) == 0);
  }

  TEST_CASE("demonstrations need labels") {
    const auto m = fixture::random_square(4, 2);
    const auto ds = fixture::id_dataset(m.row_ids());
    const std::vector<std::string> pool{"s1", "s2"};
    const auto r = retrieve_kshots(m, "s0", pool, 2);
    AnnotationMap labels;
    labels["s1"] = {"s1", {{"Thing", {}}}};
    CHECK_THROWS_AS(make_demonstrations(r, ds, labels), Error);
    labels["s2"] = {"s2", {{"Thing", {{{"name", "x"}}}}}};
    const auto demos = make_demonstrations(r, ds, labels);
    REQUIRE(demos.size() == 2);
    CHECK(demos[0].id == r.picks[0].id);
    CHECK(demos[0].text == "text of " + r.picks[0].id);
    CHECK(demos[0].score == r.picks[0].score);
  }
}
