#include "doctest.h"
#include "fixtures.hpp"

#include "allabel/corpus.hpp"
#include "allabel/error.hpp"
#include "allabel/util.hpp"

using namespace allabel;

namespace {

const char* kSchema = R"({"entity_types": [
  {"name": "Precursor", "attributes": ["precursor_name", "amount"]},
  {"name": "Solvent", "attributes": ["solvent_name", "volume"]}]})";

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("three records load in file order") {
    fixture::TempDir dir;
    fixture::write(dir / "schema.json", kSchema);
    fixture::write(dir / "s.jsonl",
                   "{\"id\": \"c\", \"text\": \"third\"}\n"
                   "{\"id\": \"a\", \"text\": \"first\"}\n"
                   "\n"
                   "{\"id\": \"b\", \"text\": \"second\", \"doc_id\": \"d1\"}\n");
    const Dataset ds = load_dataset(dir / "s.jsonl", dir / "schema.json");
    CHECK(ds.size() == 3);
    CHECK(ds.ids() == std::vector<std::string>{"c", "a", "b"});
    CHECK(ds.sample("b").doc_id == std::optional<std::string>("d1"));
    CHECK(ds.position("a") == 1);
    CHECK(validate(ds).empty());
  }

  TEST_CASE("duplicate id is reported by name") {
    fixture::TempDir dir;
    fixture::write(dir / "schema.json", kSchema);
    fixture::write(dir / "s.jsonl", "{\"id\": \"s1\", \"text\": \"x\"}\n{\"id\": \"s1\", \"text\": \"y\"}\n");
    try {
      load_dataset(dir / "s.jsonl", dir / "schema.json");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("s1") != std::string::npos);
    }
  }

  TEST_CASE("entity type outside the schema is a schema error") {
    fixture::TempDir dir;
    const DatasetSchema schema({{"Precursor", {"precursor_name", "amount"}}});
    fixture::write(dir / "s.jsonl", "{\"id\": \"s1\", \"text\": \"x\"}\n");
    fixture::write(dir / "g.jsonl",
                   "{\"id\": \"s1\", \"annotations\": {\"Solvent\": [{\"solvent_name\": \"DMF\"}]}}\n");
    CHECK_THROWS_AS(load_annotations(dir / "g.jsonl", schema), SchemaError);
    fixture::write(dir / "g2.jsonl",
                   "{\"id\": \"s1\", \"annotations\": {\"Precursor\": [{\"colour\": \"red\"}]}}\n");
    CHECK_THROWS_AS(load_annotations(dir / "g2.jsonl", schema), SchemaError);
  }

  TEST_CASE("malformed line reports its number") {
    fixture::TempDir dir;
    fixture::write(dir / "schema.json", kSchema);
    fixture::write(dir / "s.jsonl", "{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"b\", \"text\": \n");
    try {
      load_dataset(dir / "s.jsonl", dir / "schema.json");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", dir / "schema.json"), IoError);
  }

  TEST_CASE("validation flags a missing type key and empty text") {
    const DatasetSchema schema({{"Precursor", {"precursor_name", "amount"}}, {"Solvent", {"solvent_name"}}});
    Annotations partial{{"Precursor", {}}};
    CHECK(validate_annotations("s1", partial, schema).size() == 1);
    CHECK(validate_annotations("s1", complete_annotations(partial, schema), schema).empty());

    const Dataset ds(schema, {{"s1", "", std::nullopt}, {"s2", "text", std::nullopt}});
    const auto report = validate(ds);
    REQUIRE(report.size() == 1);
    CHECK(report[0].sample_id == "s1");
  }

  TEST_CASE("load, save, load is a fixed point") {
    fixture::TempDir dir;
    const DatasetSchema schema({{"Precursor", {"precursor_name", "amount"}}, {"Solvent", {"solvent_name"}}});
    AnnotationMap gold;
    gold["a"] = {"a", {{"Precursor", {{{"precursor_name", "AgNO3"}, {"amount", "0.2 mmol"}}}}, {"Solvent", {}}}};
    gold["b"] = {"b", {{"Precursor", {}}, {"Solvent", {{{"solvent_name", "DMF"}}}}}};
    const Dataset ds(schema, {{"a", "AgNO3 in water", "doc-1"}, {"b", "Zn\xc3\xa9 in DMF", std::nullopt}}, gold);

    save_samples(ds, dir / "s.jsonl");
    save_annotations(gold, ds, dir / "g.jsonl");
    fixture::write(dir / "schema.json", schema_to_json(schema).dump());

    const Dataset again = load_dataset(dir / "s.jsonl", dir / "schema.json");
    CHECK(again.samples() == ds.samples());
    CHECK(again.gold() == ds.gold());
    CHECK(load_annotations(dir / "g.jsonl", schema) == gold);

    save_samples(again, dir / "s2.jsonl");
    CHECK(read_file(dir / "s.jsonl") == read_file(dir / "s2.jsonl"));
  }

  TEST_CASE("deduplication by document id") {
    const DatasetSchema schema({EntityType{"T", {"v"}}});
    const Dataset ds(schema, {{"a", "x", "d1"}, {"b", "y", "d1"}, {"c", "z", std::nullopt}, {"d", "w", "d2"}});
    CHECK(deduplicate_by_doc(ds, DedupMode::keep_first).ids() == std::vector<std::string>{"a", "c", "d"});
    CHECK(deduplicate_by_doc(ds, DedupMode::drop_shared).ids() == std::vector<std::string>{"c", "d"});
  }

  TEST_CASE("annotations render in schema order") {
    const DatasetSchema schema({{"Precursor", {"precursor_name", "amount"}}, {"Solvent", {"solvent_name"}}});
    Annotations a{{"Solvent", {}}, {"Precursor", {{{"amount", "1 g"}, {"precursor_name", "X"}}}}};
    CHECK(annotations_to_json(a, schema).dump() ==
          R"([{"Precursor":[{"precursor_name":"X","amount":"1 g"}],"Solvent":[]}])");
  }
}
