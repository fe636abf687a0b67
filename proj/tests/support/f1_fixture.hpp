#pragma once

// Four samples over three entity types with a mix of all four outcomes.
// Per-sample F1: s1 = 1, s2 = 1/3, s3 = 2/3, s4 = 1/3.

#include "allabel/corpus.hpp"

namespace fixture {

struct F1Case {
  allabel::Dataset dataset;
  allabel::AnnotationMap predictions;
};

inline F1Case f1_case() {
  using allabel::EntityRecord;
  const allabel::DatasetSchema schema({{"Precursor", {"precursor_name", "amount"}},
                                       {"Solvent", {"solvent_name", "volume"}},
                                       {"Modulator", {"modulator_name", "amount"}}});
  auto P = [](const char* n, const char* a) { return EntityRecord{{"precursor_name", n}, {"amount", a}}; };
  auto S = [](const char* n, const char* v) { return EntityRecord{{"solvent_name", n}, {"volume", v}}; };
  auto M = [](const char* n, const char* a) { return EntityRecord{{"modulator_name", n}, {"amount", a}}; };

  allabel::AnnotationMap gold, pred;
  gold["s1"] = {"s1", {{"Precursor", {P("AgNO3", "0.2 mmol")}}, {"Solvent", {S("DMF", "10 mL")}}, {"Modulator", {}}}};
  pred["s1"] = {"s1", {{"Precursor", {P("AgNO3", " 0.2  mmol")}}, {"Solvent", {S("DMF", "10 mL")}}, {"Modulator", {}}}};

  gold["s2"] = {"s2", {{"Precursor", {P("ZnCl2", "1 mmol"), P("CuCl2", "2 mmol")}},
                       {"Solvent", {S("water", "5 mL")}},
                       {"Modulator", {}}}};
  pred["s2"] = {"s2", {{"Precursor", {P("CuCl2", "2 mmol"), P("ZnCl2", "1 mmol")}},
                       {"Solvent", {}},
                       {"Modulator", {M("HCl", "1 mmol")}}}};

  gold["s3"] = {"s3", {{"Precursor", {P("Co(NO3)2", "0.5 mmol")}},
                       {"Solvent", {}},
                       {"Modulator", {M("acetic acid", "1 mL")}}}};
  pred["s3"] = {"s3", {{"Precursor", {P("Co(NO3)2", "0.6 mmol")}},
                       {"Solvent", {}},
                       {"Modulator", {M("acetic acid", "1 mL")}}}};

  gold["s4"] = {"s4", {{"Precursor", {P("FeCl3", "0.1 mmol")}}, {"Solvent", {S("ethanol", "3 mL")}}, {"Modulator", {}}}};
  pred["s4"] = {"s4", {{"Precursor", {}},
                       {"Solvent", {S("ethanol", "3 mL"), S("ethanol", "3 mL")}},
                       {"Modulator", {}}}};

  std::vector<allabel::Sample> samples;
  for (const char* id : {"s1", "s2", "s3", "s4"}) samples.push_back({id, std::string("procedure ") + id, std::nullopt});
  return {allabel::Dataset(schema, std::move(samples), std::move(gold)), std::move(pred)};
}

/// Mean of the per-sample F1 values above.
inline constexpr double kF1MeanOfMeans = (1.0 + 1.0 / 3.0 + 2.0 / 3.0 + 1.0 / 3.0) / 4.0;
/// Pooled per type: Precursor 2/3, Solvent 1/2, Modulator 2/3.
inline constexpr double kF1Pooled = (2.0 / 3.0 + 1.0 / 2.0 + 2.0 / 3.0) / 3.0;

}  // namespace fixture
