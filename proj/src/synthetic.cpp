#include "allabel/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include "allabel/util.hpp"

namespace allabel {

void SyntheticConfig::validate() const {
  if (samples < 2) throw std::invalid_argument("synthetic corpus needs at least two samples");
  if (clusters < 1) throw std::invalid_argument("synthetic corpus needs at least one cluster");
  if (cluster_weights.empty()) throw std::invalid_argument("cluster weights are empty");
  for (double w : cluster_weights)
    if (!(w > 0.0)) throw std::invalid_argument("cluster weights must be positive");
  if (topic_vocabulary < topic_words || topic_words == 0)
    throw std::invalid_argument("topic vocabulary must hold at least topic_words words");
  if (!(mutation >= 0.0 && mutation <= 1.0)) throw std::invalid_argument("mutation must lie in [0, 1]");
}

DatasetSchema synthetic_schema() {
  return DatasetSchema({
      {"Precursor", {"precursor_name", "amount"}},
      {"Solvent", {"solvent_name", "volume"}},
      {"Modulator", {"modulator_name", "amount"}},
      {"Condition", {"temperature", "time"}},
  });
}

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "th"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
constexpr const char* kCommon[] = {"the",     "mixture", "was",    "then",    "added",  "stirred", "solution",
                                   "sealed",  "heated",  "cooled", "washed",  "dried",  "product", "obtained",
                                   "crystals", "vessel", "after",  "dissolved", "filtered", "yield"};
constexpr const char* kElements[] = {"Zn", "Cu", "Co", "Ni", "Zr", "Fe", "Mn", "Cd", "Mg", "Al", "In", "Ag"};
constexpr const char* kAnions[] = {"NO3", "Cl2", "SO4", "OAc", "Br2", "ClO4"};

std::string pseudo_word(std::mt19937_64& rng) {
  std::string w;
  const std::size_t syllables = 2 + uniform_index(rng, 2);
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnsets[uniform_index(rng, std::size(kOnsets))];
    w += kVowels[uniform_index(rng, std::size(kVowels))];
  }
  return w;
}

struct Cluster {
  std::vector<std::string> topic;
  std::vector<std::vector<std::string>> templates;
  std::vector<std::string> precursors;
  std::vector<std::string> solvents;
  std::vector<std::string> modulators;
  int temperature;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<std::size_t> assign_clusters(const SyntheticConfig& config, std::mt19937_64& rng) {
  std::vector<double> w(config.clusters);
  double total = 0.0;
  for (std::size_t c = 0; c < config.clusters; ++c) total += w[c] = config.cluster_weights[c % config.cluster_weights.size()];
  std::vector<std::size_t> sizes(config.clusters);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < config.clusters; ++c) {
    sizes[c] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(w[c] / total * static_cast<double>(config.samples))));
    assigned += sizes[c];
  }
  for (std::size_t c = 0; assigned < config.samples; c = (c + 1) % config.clusters, ++assigned) ++sizes[c];
  for (std::size_t c = config.clusters; assigned > config.samples; ) {
    c = c == 0 ? config.clusters - 1 : c - 1;
    if (sizes[c] > 1) {
      --sizes[c];
      --assigned;
    }
  }
  std::vector<std::size_t> labels;
  for (std::size_t c = 0; c < config.clusters; ++c) labels.insert(labels.end(), sizes[c], c);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[uniform_index(rng, i)]);
  return labels;
}

}  // namespace

std::vector<std::size_t> synthetic_clusters(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  return assign_clusters(config, rng);
}

Dataset make_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const auto labels = assign_clusters(config, rng);

  std::set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      auto w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  std::vector<Cluster> clusters(config.clusters);
  for (auto& c : clusters) {
    for (std::size_t i = 0; i < config.topic_vocabulary; ++i) c.topic.push_back(fresh());
    for (int i = 0; i < 4; ++i)
      c.precursors.push_back(std::string(kElements[uniform_index(rng, std::size(kElements))]) +
                             kAnions[uniform_index(rng, std::size(kAnions))]);
    for (int i = 0; i < 3; ++i) c.solvents.push_back(fresh() + "ol");
    for (int i = 0; i < 3; ++i) c.modulators.push_back(fresh() + "ic acid");
    c.temperature = 60 + 10 * static_cast<int>(uniform_index(rng, 14));
    for (std::size_t t = 0; t < config.templates; ++t) {
      std::vector<std::string> words;
      for (std::size_t w = 0; w < config.topic_words; ++w) words.push_back(c.topic[uniform_index(rng, c.topic.size())]);
      c.templates.push_back(std::move(words));
    }
  }

  std::vector<Sample> samples;
  AnnotationMap gold;
  for (std::size_t i = 0; i < config.samples; ++i) {
    const Cluster& c = clusters[labels[i]];
    auto pick = [&](const std::vector<std::string>& v) -> const std::string& { return v[uniform_index(rng, v.size())]; };
    Annotations ann;
    std::vector<std::string> phrases;
    const std::size_t n_prec = 1 + uniform_index(rng, 2);
    for (std::size_t p = 0; p < n_prec; ++p) {
      EntityRecord r{{"precursor_name", pick(c.precursors)},
                     {"amount", fmt("%.1f mmol", 0.1 * static_cast<double>(1 + uniform_index(rng, 9)))}};
      phrases.push_back(r["precursor_name"] + " (" + r["amount"] + ")");
      ann["Precursor"].push_back(std::move(r));
    }
    ann["Solvent"];
    if (uniform_index(rng, 100) >= 15) {
      EntityRecord r{{"solvent_name", pick(c.solvents)},
                     {"volume", fmt("%.0f mL", static_cast<double>(5 * (1 + uniform_index(rng, 6))))}};
      phrases.push_back("in " + r["volume"] + " " + r["solvent_name"]);
      ann["Solvent"].push_back(std::move(r));
    }
    ann["Modulator"];
    if (uniform_index(rng, 100) >= 40) {
      EntityRecord r{{"modulator_name", pick(c.modulators)},
                     {"amount", fmt("%.1f mmol", 0.5 * static_cast<double>(1 + uniform_index(rng, 6)))}};
      phrases.push_back("with " + r["modulator_name"] + " (" + r["amount"] + ")");
      ann["Modulator"].push_back(std::move(r));
    }
    ann["Condition"];
    if (uniform_index(rng, 100) >= 30) {
      EntityRecord r{{"temperature", fmt("%.0f C", static_cast<double>(c.temperature))},
                     {"time", fmt("%.0f h", static_cast<double>(12 * (1 + uniform_index(rng, 6))))}};
      phrases.push_back("at " + r["temperature"] + " for " + r["time"]);
      ann["Condition"].push_back(std::move(r));
    }

    std::vector<std::string> words;
    if (c.templates.empty()) {
      // Zipf-like draw: low-index words are frequent within the cluster.
      for (std::size_t w = 0; w < config.topic_words; ++w) {
        const double u = unit_interval(rng());
        const auto idx = static_cast<std::size_t>(std::floor(u * u * static_cast<double>(c.topic.size())));
        words.push_back(c.topic[std::min(idx, c.topic.size() - 1)]);
      }
    } else {
      words = c.templates[uniform_index(rng, c.templates.size())];
      for (auto& w : words)
        if (unit_interval(rng()) < config.mutation) w = c.topic[uniform_index(rng, c.topic.size())];
    }
    for (std::size_t w = 0; w < config.common_words; ++w) {
      const std::size_t at = uniform_index(rng, words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), kCommon[uniform_index(rng, std::size(kCommon))]);
    }

    std::string text;
    const std::size_t stride = std::max<std::size_t>(1, words.size() / (phrases.size() + 1));
    std::size_t next_phrase = 0;
    for (std::size_t w = 0; w < words.size(); ++w) {
      if (!text.empty()) text += ' ';
      text += words[w];
      if ((w + 1) % stride == 0 && next_phrase < phrases.size()) text += ' ' + phrases[next_phrase++];
    }
    for (; next_phrase < phrases.size(); ++next_phrase) text += ' ' + phrases[next_phrase];
    text += '.';

    char id[32];
    std::snprintf(id, sizeof id, "syn-%03zu", i);
    samples.push_back({id, std::move(text), std::nullopt});
    gold[id] = {id, std::move(ann)};
  }
  return Dataset(synthetic_schema(), std::move(samples), std::move(gold));
}

}  // namespace allabel
