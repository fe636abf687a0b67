#include "allabel/harness.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "allabel/error.hpp"
#include "allabel/util.hpp"

namespace allabel {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::vector<std::size_t> PoolRange::sizes() const {
  if (step == 0) throw std::invalid_argument("pool step must be positive");
  if (start == 0) throw std::invalid_argument("pool sizes must be positive");
  if (stop < start) throw std::invalid_argument("pool range stop is below start");
  std::vector<std::size_t> out;
  for (std::size_t m = start; m <= stop; m += step) out.push_back(m);
  return out;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

std::size_t to_size(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || s.front() == '-')
    throw std::invalid_argument("'" + s + "' is not a valid " + what);
  return static_cast<std::size_t>(v);
}

}  // namespace

PoolRange PoolRange::parse(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw std::invalid_argument("pool range must look like start:stop:step, got '" + text + "'");
  PoolRange r{to_size(parts[0], "pool start"), to_size(parts[1], "pool stop"), to_size(parts[2], "pool step")};
  r.sizes();
  return r;
}

std::string PoolRange::to_string() const {
  return std::to_string(start) + ":" + std::to_string(stop) + ":" + std::to_string(step);
}

std::array<unsigned, 3> parse_proportion(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw std::invalid_argument("proportion must look like a:b:c, got '" + text + "'");
  std::array<unsigned, 3> p{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto v = to_size(parts[i], "proportion part");
    if (v == 0) throw std::invalid_argument("proportion parts must be positive: '" + text + "'");
    p[i] = static_cast<unsigned>(v);
  }
  return p;
}

std::string proportion_string(const std::array<unsigned, 3>& p) {
  return std::to_string(p[0]) + ":" + std::to_string(p[1]) + ":" + std::to_string(p[2]);
}

bool is_stochastic(const std::string& strategy) { return strategy == "random" || strategy == "coreset_cold"; }

namespace {

const std::set<std::string> kStrategies{"allabel", "random", "coreset_cold", "perplexity"};

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw SchemaError("unknown key '" + k + "' in " + where);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    check_keys(j,
               {"dataset", "template", "strategies", "pool_sizes", "shots", "runs", "seeds", "orders", "proportions",
                "annotator", "bm25", "threshold", "max_in_flight", "aggregation"},
               "config");
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      check_keys(d, {"samples", "schema", "synthetic"}, "dataset");
      if (d.contains("samples")) c.samples = resolve(base_dir, d["samples"].get<std::string>());
      if (d.contains("schema")) c.schema = resolve(base_dir, d["schema"].get<std::string>());
      if (d.contains("synthetic")) {
        const auto& s = d["synthetic"];
        check_keys(s,
                   {"samples", "clusters", "seed", "cluster_weights", "topic_vocabulary", "topic_words", "common_words",
                    "templates", "mutation"},
                   "dataset.synthetic");
        c.synthetic.samples = s.value("samples", c.synthetic.samples);
        c.synthetic.clusters = s.value("clusters", c.synthetic.clusters);
        c.synthetic.seed = s.value("seed", c.synthetic.seed);
        c.synthetic.cluster_weights = s.value("cluster_weights", c.synthetic.cluster_weights);
        c.synthetic.topic_vocabulary = s.value("topic_vocabulary", c.synthetic.topic_vocabulary);
        c.synthetic.topic_words = s.value("topic_words", c.synthetic.topic_words);
        c.synthetic.common_words = s.value("common_words", c.synthetic.common_words);
        c.synthetic.templates = s.value("templates", c.synthetic.templates);
        c.synthetic.mutation = s.value("mutation", c.synthetic.mutation);
      }
    }
    if (j.contains("template")) c.template_path = resolve(base_dir, j["template"].get<std::string>());
    if (j.contains("strategies")) c.strategies = j["strategies"].get<std::vector<std::string>>();
    if (j.contains("pool_sizes")) c.pools = PoolRange::parse(j["pool_sizes"].get<std::string>());
    if (j.contains("shots")) c.shots = j["shots"].get<std::vector<std::size_t>>();
    if (j.contains("runs")) c.runs = j["runs"].get<std::size_t>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("orders")) c.orders = j["orders"].get<std::vector<std::string>>();
    if (j.contains("proportions")) {
      c.proportions.clear();
      for (const auto& p : j["proportions"]) c.proportions.push_back(parse_proportion(p.get<std::string>()));
    }
    if (j.contains("annotator")) {
      const auto& a = j["annotator"];
      check_keys(a,
                 {"kind", "base_accuracy", "similarity_gain", "seed", "corruption", "endpoint", "model", "temperature",
                  "max_tokens", "max_attempts", "timeout_ms", "credential_env", "logprobs", "path"},
                 "annotator");
      auto& s = c.annotator;
      s.kind = a.value("kind", s.kind);
      s.sim.base_accuracy = a.value("base_accuracy", s.sim.base_accuracy);
      s.sim.similarity_gain = a.value("similarity_gain", s.sim.similarity_gain);
      s.sim.seed = a.value("seed", s.sim.seed);
      if (a.contains("corruption")) {
        const auto rule = a["corruption"].get<std::string>();
        if (rule == "mixed") s.sim.corruption = CorruptionRule::mixed;
        else if (rule == "drop") s.sim.corruption = CorruptionRule::drop;
        else if (rule == "perturb") s.sim.corruption = CorruptionRule::perturb;
        else throw SchemaError("unknown corruption rule '" + rule + "'");
      }
      s.live.endpoint = a.value("endpoint", s.live.endpoint);
      s.live.model = a.value("model", s.live.model);
      s.live.temperature = a.value("temperature", s.live.temperature);
      if (a.contains("max_tokens")) s.live.max_tokens = a["max_tokens"].get<int>();
      s.live.retry.max_attempts = a.value("max_attempts", s.live.retry.max_attempts);
      if (a.contains("timeout_ms")) s.live.timeout = std::chrono::milliseconds(a["timeout_ms"].get<long long>());
      s.live.credential_env = a.value("credential_env", s.live.credential_env);
      s.live.request_logprobs = a.value("logprobs", s.live.request_logprobs);
      if (a.contains("path")) s.replay = resolve(base_dir, a["path"].get<std::string>());
    }
    if (j.contains("bm25")) {
      check_keys(j["bm25"], {"k1", "b"}, "bm25");
      c.bm25.k1 = j["bm25"].value("k1", c.bm25.k1);
      c.bm25.b = j["bm25"].value("b", c.bm25.b);
    }
    c.threshold = j.value("threshold", c.threshold);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (j.contains("aggregation")) {
      const auto agg = j["aggregation"].get<std::string>();
      if (agg == "mean_of_means") c.aggregation = Aggregation::mean_of_means;
      else if (agg == "pooled") c.aggregation = Aggregation::pooled;
      else throw SchemaError("unknown aggregation '" + agg + "'");
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("invalid experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("invalid experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  return from_json(j, path.parent_path());
}

namespace {

const char* corruption_name(CorruptionRule r) {
  switch (r) {
    case CorruptionRule::drop: return "drop";
    case CorruptionRule::perturb: return "perturb";
    case CorruptionRule::mixed: break;
  }
  return "mixed";
}

}  // namespace

ojson ExperimentConfig::to_json() const {
  ojson j;
  ojson d;
  if (samples) d["samples"] = samples->string();
  if (schema) d["schema"] = schema->string();
  if (!samples)
    d["synthetic"] = {{"samples", synthetic.samples},
                      {"clusters", synthetic.clusters},
                      {"seed", synthetic.seed},
                      {"cluster_weights", synthetic.cluster_weights},
                      {"topic_vocabulary", synthetic.topic_vocabulary},
                      {"topic_words", synthetic.topic_words},
                      {"common_words", synthetic.common_words},
                      {"templates", synthetic.templates},
                      {"mutation", synthetic.mutation}};
  j["dataset"] = d;
  if (template_path) j["template"] = template_path->string();
  j["strategies"] = strategies;
  j["pool_sizes"] = pools.to_string();
  j["shots"] = shots;
  j["runs"] = runs;
  j["seeds"] = seeds;
  j["orders"] = orders;
  j["proportions"] = ojson::array();
  for (const auto& p : proportions) j["proportions"].push_back(proportion_string(p));
  j["annotator"] = {{"kind", annotator.kind}};
  if (annotator.kind == "sim") {
    j["annotator"]["base_accuracy"] = annotator.sim.base_accuracy;
    j["annotator"]["similarity_gain"] = annotator.sim.similarity_gain;
    j["annotator"]["seed"] = annotator.sim.seed;
    j["annotator"]["corruption"] = corruption_name(annotator.sim.corruption);
  } else if (annotator.kind == "live") {
    const auto& l = annotator.live;
    j["annotator"]["endpoint"] = l.endpoint;
    j["annotator"]["model"] = l.model;
    j["annotator"]["temperature"] = l.temperature;
    if (l.max_tokens) j["annotator"]["max_tokens"] = *l.max_tokens;
    j["annotator"]["max_attempts"] = l.retry.max_attempts;
    j["annotator"]["timeout_ms"] = l.timeout.count();
    j["annotator"]["credential_env"] = l.credential_env;
    j["annotator"]["logprobs"] = l.request_logprobs;
  } else {
    j["annotator"]["path"] = annotator.replay.string();
  }
  j["bm25"] = {{"k1", bm25.k1}, {"b", bm25.b}};
  j["threshold"] = threshold;
  j["max_in_flight"] = max_in_flight;
  j["aggregation"] = aggregation == Aggregation::pooled ? "pooled" : "mean_of_means";
  return j;
}

void ExperimentConfig::validate(std::size_t corpus_size) const {
  if (strategies.empty()) throw std::invalid_argument("no strategies configured");
  for (const auto& s : strategies)
    if (!kStrategies.count(s)) throw std::invalid_argument("unknown strategy '" + s + "'");
  const auto sizes = pools.sizes();
  if (sizes.back() > corpus_size)
    throw std::invalid_argument("pool size " + std::to_string(sizes.back()) + " exceeds the corpus size " +
                                std::to_string(corpus_size));
  if (shots.empty()) throw std::invalid_argument("no shot counts configured");
  for (auto k : shots)
    if (k < 1) throw std::invalid_argument("shots must be >= 1");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  bool stochastic = false;
  for (const auto& s : strategies) stochastic |= is_stochastic(s);
  if (stochastic && seeds.size() < runs)
    throw std::invalid_argument("need " + std::to_string(runs) + " seeds, got " + std::to_string(seeds.size()));
  if (orders.empty() || proportions.empty()) throw std::invalid_argument("orders and proportions must be non-empty");
  for (const auto& o : orders) parse_order(o);
  if (sizes.front() < 3 && std::count(strategies.begin(), strategies.end(), "allabel"))
    throw std::invalid_argument("allabel needs pool sizes of at least 3");
  if (!(threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (annotator.kind != "sim" && annotator.kind != "live" && annotator.kind != "replay")
    throw std::invalid_argument("unknown annotator kind '" + annotator.kind + "'");
}

const AggregateRow* ResultTable::find(const std::string& strategy, std::size_t pool_size, std::size_t shots) const {
  for (const auto& a : aggregates)
    if (a.strategy == strategy && a.pool_size == pool_size && a.shots == shots) return &a;
  return nullptr;
}

CellResult run_cell(const Dataset& dataset, const SimilarityMatrix& matrix, std::span<const std::string> pool,
                    std::size_t shots, Annotator& annotator, const PromptTemplate& tmpl, std::size_t max_in_flight,
                    Aggregation aggregation) {
  std::vector<AnnotationRequest> requests;
  requests.reserve(dataset.size());
  for (const auto& s : dataset.samples()) {
    const auto retrieval = retrieve_kshots(matrix, s.id, pool, shots);
    auto demos = make_demonstrations(retrieval, dataset, dataset.gold());
    std::string prompt = assemble_prompt(tmpl, demos, s.text, dataset.schema());
    requests.push_back({s.id, std::move(prompt), std::move(demos)});
  }
  const auto outcomes = annotate_all(annotator, requests, max_in_flight);

  CellResult cell;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& id = requests[i].sample_id;
    Annotations ann;
    if (outcomes[i].completion) {
      try {
        ann = parse_output(outcomes[i].completion->text, dataset.schema()).annotations;
      } catch (const ParseError&) {
        ann = complete_annotations({}, dataset.schema());
      }
    } else {
      ++cell.failures;
      ann = complete_annotations({}, dataset.schema());
    }
    cell.predictions[id] = {id, std::move(ann)};
  }
  cell.report = score(dataset, cell.predictions, {{}, aggregation});
  return cell;
}

namespace {

struct Variant {
  std::string strategy;
  std::string order;
  std::string proportion;
  std::array<unsigned, 3> parts{};
};

double stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

ResultTable run_sweep(const Dataset& dataset, const ExperimentConfig& config, Annotator& annotator, ResultsLog* log,
                      Progress progress) {
  config.validate(dataset.size());
  auto say = [&](const std::string& line) {
    if (progress) progress(line);
  };

  const auto matrix = normalize(build_matrix(dataset, Bm25Backend(dataset, config.bm25)));
  const PromptTemplate tmpl = config.template_path ? PromptTemplate::load(*config.template_path).instantiate(dataset.schema())
                                                   : PromptTemplate::default_for(dataset.schema());
  CachedAnnotator cached(annotator, log, &dataset.schema());
  const auto all_ids = dataset.ids();

  ResultTable table;
  table.corpus_size = dataset.size();
  table.threshold = config.threshold;
  for (auto k : config.shots) {
    const auto cell = run_cell(dataset, matrix, all_ids, k, cached, tmpl, config.max_in_flight, config.aggregation);
    if (cell.failures) say("reference " + std::to_string(k) + "-shot: " + std::to_string(cell.failures) + " failures");
    table.reference.emplace_back(k, cell.report.dataset_f1);
    say("reference " + std::to_string(k) + "-shot F1 " + std::to_string(cell.report.dataset_f1));
  }

  std::vector<Variant> variants;
  for (const auto& s : config.strategies) {
    if (s == "allabel") {
      for (const auto& o : config.orders)
        for (const auto& p : config.proportions) variants.push_back({s, to_string(parse_order(o)), proportion_string(p), p});
    } else {
      variants.push_back({s, "", "", {}});
    }
  }

  std::vector<std::string> perplexity_order;
  const auto pool_sizes = config.pools.sizes();
  for (const auto& v : variants) {
    if (v.strategy == "perplexity" && perplexity_order.empty()) {
      say("perplexity: zero-shot pass over " + std::to_string(dataset.size()) + " samples");
      perplexity_order = perplexity_select(dataset, dataset.size(), cached, tmpl, config.max_in_flight);
    }
    for (auto k : config.shots) {
      for (auto m : pool_sizes) {
        std::optional<ResultRow> fixed;  // deterministic strategies are computed once per cell
        for (std::size_t run = 1; run <= config.runs; ++run) {
          if (fixed) {
            ResultRow r = *fixed;
            r.run = run;
            table.rows.push_back(std::move(r));
            continue;
          }
          ResultRow row;
          row.strategy = v.strategy;
          row.order = v.order;
          row.proportion = v.proportion;
          row.pool_size = m;
          row.shots = k;
          row.run = run;
          std::vector<std::string> pool;
          if (v.strategy == "allabel") {
            SelectConfig sc;
            sc.order = parse_order(v.order);
            sc.proportion = v.parts;
            sc.k = k;
            const auto sel = allabel_select(dataset, matrix, m, sc);
            pool = sel.selected();
            row.stage_sizes = sel.budget.stage_sizes;
          } else if (v.strategy == "random") {
            row.seed = config.seeds[run - 1];
            pool = random_select(dataset, m, *row.seed);
          } else if (v.strategy == "coreset_cold") {
            row.seed = config.seeds[run - 1];
            pool = coldstart_coreset(matrix, m, *row.seed);
          } else {
            pool.assign(perplexity_order.begin(), perplexity_order.begin() + static_cast<std::ptrdiff_t>(m));
          }
          const auto cell = run_cell(dataset, matrix, pool, k, cached, tmpl, config.max_in_flight, config.aggregation);
          row.f1 = cell.report.dataset_f1;
          row.failures = cell.failures;
          say(v.strategy + (v.order.empty() ? "" : " " + v.order + " " + v.proportion) + " M=" + std::to_string(m) +
              " k=" + std::to_string(k) + " run " + std::to_string(run) + ": F1 " + std::to_string(row.f1) +
              (cell.failures ? " (" + std::to_string(cell.failures) + " failures)" : ""));
          if (!is_stochastic(v.strategy)) fixed = row;
          table.rows.push_back(std::move(row));
        }
      }
    }
  }

  // Aggregate in row order; rows are already grouped by (variant, shots, pool).
  for (std::size_t i = 0; i < table.rows.size();) {
    const auto& first = table.rows[i];
    AggregateRow a{first.strategy, first.order, first.proportion, first.pool_size, first.shots, 0, 0.0, std::nullopt,
                   first.stage_sizes, true};
    std::vector<double> values;
    std::size_t j = i;
    for (; j < table.rows.size(); ++j) {
      const auto& r = table.rows[j];
      if (r.strategy != a.strategy || r.order != a.order || r.proportion != a.proportion || r.pool_size != a.pool_size ||
          r.shots != a.shots)
        break;
      values.push_back(r.f1);
      a.complete = a.complete && r.failures == 0;
    }
    double sum = 0.0;
    for (double x : values) sum += x;
    a.runs = values.size();
    a.mean_f1 = sum / static_cast<double>(values.size());
    if (is_stochastic(a.strategy)) a.stddev_f1 = stddev(values, a.mean_f1);
    table.aggregates.push_back(std::move(a));
    i = j;
  }

  for (const auto& v : variants) {
    for (auto k : config.shots) {
      std::vector<CurvePoint> curve;
      for (const auto& a : table.aggregates)
        if (a.strategy == v.strategy && a.order == v.order && a.proportion == v.proportion && a.shots == k)
          curve.push_back({a.pool_size, a.mean_f1});
      double ref = 0.0;
      for (const auto& [shots, f] : table.reference)
        if (shots == k) ref = f;
      table.convergence.push_back(
          {v.strategy, v.order, v.proportion, k, convergence_fraction(curve, ref, config.threshold, dataset.size())});
    }
  }
  say("annotator calls " + std::to_string(cached.calls()) + ", cache hits " + std::to_string(cached.hits()));
  return table;
}

ResultTable run_ablation(const Dataset& dataset, const std::vector<std::string>& orders,
                         const std::vector<std::array<unsigned, 3>>& proportions, ExperimentConfig config,
                         Annotator& annotator, ResultsLog* log, Progress progress) {
  config.strategies = {"allabel"};
  config.orders = orders;
  config.proportions = proportions;
  return run_sweep(dataset, config, annotator, log, std::move(progress));
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string sizes_string(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) out += (i ? "/" : "") + std::to_string(sizes[i]);
  return out;
}

}  // namespace

std::string table_csv(const ResultTable& table) {
  std::string out = "strategy,order,proportion,pool_size,shots,runs,mean_f1,stddev_f1,stage_sizes,complete\n";
  for (const auto& a : table.aggregates) {
    out += a.strategy + "," + a.order + "," + a.proportion + "," + std::to_string(a.pool_size) + "," +
           std::to_string(a.shots) + "," + std::to_string(a.runs) + "," + fixed6(a.mean_f1) + "," +
           (a.stddev_f1 ? fixed6(*a.stddev_f1) : "") + "," + sizes_string(a.stage_sizes) + "," +
           (a.complete ? "true" : "false") + "\n";
  }
  return out;
}

std::string plot_csv(const ResultTable& table) {
  std::string out = "strategy,order,proportion,pool_size,shots,run,seed,f1\n";
  for (const auto& r : table.rows) {
    out += r.strategy + "," + r.order + "," + r.proportion + "," + std::to_string(r.pool_size) + "," +
           std::to_string(r.shots) + "," + std::to_string(r.run) + "," + (r.seed ? std::to_string(*r.seed) : "") + "," +
           fixed6(r.f1) + "\n";
  }
  return out;
}

ojson table_json(const ResultTable& table) {
  ojson j;
  j["corpus_size"] = table.corpus_size;
  j["threshold"] = table.threshold;
  j["reference"] = ojson::array();
  for (const auto& [k, f] : table.reference) j["reference"].push_back({{"shots", k}, {"f1", f}});
  j["aggregates"] = ojson::array();
  for (const auto& a : table.aggregates) {
    ojson row{{"strategy", a.strategy}};
    if (!a.order.empty()) row["order"] = a.order;
    if (!a.proportion.empty()) row["proportion"] = a.proportion;
    row["pool_size"] = a.pool_size;
    row["shots"] = a.shots;
    row["runs"] = a.runs;
    row["mean_f1"] = a.mean_f1;
    row["stddev_f1"] = a.stddev_f1 ? ojson(*a.stddev_f1) : ojson(nullptr);
    if (!a.stage_sizes.empty()) row["stage_sizes"] = a.stage_sizes;
    row["complete"] = a.complete;
    j["aggregates"].push_back(std::move(row));
  }
  j["convergence"] = ojson::array();
  for (const auto& c : table.convergence) {
    ojson row{{"strategy", c.strategy}};
    if (!c.order.empty()) row["order"] = c.order;
    if (!c.proportion.empty()) row["proportion"] = c.proportion;
    row["shots"] = c.shots;
    row["percent_of_corpus"] = c.percent ? ojson(*c.percent) : ojson(nullptr);
    j["convergence"].push_back(std::move(row));
  }
  j["runs"] = ojson::array();
  for (const auto& r : table.rows) {
    ojson row{{"strategy", r.strategy}};
    if (!r.order.empty()) row["order"] = r.order;
    if (!r.proportion.empty()) row["proportion"] = r.proportion;
    row["pool_size"] = r.pool_size;
    row["shots"] = r.shots;
    row["run"] = r.run;
    if (r.seed) row["seed"] = *r.seed;
    row["f1"] = r.f1;
    row["failures"] = r.failures;
    j["runs"].push_back(std::move(row));
  }
  return j;
}

void emit_report(const ResultTable& table, const std::filesystem::path& dir) {
  if (table.aggregates.empty()) throw std::invalid_argument("nothing to report: the table is empty");
  std::filesystem::create_directories(dir);
  write_file(dir / "table.csv", table_csv(table));
  write_file(dir / "table.json", table_json(table).dump(2) + "\n");
  write_file(dir / "plot.csv", plot_csv(table));
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (config.samples) {
    if (!config.schema) throw SchemaError("dataset.samples needs dataset.schema");
    return load_dataset(*config.samples, *config.schema);
  }
  return make_synthetic(config.synthetic);
}

std::unique_ptr<Annotator> make_annotator(const AnnotatorSpec& spec, const Dataset& dataset) {
  if (spec.kind == "sim") return std::make_unique<SimulatedAnnotator>(spec.sim, dataset.schema(), dataset.gold());
  if (spec.kind == "live") return std::make_unique<ChatAnnotator>(spec.live);
  if (spec.kind == "replay") return std::make_unique<ReplayAnnotator>(spec.replay);
  throw std::invalid_argument("unknown annotator kind '" + spec.kind + "'");
}

}  // namespace allabel
