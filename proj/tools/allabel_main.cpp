// allabel command-line front end. Machine-readable JSON summaries go to
// stdout, progress and warnings to stderr.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "allabel/annotator.hpp"
#include "allabel/chat_client.hpp"
#include "allabel/corpus.hpp"
#include "allabel/error.hpp"
#include "allabel/evaluation.hpp"
#include "allabel/harness.hpp"
#include "allabel/matrix_io.hpp"
#include "allabel/prompt.hpp"
#include "allabel/results_log.hpp"
#include "allabel/selection.hpp"
#include "allabel/similarity.hpp"
#include "allabel/simulator.hpp"
#include "allabel/synthetic.hpp"
#include "allabel/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace allabel;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const ojson& summary) { std::cout << summary.dump() << std::endl; }
void warn(const std::string& line) { std::cerr << "allabel: " << line << '\n'; }

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

bool is_json_path(const fs::path& p) { return p.extension() == ".json"; }

SimilarityMatrix read_matrix(const fs::path& p) {
  require_file(p, "matrix file");
  if (!is_json_path(p)) return load_matrix(p);
  try {
    return matrix_from_json(nlohmann::json::parse(read_file(p)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.string(), e.what());
  }
}

void write_matrix(const SimilarityMatrix& m, const fs::path& p) {
  if (is_json_path(p))
    write_file(p, matrix_to_json(m).dump() + "\n");
  else
    save_matrix(m, p);
}

Dataset read_dataset(const fs::path& input, const fs::path& schema) {
  require_file(input, "input file");
  require_file(schema, "schema file");
  return load_dataset(input, schema);
}

// Id-only dataset in matrix order, for strategies that never read text.
Dataset dataset_from_matrix(const SimilarityMatrix& m) {
  std::vector<Sample> samples;
  for (const auto& id : m.row_ids()) samples.push_back({id, "", std::nullopt});
  return Dataset(DatasetSchema{}, std::move(samples));
}

// --- annotator options shared by select (perplexity) and annotate ---------

struct AnnotatorOptions {
  std::string kind = "sim";
  std::string endpoint;
  std::string model;
  std::string replay;
  std::string gold;
  double sim_accuracy = 0.3;
  double sim_gain = 0.6;
  std::uint64_t sim_seed = 11;
  std::size_t max_in_flight = 4;

  void attach(CLI::App* cmd) {
    cmd->add_option("--annotator", kind, "Annotator backend")->check(CLI::IsMember({"live", "sim", "replay"}));
    cmd->add_option("--endpoint", endpoint, "Chat-completion URL (live)");
    cmd->add_option("--model", model, "Model name (live)");
    cmd->add_option("--replay", replay, "Results log to replay (replay)");
    cmd->add_option("--gold", gold, "Gold annotations for the simulator (defaults to inline labels)");
    cmd->add_option("--sim-accuracy", sim_accuracy, "Simulator base accuracy")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--sim-gain", sim_gain, "Simulator similarity gain")->check(CLI::NonNegativeNumber);
    cmd->add_option("--sim-seed", sim_seed, "Simulator noise seed");
    cmd->add_option("--max-in-flight", max_in_flight, "Concurrent annotator requests")->check(CLI::PositiveNumber);
  }

  std::unique_ptr<Annotator> make(const Dataset& dataset) const {
    if (kind == "sim") {
      SimulatedAnnotatorModel m;
      m.base_accuracy = sim_accuracy;
      m.similarity_gain = sim_gain;
      m.seed = sim_seed;
      AnnotationMap g = dataset.gold();
      if (!gold.empty()) {
        require_file(gold, "gold file");
        g = load_annotations(gold, dataset.schema());
      }
      if (g.empty()) throw UsageError("the sim annotator needs gold labels (--gold or inline annotations)");
      return std::make_unique<SimulatedAnnotator>(m, dataset.schema(), std::move(g));
    }
    if (kind == "replay") {
      if (replay.empty()) throw UsageError("--annotator replay needs --replay");
      return std::make_unique<ReplayAnnotator>(replay);
    }
    AnnotatorConfig c;
    if (!endpoint.empty()) c.endpoint = endpoint;
    if (!model.empty()) c.model = model;
    c.max_in_flight = max_in_flight;
    return std::make_unique<ChatAnnotator>(c, nullptr, [](const std::string& l) { std::cerr << l << '\n'; });
  }
};

PromptTemplate read_template(const std::string& path, const DatasetSchema& schema) {
  if (path.empty()) return PromptTemplate::default_for(schema);
  require_file(path, "template file");
  return PromptTemplate::load(path).instantiate(schema);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"allabel: active selection of samples to label for in-context entity extraction"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // similarity
  auto* sim = app.add_subcommand("similarity", "Build the pairwise similarity matrix");
  std::string sim_input, sim_schema, sim_output, sim_backend = "bm25", sim_vectors;
  double k1 = 1.5, b = 0.75;
  bool sim_raw = false, sim_serial = false;
  sim->add_option("--input", sim_input, "Samples (JSON lines)")->required();
  sim->add_option("--schema", sim_schema, "Entity schema (JSON)")->required();
  sim->add_option("--output", sim_output, "Matrix file (.json for JSON, anything else binary)")->required();
  sim->add_option("--backend", sim_backend, "Scoring backend")->check(CLI::IsMember({"bm25", "dense"}));
  sim->add_option("--vectors", sim_vectors, "Embedding file for the dense backend");
  sim->add_option("--k1", k1, "BM25 k1")->check(CLI::NonNegativeNumber);
  sim->add_option("--b", b, "BM25 b")->check(CLI::Range(0.0, 1.0));
  sim->add_flag("--raw", sim_raw, "Skip min-max normalization");
  sim->add_flag("--serial", sim_serial, "Single-threaded construction");

  // select
  auto* sel = app.add_subcommand("select", "Choose the samples to label");
  std::string sel_matrix, sel_input, sel_schema, sel_output, sel_order = "d-s-u", sel_prop = "1:3:1",
                                                             sel_strategy = "allabel", sel_template;
  std::size_t budget = 0, sel_k = 3;
  std::optional<std::uint64_t> sel_seed;
  AnnotatorOptions sel_ann;
  sel->add_option("--matrix", sel_matrix, "Normalized similarity matrix")->required();
  sel->add_option("--budget,-M", budget, "Number of samples to select")->required();
  sel->add_option("--output", sel_output, "Selection file")->required();
  sel->add_option("--strategy", sel_strategy, "Selection strategy")
      ->check(CLI::IsMember({"allabel", "random", "coreset", "coreset_cold", "perplexity"}));
  sel->add_option("--order", sel_order, "Stage order (d-s-u, s-d-u, s-u-d)");
  sel->add_option("--proportion", sel_prop, "Stage proportion a:b:c");
  sel->add_option("--shots,-k", sel_k, "k used by the sum_rank score")->check(CLI::PositiveNumber);
  sel->add_option("--seed", sel_seed, "Seed for stochastic strategies");
  sel->add_option("--input", sel_input, "Samples (needed for perplexity)");
  sel->add_option("--schema", sel_schema, "Entity schema (needed for perplexity)");
  sel->add_option("--template", sel_template, "Prompt template for the zero-shot pass");
  sel_ann.attach(sel);

  // annotate
  auto* ann = app.add_subcommand("annotate", "Label every sample with k-shot prompts from the selected pool");
  std::string ann_input, ann_schema, ann_matrix, ann_selection, ann_template, ann_output, ann_log;
  std::size_t shots = 3;
  AnnotatorOptions ann_opts;
  ann->add_option("--input", ann_input, "Samples (JSON lines)")->required();
  ann->add_option("--schema", ann_schema, "Entity schema (JSON)")->required();
  ann->add_option("--selection", ann_selection, "Selection file")->required();
  ann->add_option("--output", ann_output, "Predictions (JSON lines)")->required();
  ann->add_option("--matrix", ann_matrix, "Similarity matrix (built with BM25 when omitted)");
  ann->add_option("--shots,-k", shots, "Demonstrations per prompt")->check(CLI::PositiveNumber);
  ann->add_option("--template", ann_template, "Prompt template file");
  ann->add_option("--log", ann_log, "Results log (default: <output>.log.jsonl)");
  ann_opts.attach(ann);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against gold labels");
  std::string ev_gold, ev_pred, ev_schema, ev_report, ev_input, ev_exclude, ev_agg = "mean_of_means";
  ev->add_option("--gold", ev_gold, "Gold annotations (JSON lines); defaults to inline labels of --input");
  ev->add_option("--pred", ev_pred, "Predictions (JSON lines)")->required();
  ev->add_option("--schema", ev_schema, "Entity schema (JSON)")->required();
  ev->add_option("--input", ev_input, "Samples, for dataset order and inline gold");
  ev->add_option("--report", ev_report, "Report file (JSON)");
  ev->add_option("--exclude", ev_exclude, "Selection file whose ids are left out of scoring");
  ev->add_option("--aggregation", ev_agg, "F1 aggregation")->check(CLI::IsMember({"mean_of_means", "pooled"}));

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Run a strategy sweep and write report tables");
  std::string bench_config, bench_dir;
  bench->add_option("--config", bench_config, "Experiment config (JSON); built-in defaults when omitted");
  bench->add_option("--run-dir", bench_dir, "Output directory (default runs/<timestamp>); resumes if it has a log");

  // synth
  auto* syn = app.add_subcommand("synth", "Write the bundled clustered synthetic corpus");
  std::string syn_output, syn_schema;
  SyntheticConfig syn_cfg;
  syn->add_option("--output", syn_output, "Samples with inline gold (JSON lines)")->required();
  syn->add_option("--schema-out", syn_schema, "Where to write the schema")->required();
  syn->add_option("--samples", syn_cfg.samples, "Corpus size")->check(CLI::Range(2, 1000000));
  syn->add_option("--clusters", syn_cfg.clusters, "Cluster count")->check(CLI::PositiveNumber);
  syn->add_option("--seed", syn_cfg.seed, "Generator seed");

  // dedup
  auto* dd = app.add_subcommand("dedup", "Drop samples that share a source document");
  std::string dd_input, dd_schema, dd_output, dd_mode = "keep_first";
  dd->add_option("--input", dd_input, "Samples (JSON lines)")->required();
  dd->add_option("--schema", dd_schema, "Entity schema (JSON)")->required();
  dd->add_option("--output", dd_output, "Filtered samples")->required();
  dd->add_option("--mode", dd_mode, "drop_shared or keep_first")->check(CLI::IsMember({"drop_shared", "keep_first"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) {
      if (sim_backend == "dense" && sim_vectors.empty()) throw UsageError("--backend dense needs --vectors");
      if (sim_backend == "bm25" && !sim_vectors.empty()) throw UsageError("--vectors only applies to --backend dense");
      const Dataset dataset = read_dataset(sim_input, sim_schema);
      std::unique_ptr<ScoringBackend> backend;
      if (sim_backend == "dense") {
        require_file(sim_vectors, "vector file");
        backend = std::make_unique<DenseBackend>(DenseBackend::load(sim_vectors, dataset));
      } else {
        backend = std::make_unique<Bm25Backend>(dataset, Bm25Params{k1, b});
      }
      auto m = build_matrix(dataset, *backend, sim_serial ? Exec::serial : Exec::parallel);
      if (!sim_raw) m = normalize(m);
      write_matrix(m, sim_output);
      emit({{"command", "similarity"}, {"backend", backend->name()}, {"rows", m.rows()}, {"cols", m.cols()},
            {"normalized", m.normalized()}, {"output", sim_output}});
      return 0;
    }

    if (*sel) {
      const bool stochastic = sel_strategy == "random" || sel_strategy == "coreset" || sel_strategy == "coreset_cold";
      if (!stochastic && sel_seed) throw UsageError("deterministic strategy takes no seed");
      if (stochastic && !sel_seed) throw UsageError("--strategy " + sel_strategy + " needs --seed");
      if (sel_strategy == "perplexity" && (sel_input.empty() || sel_schema.empty()))
        throw UsageError("--strategy perplexity needs --input and --schema");
      StageOrder order;
      std::array<unsigned, 3> prop;
      try {
        order = parse_order(sel_order);
        prop = parse_proportion(sel_prop);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }

      const auto matrix = read_matrix(sel_matrix);
      const Dataset dataset = sel_input.empty() ? dataset_from_matrix(matrix) : read_dataset(sel_input, sel_schema);
      if (budget > dataset.size())
        throw Error("budget " + std::to_string(budget) + " exceeds the " + std::to_string(dataset.size()) + " samples");

      SelectionResult result;
      if (sel_strategy == "allabel") {
        result = allabel_select(dataset, matrix, budget, {order, prop, sel_k, Exec::parallel});
      } else if (sel_strategy == "random") {
        result = single_stage_result("random", random_select(dataset, budget, *sel_seed), sel_seed);
      } else if (sel_strategy == "perplexity") {
        auto annotator = sel_ann.make(dataset);
        const auto tmpl = read_template(sel_template, dataset.schema());
        result = single_stage_result("perplexity",
                                     perplexity_select(dataset, budget, *annotator, tmpl, sel_ann.max_in_flight));
      } else {
        result = single_stage_result("coreset_cold", coldstart_coreset(matrix, budget, *sel_seed), sel_seed);
      }
      save_selection(result, sel_output);
      ojson stages = ojson::array();
      for (const auto& s : result.stages) stages.push_back({{"name", s.name}, {"size", s.ids.size()}});
      emit({{"command", "select"}, {"strategy", result.strategy}, {"budget", budget}, {"stages", stages},
            {"output", sel_output}});
      return 0;
    }

    if (*ann) {
      const Dataset dataset = read_dataset(ann_input, ann_schema);
      require_file(ann_selection, "selection file");
      const auto selection = load_selection(ann_selection);
      const auto pool = selection.selected();
      const auto matrix = ann_matrix.empty() ? normalize(build_matrix(dataset, Bm25Backend(dataset)))
                                             : read_matrix(ann_matrix);
      const auto tmpl = read_template(ann_template, dataset.schema());

      AnnotationMap labels = dataset.gold();
      if (!ann_opts.gold.empty()) {
        require_file(ann_opts.gold, "gold file");
        labels = load_annotations(ann_opts.gold, dataset.schema());
      }
      for (const auto& id : pool)
        if (!labels.count(id)) throw Error("selected sample '" + id + "' has no label");
      if (shots + 1 > pool.size())
        warn("pool of " + std::to_string(pool.size()) + " holds fewer than " + std::to_string(shots) +
             " candidates for some queries; using all available");

      auto annotator = ann_opts.make(with_gold(dataset, labels));
      ResultsLog log(ann_log.empty() ? fs::path(ann_output + ".log.jsonl") : fs::path(ann_log));
      CachedAnnotator cached(*annotator, &log, &dataset.schema());

      std::vector<AnnotationRequest> requests;
      for (const auto& s : dataset.samples()) {
        auto demos = make_demonstrations(retrieve_kshots(matrix, s.id, pool, shots), dataset, labels);
        auto prompt = assemble_prompt(tmpl, demos, s.text, dataset.schema());
        requests.push_back({s.id, std::move(prompt), std::move(demos)});
      }
      const auto outcomes = annotate_all(cached, requests, ann_opts.max_in_flight);
      AnnotationMap predictions;
      std::size_t failed = 0, violations = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& id = requests[i].sample_id;
        if (!outcomes[i].completion) {
          ++failed;
          warn(id + ": " + outcomes[i].error);
          continue;
        }
        try {
          auto parsed = parse_output(outcomes[i].completion->text, dataset.schema());
          violations += parsed.violations.size();
          predictions[id] = {id, std::move(parsed.annotations)};
        } catch (const ParseError& e) {
          ++failed;
          warn(id + ": " + e.what());
        }
      }
      save_annotations(predictions, dataset, ann_output);
      if (failed) warn(std::to_string(failed) + " samples failed; see " + log.path().string());
      emit({{"command", "annotate"}, {"annotated", predictions.size()}, {"failed", failed}, {"warnings", failed},
            {"schema_violations", violations}, {"annotator_calls", cached.calls()}, {"cache_hits", cached.hits()},
            {"output", ann_output}, {"log", log.path().string()}});
      return 0;
    }

    if (*ev) {
      if (ev_gold.empty() && ev_input.empty()) throw UsageError("evaluate needs --gold or --input with inline labels");
      require_file(ev_schema, "schema file");
      const auto schema = load_schema(ev_schema);
      std::optional<Dataset> base;
      if (!ev_input.empty()) {
        require_file(ev_input, "input file");
        base = load_dataset(ev_input, schema);
      }
      AnnotationMap gold = base ? base->gold() : AnnotationMap{};
      if (!ev_gold.empty()) {
        require_file(ev_gold, "gold file");
        gold = load_annotations(ev_gold, schema);
      }
      require_file(ev_pred, "prediction file");
      const auto predictions = load_annotations(ev_pred, schema);
      if (predictions.empty()) throw Error("prediction file holds no predictions: " + ev_pred);

      std::vector<Sample> samples;
      if (base) {
        samples = base->samples();
      } else {
        for (const auto& [id, a] : gold) samples.push_back({id, "", std::nullopt});
      }
      const Dataset dataset(schema, std::move(samples), std::move(gold));
      ScoreOptions opts;
      opts.aggregation = ev_agg == "pooled" ? Aggregation::pooled : Aggregation::mean_of_means;
      if (!ev_exclude.empty()) {
        require_file(ev_exclude, "selection file");
        for (const auto& id : load_selection(ev_exclude).selected()) opts.exclude.insert(id);
      }
      const auto report = score(dataset, predictions, opts);
      if (!ev_report.empty()) write_file(ev_report, report_to_json(report).dump(2) + "\n");
      ojson types = ojson::object();
      for (const auto& [name, v] : report.type_f1) types[name] = v;
      emit({{"command", "evaluate"}, {"f1", report.dataset_f1}, {"evaluated", report.samples.size()},
            {"types", types}});
      return 0;
    }

    if (*bench) {
      const fs::path dir = bench_dir.empty() ? fs::path("runs") / timestamp() : fs::path(bench_dir);
      ExperimentConfig config;
      if (!bench_config.empty())
        config = ExperimentConfig::load(bench_config);
      else if (fs::exists(dir / "config.json"))
        config = ExperimentConfig::load(dir / "config.json");
      const Dataset dataset = load_experiment_dataset(config);
      config.validate(dataset.size());
      fs::create_directories(dir);
      const bool resuming = fs::exists(dir / "log.jsonl");
      ResultsLog log(dir / "log.jsonl");
      if (resuming) warn("resuming from " + (dir / "log.jsonl").string() + " (" + std::to_string(log.size()) + " entries)");
      write_file(dir / "config.json", config.to_json().dump(2) + "\n");
      auto annotator = make_annotator(config.annotator, dataset);
      const auto table = run_sweep(dataset, config, *annotator, &log, [](const std::string& l) { warn(l); });
      emit_report(table, dir);
      ojson conv = ojson::array();
      for (const auto& c : table.convergence)
        conv.push_back({{"strategy", c.strategy},
                        {"shots", c.shots},
                        {"percent_of_corpus", c.percent ? ojson(*c.percent) : ojson(nullptr)}});
      emit({{"command", "benchmark"}, {"run_dir", dir.string()}, {"rows", table.rows.size()},
            {"aggregates", table.aggregates.size()}, {"convergence", conv}, {"resumed", resuming}});
      return 0;
    }

    if (*syn) {
      const Dataset dataset = make_synthetic(syn_cfg);
      write_file(syn_schema, schema_to_json(dataset.schema()).dump(2) + "\n");
      save_samples(dataset, syn_output);
      emit({{"command", "synth"}, {"samples", dataset.size()}, {"output", syn_output}, {"schema", syn_schema}});
      return 0;
    }

    if (*dd) {
      const Dataset dataset = read_dataset(dd_input, dd_schema);
      const Dataset kept =
          deduplicate_by_doc(dataset, dd_mode == "drop_shared" ? DedupMode::drop_shared : DedupMode::keep_first);
      save_samples(kept, dd_output);
      emit({{"command", "dedup"}, {"input", dataset.size()}, {"kept", kept.size()}, {"output", dd_output}});
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "allabel: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "allabel: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
