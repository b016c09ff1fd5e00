// Command-line front end: gen / fit / eval / bench subcommands over the
// library. Flags override config-file fields, which override defaults.
#include "psidag/psidag.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <map>

using namespace psidag;

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) {
    return 2;
  }
  if (dynamic_cast<const DivergenceError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const std::domain_error*>(&e) != nullptr) return 3;
  return 1;
}

// Experiment flags shared by gen, fit and bench. Every flag that the user
// actually passed is injected into the config JSON before resolution, so
// precedence is flags > file > defaults.
struct CommonFlags {
  std::string config;
  std::uint64_t master_seed = 0;
  int d = 10;
  std::string model = "ER";
  int k = 2;
  std::uint64_t graph_seed = 0;
  std::string noise = "gaussian";
  double scale = 1.0;
  std::int64_t n_train = 5000;
  std::int64_t n_valid = 10000;
  std::string mode = "fixed";
  std::int64_t outer = 25;
  std::int64_t tau1 = 0;
  std::int64_t tau2 = 0;
  double threshold = 0.3;
  bool weighted = false;
  std::string stop = "auto";
  std::int64_t batch = 64;
  std::string schedule = "invsqrt";
  double h0 = 0.0;
  bool no_averaging = false;
  double l1 = 0.0;
  std::string out;

  std::map<std::string, CLI::Option*> opt;

  void add_to(CLI::App& cmd) {
    opt["config"] = cmd.add_option("--config", config, "JSON config file");
    opt["seed"] = cmd.add_option("--seed", master_seed, "master seed");
    opt["d"] = cmd.add_option("--d", d, "vertex count");
    opt["model"] = cmd.add_option("--model", model, "graph model (ER|SF)");
    opt["k"] = cmd.add_option("--k", k, "edge density multiplier");
    opt["graph-seed"] = cmd.add_option("--graph-seed", graph_seed,
                                       "explicit graph stream seed");
    opt["noise"] = cmd.add_option("--noise", noise,
                                  "noise kind (gaussian|exponential|gumbel)");
    opt["scale"] = cmd.add_option("--scale", scale, "noise scale");
    opt["n-train"] = cmd.add_option("--n-train", n_train, "training samples");
    opt["n-valid"] = cmd.add_option("--n-valid", n_valid, "validation samples");
    opt["mode"] = cmd.add_option("--mode", mode, "data mode (fixed|streaming)");
    opt["K"] = cmd.add_option("--K", outer, "outer iteration cap");
    opt["tau1"] = cmd.add_option("--tau1", tau1, "unconstrained steps per round");
    opt["tau2"] = cmd.add_option("--tau2", tau2, "masked steps per round");
    opt["threshold"] = cmd.add_option("--threshold", threshold,
                                      "final edge threshold");
    opt["weighted"] = cmd.add_flag("--weighted", weighted,
                                   "weighted ordering projection");
    opt["stop"] = cmd.add_option("--stop", stop,
                                 "stop rule (auto|relative|max_steps)");
    opt["batch"] = cmd.add_option("--batch", batch, "minibatch size");
    opt["schedule"] = cmd.add_option("--schedule", schedule,
                                     "step schedule (constant|invsqrt|polyak)");
    opt["h0"] = cmd.add_option("--h0", h0, "base step size (default: auto)");
    opt["no-averaging"] = cmd.add_flag("--no-averaging", no_averaging,
                                       "return the last iterate, not the tail average");
    opt["l1"] = cmd.add_option("--l1", l1, "l1 shrinkage strength");
    opt["out"] = cmd.add_option("--out", out, "output directory");
  }

  bool given(const std::string& name) const { return opt.at(name)->count() > 0; }

  ExperimentConfig resolve() const {
    json j = config.empty() ? json::object() : read_json(config);
    if (given("seed")) j["master_seed"] = master_seed;
    if (given("d")) j["graph"]["d"] = d;
    if (given("model")) j["graph"]["model"] = model;
    if (given("k")) j["graph"]["k"] = k;
    if (given("graph-seed")) j["graph"]["seed"] = graph_seed;
    if (given("noise")) j["noise"]["kind"] = noise;
    if (given("scale")) j["noise"]["scale"] = scale;
    if (given("n-train")) j["data"]["n_train"] = n_train;
    if (given("n-valid")) j["data"]["n_valid"] = n_valid;
    if (given("mode")) j["data"]["mode"] = mode;
    if (given("K")) j["psidag"]["outer_iterations"] = outer;
    if (given("tau1")) j["psidag"]["tau1"] = tau1;
    if (given("tau2")) j["psidag"]["tau2"] = tau2;
    if (given("threshold")) j["psidag"]["threshold"] = threshold;
    if (given("weighted")) j["psidag"]["use_weighted_projection"] = weighted;
    if (given("stop")) j["psidag"]["stop"] = stop;
    if (given("batch")) j["psidag"]["sgd"]["batch_size"] = batch;
    if (given("schedule")) j["psidag"]["sgd"]["schedule"] = schedule;
    if (given("h0")) j["psidag"]["sgd"]["h0"] = h0;
    if (given("no-averaging")) j["psidag"]["sgd"]["averaging"] = !no_averaging;
    if (given("l1")) j["psidag"]["sgd"]["l1"] = l1;

    ExperimentConfig cfg = config_from_json(j);
    if (given("out")) {
      cfg.output_dir = out;
    } else if (!j.contains("output_dir")) {
      if (const char* env = std::getenv("PSIDAG_OUT"); env != nullptr && *env) {
        cfg.output_dir = env;
      }
    }
    return cfg;
  }
};

int run_gen(const CommonFlags& flags) {
  ExperimentConfig cfg = flags.resolve();
  GenResult res = cmd_gen(cfg);
  std::printf("gen: %s d=%d k=%d edges=%lld -> %s%s\n",
              cfg.graph.model == GraphModel::ER ? "ER" : "SF", cfg.graph.d,
              cfg.graph.k, static_cast<long long>(res.edges),
              cfg.output_dir.c_str(),
              cfg.mode == SampleMode::Fixed ? " (truth.csv, data.csv, config.resolved.json)"
                                            : " (truth.csv, source.json, config.resolved.json)");
  return 0;
}

int run_fit(const CommonFlags& flags, const std::string& data_csv,
            const std::string& truth_csv, const std::string& fixed_order,
            std::uint64_t order_seed) {
  ExperimentConfig cfg = flags.resolve();
  FitOptions opt;
  opt.data_csv = data_csv;
  opt.truth_csv = truth_csv;
  opt.order_seed = order_seed;
  if (fixed_order == "true") {
    opt.order = FitOptions::Order::TrueOrder;
  } else if (fixed_order == "random") {
    opt.order = FitOptions::Order::RandomOrder;
  } else if (!fixed_order.empty()) {
    throw std::invalid_argument("--fixed-order must be 'true' or 'random'");
  }

  FitResult res = cmd_fit(cfg, opt);
  const auto& rep = res.report;
  std::string metric_note;
  if (rep.metrics) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), " shd=%lld tpr=%.3f fpr=%.3f",
                  static_cast<long long>(rep.metrics->shd), rep.metrics->tpr,
                  rep.metrics->fpr);
    metric_note = buf;
  }
  std::printf("fit: rounds=%zu grad_evals=%lld edges=%lld%s -> %s\n",
              rep.outer.size(), static_cast<long long>(rep.totals.grad_evals),
              static_cast<long long>(edge_count(support(rep.W_post))),
              metric_note.c_str(), cfg.output_dir.c_str());
  return 0;
}

int run_eval(const std::string& pred, const std::string& truth, int d,
             const std::string& out) {
  StructureMetrics m = cmd_eval(pred, truth, d, out);
  std::printf("eval: shd=%lld tpr=%.3f fpr=%.3f pred_edges=%lld true_edges=%lld\n",
              static_cast<long long>(m.shd), m.tpr, m.fpr,
              static_cast<long long>(m.predicted_edges),
              static_cast<long long>(m.true_edges));
  return 0;
}

int run_bench(const CommonFlags& flags, const std::vector<int>& dims,
              const std::vector<std::string>& models,
              const std::vector<int>& ks,
              const std::vector<std::string>& noises, int seeds, int jobs,
              const std::string& out_file) {
  BenchSpec spec;
  spec.base = flags.resolve();
  if (!dims.empty()) spec.dims = dims;
  if (!ks.empty()) spec.ks = ks;
  spec.models.clear();
  for (const auto& m : models.empty() ? std::vector<std::string>{"ER"} : models) {
    spec.models.push_back(detail::model_from_name(m));
  }
  spec.noises.clear();
  for (const auto& n :
       noises.empty() ? std::vector<std::string>{"gaussian"} : noises) {
    spec.noises.push_back(noise_kind_from_name(n));
  }
  spec.seeds = seeds;
  spec.jobs = jobs;

  auto rows = cmd_bench(spec, out_file);
  std::size_t failed = 0;
  for (const auto& row : rows) failed += row.ok ? 0 : 1;
  std::printf("bench: %zu cells (%zu failed) -> %s\n", rows.size(), failed,
              out_file.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear DAG structure learning via stochastic approximation"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic experiment");
  gen_flags.add_to(*gen);

  CommonFlags fit_flags;
  std::string fit_data, fit_truth, fit_fixed_order;
  std::uint64_t fit_order_seed = 0;
  CLI::App* fit = app.add_subcommand("fit", "learn a DAG from data");
  fit_flags.add_to(*fit);
  fit->add_option("--data", fit_data, "fit this CSV dataset instead of simulating");
  fit->add_option("--truth", fit_truth, "ground-truth edge list for --data");
  fit->add_option("--fixed-order", fit_fixed_order,
                  "skip projection; masked SGD under the true|random ordering");
  fit->add_option("--order-seed", fit_order_seed, "seed for --fixed-order random");

  std::string eval_pred, eval_truth, eval_out;
  int eval_d = 0;
  CLI::App* eval = app.add_subcommand("eval", "score two edge-list CSVs");
  eval->add_option("--pred", eval_pred, "predicted edge list")->required();
  eval->add_option("--truth", eval_truth, "ground-truth edge list")->required();
  eval->add_option("--d", eval_d, "vertex count override");
  eval->add_option("--out", eval_out, "directory for metrics.json / metrics.csv");

  CommonFlags bench_flags;
  std::vector<int> bench_dims, bench_ks;
  std::vector<std::string> bench_models, bench_noises;
  int bench_seeds = 3, bench_jobs = 1;
  std::string bench_out = "bench.csv";
  CLI::App* bench = app.add_subcommand("bench", "run an experiment matrix");
  bench_flags.add_to(*bench);
  bench->add_option("--dims", bench_dims, "vertex counts")->delimiter(',');
  bench->add_option("--ks", bench_ks, "density multipliers")->delimiter(',');
  bench->add_option("--models", bench_models, "graph models")->delimiter(',');
  bench->add_option("--noises", bench_noises, "noise kinds")->delimiter(',');
  bench->add_option("--seeds", bench_seeds, "seeds per cell");
  bench->add_option("--jobs", bench_jobs, "parallel cells");
  bench->add_option("--out-file", bench_out, "aggregate CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_gen(gen_flags);
    if (fit->parsed()) {
      return run_fit(fit_flags, fit_data, fit_truth, fit_fixed_order,
                     fit_order_seed);
    }
    if (eval->parsed()) return run_eval(eval_pred, eval_truth, eval_d, eval_out);
    if (bench->parsed()) {
      return run_bench(bench_flags, bench_dims, bench_models, bench_ks,
                       bench_noises, bench_seeds, bench_jobs, bench_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 1;
}
