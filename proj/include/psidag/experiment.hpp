// Experiment orchestration shared by the CLI: config resolution with derived
// seed streams, and the gen / fit / eval / bench entry points.
#pragma once

#include "psidag/io.hpp"

#include <atomic>
#include <filesystem>
#include <thread>

namespace psidag {

enum class SampleMode { Streaming, Fixed };

// A fully resolved experiment: every seed is concrete, so any artifact can
// be reproduced from the resolved JSON alone.
struct ExperimentConfig {
  std::uint64_t master_seed = 0;
  GraphSpec graph;
  std::uint64_t weights_seed = 0;
  NoiseModel noise;
  std::uint64_t noise_seed = 0;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t validation_seed = 0;
  Eigen::Index n_train = 5000;
  Eigen::Index n_valid = 10000;
  SampleMode mode = SampleMode::Fixed;
  PsiDagConfig psidag;
  std::string stop_kind = "auto";  // auto | relative | max_steps
  std::string output_dir = ".";
};

namespace detail {

inline const char* model_name(GraphModel m) {
  return m == GraphModel::ER ? "ER" : "SF";
}

inline GraphModel model_from_name(const std::string& name) {
  if (name == "ER" || name == "er") return GraphModel::ER;
  if (name == "SF" || name == "sf") return GraphModel::SF;
  throw std::invalid_argument("unknown graph model: " + name);
}

inline const char* schedule_name(StepSchedule s) {
  switch (s) {
    case StepSchedule::Constant:
      return "constant";
    case StepSchedule::InvSqrt:
      return "invsqrt";
    case StepSchedule::AdaptivePolyakBounded:
      return "polyak";
  }
  return "invsqrt";
}

inline StepSchedule schedule_from_name(const std::string& name) {
  if (name == "constant") return StepSchedule::Constant;
  if (name == "invsqrt") return StepSchedule::InvSqrt;
  if (name == "polyak") return StepSchedule::AdaptivePolyakBounded;
  throw std::invalid_argument("unknown schedule: " + name);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

}  // namespace detail

// Applies JSON fields over the built-in defaults, then derives every seed
// that was not given explicitly from the master seed's sub-streams.
inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", 0);

  json graph = j.contains("graph") ? j.at("graph") : json::object();
  cfg.graph.d = detail::get_or<int>(graph, "d", 10);
  cfg.graph.model = detail::model_from_name(
      detail::get_or<std::string>(graph, "model", "ER"));
  cfg.graph.k = detail::get_or<int>(graph, "k", 2);
  cfg.graph.seed = detail::get_or<std::uint64_t>(
      graph, "seed", derive_seed(cfg.master_seed, SeedStream::Graph));
  cfg.weights_seed = detail::get_or<std::uint64_t>(
      j, "weights_seed", derive_seed(cfg.master_seed, SeedStream::Weights));

  json noise = j.contains("noise") ? j.at("noise") : json::object();
  cfg.noise.kind =
      noise_kind_from_name(detail::get_or<std::string>(noise, "kind", "gaussian"));
  cfg.noise.scale = detail::get_or<double>(noise, "scale", 1.0);
  cfg.noise_seed = detail::get_or<std::uint64_t>(
      noise, "seed", derive_seed(cfg.master_seed, SeedStream::Noise));

  json data = j.contains("data") ? j.at("data") : json::object();
  cfg.n_train = detail::get_or<Eigen::Index>(data, "n_train", 5000);
  cfg.n_valid = detail::get_or<Eigen::Index>(data, "n_valid", 10000);
  const std::string mode = detail::get_or<std::string>(data, "mode", "fixed");
  if (mode == "fixed") {
    cfg.mode = SampleMode::Fixed;
  } else if (mode == "streaming") {
    cfg.mode = SampleMode::Streaming;
  } else {
    throw std::invalid_argument("unknown data mode: " + mode);
  }
  cfg.shuffle_seed = detail::get_or<std::uint64_t>(
      data, "shuffle_seed", derive_seed(cfg.master_seed, SeedStream::Shuffle));
  cfg.validation_seed = detail::get_or<std::uint64_t>(
      data, "validation_seed",
      derive_seed(cfg.master_seed, SeedStream::Validation));

  json pd = j.contains("psidag") ? j.at("psidag") : json::object();
  cfg.psidag.outer_iterations =
      detail::get_or<std::int64_t>(pd, "outer_iterations", 25);
  cfg.psidag.use_weighted_projection =
      detail::get_or<bool>(pd, "use_weighted_projection", false);
  cfg.psidag.threshold = detail::get_or<double>(pd, "threshold", 0.3);
  cfg.stop_kind = detail::get_or<std::string>(pd, "stop", "auto");
  if (cfg.stop_kind != "auto" && cfg.stop_kind != "relative" &&
      cfg.stop_kind != "max_steps") {
    throw std::invalid_argument("unknown stop rule: " + cfg.stop_kind);
  }

  json sgd = pd.contains("sgd") ? pd.at("sgd") : json::object();
  cfg.psidag.sgd.batch_size = detail::get_or<Eigen::Index>(sgd, "batch_size", 64);
  cfg.psidag.sgd.schedule = detail::schedule_from_name(
      detail::get_or<std::string>(sgd, "schedule", "invsqrt"));
  if (sgd.contains("h0") && sgd.at("h0").is_number()) {
    cfg.psidag.sgd.h0 = sgd.at("h0").get<double>();
  }
  cfg.psidag.sgd.averaging = detail::get_or<bool>(sgd, "averaging", true);
  cfg.psidag.sgd.l1 = detail::get_or<double>(sgd, "l1", 0.0);
  cfg.psidag.sgd.seed = detail::get_or<std::uint64_t>(
      sgd, "seed", derive_seed(cfg.master_seed, SeedStream::Optimizer));

  // One epoch-equivalent per inner phase unless overridden.
  const std::int64_t epoch = std::max<std::int64_t>(
      1, cfg.n_train / std::max<Eigen::Index>(1, cfg.psidag.sgd.batch_size));
  cfg.psidag.tau1 = detail::get_or<std::int64_t>(pd, "tau1", 0);
  cfg.psidag.tau2 = detail::get_or<std::int64_t>(pd, "tau2", 0);
  if (cfg.psidag.tau1 <= 0) cfg.psidag.tau1 = epoch;
  if (cfg.psidag.tau2 <= 0) cfg.psidag.tau2 = epoch;
  cfg.psidag.epoch_hint = cfg.n_train;

  cfg.output_dir = detail::get_or<std::string>(j, "output_dir", ".");
  return cfg;
}

// Every default and derived seed materialized; feeding this back through
// config_from_json reproduces the configuration exactly.
inline json resolved_json(const ExperimentConfig& cfg) {
  json sgd{{"batch_size", cfg.psidag.sgd.batch_size},
           {"schedule", detail::schedule_name(cfg.psidag.sgd.schedule)},
           {"averaging", cfg.psidag.sgd.averaging},
           {"l1", cfg.psidag.sgd.l1},
           {"seed", cfg.psidag.sgd.seed}};
  sgd["h0"] = cfg.psidag.sgd.h0 > 0.0 ? json(cfg.psidag.sgd.h0) : json("auto");
  return json{
      {"master_seed", cfg.master_seed},
      {"graph",
       {{"d", cfg.graph.d},
        {"model", detail::model_name(cfg.graph.model)},
        {"k", cfg.graph.k},
        {"seed", cfg.graph.seed}}},
      {"weights_seed", cfg.weights_seed},
      {"noise",
       {{"kind", noise_kind_name(cfg.noise.kind)},
        {"scale", cfg.noise.scale},
        {"seed", cfg.noise_seed}}},
      {"data",
       {{"mode", cfg.mode == SampleMode::Fixed ? "fixed" : "streaming"},
        {"n_train", cfg.n_train},
        {"n_valid", cfg.n_valid},
        {"shuffle_seed", cfg.shuffle_seed},
        {"validation_seed", cfg.validation_seed}}},
      {"psidag",
       {{"outer_iterations", cfg.psidag.outer_iterations},
        {"tau1", cfg.psidag.tau1},
        {"tau2", cfg.psidag.tau2},
        {"use_weighted_projection", cfg.psidag.use_weighted_projection},
        {"threshold", cfg.psidag.threshold},
        {"stop", cfg.stop_kind},
        {"sgd", std::move(sgd)}}},
      {"output_dir", cfg.output_dir}};
}

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ParseError("cannot create output dir " + dir);
}

}  // namespace detail

struct GenResult {
  std::string truth_csv;
  std::string data_csv;    // fixed mode only
  std::string source_json; // streaming mode only
  std::string config_json;
  std::int64_t edges = 0;
};

// Writes the ground-truth edge list, the dataset (fixed mode) or a stream
// descriptor (streaming mode), and the resolved configuration.
inline GenResult cmd_gen(const ExperimentConfig& cfg) {
  detail::ensure_dir(cfg.output_dir);
  BinaryDag dag = gen_dag(cfg.graph);
  Matrix W_star = assign_weights(dag, cfg.weights_seed);

  GenResult out;
  out.edges = edge_count(dag.adjacency);
  out.truth_csv = detail::join_path(cfg.output_dir, "truth.csv");
  write_edge_csv(out.truth_csv, W_star);

  if (cfg.mode == SampleMode::Fixed) {
    SampleBatch data =
        simulate_samples(W_star, cfg.noise, cfg.n_train, cfg.noise_seed);
    out.data_csv = detail::join_path(cfg.output_dir, "data.csv");
    write_matrix_csv(out.data_csv, data);
  } else {
    out.source_json = detail::join_path(cfg.output_dir, "source.json");
    write_source_descriptor(out.source_json, out.truth_csv, cfg.noise,
                            cfg.noise_seed);
  }
  out.config_json = detail::join_path(cfg.output_dir, "config.resolved.json");
  write_json(out.config_json, resolved_json(cfg));
  return out;
}

struct FitOptions {
  enum class Order { Learn, TrueOrder, RandomOrder };
  Order order = Order::Learn;
  std::uint64_t order_seed = 0;
  std::string data_csv;   // fit an external dataset instead of simulating
  std::string truth_csv;  // optional ground truth for the external dataset
};

struct FitResult {
  RunReport report;
  std::string west_csv;
  std::string west_bin;
  std::string report_json;
  std::string trace_csv;
};

inline FitResult cmd_fit(const ExperimentConfig& cfg,
                         const FitOptions& opt = {}) {
  detail::ensure_dir(cfg.output_dir);

  std::optional<Matrix> W_star;
  std::optional<SampleSource> source;
  if (!opt.data_csv.empty()) {
    source = load_csv(opt.data_csv, cfg.shuffle_seed);
    if (!opt.truth_csv.empty()) {
      W_star = read_edge_csv(opt.truth_csv, source->dim());
    }
  } else {
    BinaryDag dag = gen_dag(cfg.graph);
    W_star = assign_weights(dag, cfg.weights_seed);
    if (cfg.mode == SampleMode::Fixed) {
      source = SampleSource::fixed(
          simulate_samples(*W_star, cfg.noise, cfg.n_train, cfg.noise_seed),
          cfg.shuffle_seed);
    } else {
      source = SampleSource::streaming(*W_star, cfg.noise, cfg.noise_seed);
    }
  }

  std::optional<TruthInfo> truth;
  if (W_star) {
    truth = TruthInfo{*W_star, simulate_samples(*W_star, cfg.noise, cfg.n_valid,
                                                cfg.validation_seed)};
  }

  PsiDagConfig run_cfg = cfg.psidag;
  if (cfg.stop_kind == "relative" && !truth) {
    throw std::invalid_argument(
        "stop rule 'relative' needs ground truth for the reference loss");
  }
  if (truth && (cfg.stop_kind == "auto" || cfg.stop_kind == "relative")) {
    run_cfg.stop = StopRule::relative(loss(truth->W_star, truth->validation));
  } else {
    run_cfg.stop = StopRule::never();
  }

  FitResult out;
  const TruthInfo* truth_ptr = truth ? &*truth : nullptr;
  switch (opt.order) {
    case FitOptions::Order::Learn:
      out.report = run_psidag(*source, run_cfg, truth_ptr);
      break;
    case FitOptions::Order::TrueOrder: {
      if (!W_star) {
        throw std::invalid_argument("--fixed-order true needs ground truth");
      }
      auto order = is_dag(support(*W_star));
      if (!order) throw std::invalid_argument("ground truth is not acyclic");
      out.report = run_fixed_order(*source, *order, run_cfg, truth_ptr);
      break;
    }
    case FitOptions::Order::RandomOrder: {
      std::vector<int> p(static_cast<int>(source->dim()));
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(i);
      Rng rng(opt.order_seed);
      rng.shuffle(p);
      out.report = run_fixed_order(*source, Ordering(p), run_cfg, truth_ptr);
      break;
    }
  }

  out.west_csv = detail::join_path(cfg.output_dir, "west.csv");
  write_edge_csv(out.west_csv, out.report.W_post);
  out.west_bin = detail::join_path(cfg.output_dir, "west.bin");
  write_dense_bin(out.west_bin, out.report.W_pre);
  out.report_json = detail::join_path(cfg.output_dir, "report.json");
  write_json(out.report_json, report_to_json(out.report));
  out.trace_csv = detail::join_path(cfg.output_dir, "trace.csv");
  write_trace_csv(out.trace_csv, out.report.trace);
  return out;
}

// Metrics between two edge-list CSVs; d is inferred unless given.
inline StructureMetrics cmd_eval(const std::string& pred_csv,
                                 const std::string& truth_csv,
                                 Eigen::Index d = 0,
                                 const std::string& output_dir = "") {
  Matrix pred = read_edge_csv(pred_csv, d);
  Matrix truth = read_edge_csv(truth_csv, d);
  const Eigen::Index dim = std::max(pred.rows(), truth.rows());
  auto grow = [dim](Matrix& m) {
    if (m.rows() < dim) {
      Matrix bigger = Matrix::Zero(dim, dim);
      bigger.topLeftCorner(m.rows(), m.cols()) = m;
      m = std::move(bigger);
    }
  };
  grow(pred);
  grow(truth);
  StructureMetrics m = structural_metrics(support(pred), support(truth));
  if (!output_dir.empty()) {
    detail::ensure_dir(output_dir);
    write_json(detail::join_path(output_dir, "metrics.json"), metrics_to_json(m));
    auto out = detail::open_out(detail::join_path(output_dir, "metrics.csv"));
    out << metrics_csv(m);
  }
  return m;
}

struct BenchSpec {
  std::vector<int> dims{10, 50, 100};
  std::vector<GraphModel> models{GraphModel::ER};
  std::vector<int> ks{2};
  std::vector<NoiseKind> noises{NoiseKind::Gaussian};
  int seeds = 3;
  int jobs = 1;
  ExperimentConfig base;
};

struct BenchRow {
  int d = 0;
  GraphModel model = GraphModel::ER;
  int k = 0;
  NoiseKind noise = NoiseKind::Gaussian;
  int seed = 0;
  double wall_s = 0.0;
  std::int64_t grad_evals = 0;
  double final_loss = 0.0;
  StructureMetrics metrics;
  bool ok = false;
  std::string error;
};

namespace detail {

inline BenchRow run_bench_cell(const BenchSpec& spec, int d, GraphModel model,
                               int k, NoiseKind noise, int seed) {
  BenchRow row;
  row.d = d;
  row.model = model;
  row.k = k;
  row.noise = noise;
  row.seed = seed;
  try {
    ExperimentConfig cfg = spec.base;
    cfg.master_seed = derive_seed(
        spec.base.master_seed,
        splitmix64((static_cast<std::uint64_t>(d) << 32) ^
                   (static_cast<std::uint64_t>(k) << 16) ^
                   (static_cast<std::uint64_t>(model) << 8) ^
                   (static_cast<std::uint64_t>(noise) << 4) ^
                   static_cast<std::uint64_t>(seed)));
    cfg = config_from_json(json{{"master_seed", cfg.master_seed}});
    cfg.graph.d = d;
    cfg.graph.model = model;
    cfg.graph.k = k;
    cfg.graph.seed = derive_seed(cfg.master_seed, SeedStream::Graph);
    cfg.noise.kind = noise;
    cfg.noise.scale = spec.base.noise.scale;
    cfg.n_train = spec.base.n_train;
    cfg.n_valid = spec.base.n_valid;
    cfg.psidag = spec.base.psidag;
    cfg.stop_kind = spec.base.stop_kind;

    BinaryDag dag = gen_dag(cfg.graph);
    Matrix W_star = assign_weights(dag, cfg.weights_seed);
    auto source = SampleSource::fixed(
        simulate_samples(W_star, cfg.noise, cfg.n_train, cfg.noise_seed),
        cfg.shuffle_seed);
    TruthInfo truth{W_star, simulate_samples(W_star, cfg.noise, cfg.n_valid,
                                             cfg.validation_seed)};

    PsiDagConfig run_cfg = cfg.psidag;
    run_cfg.stop = StopRule::relative(loss(W_star, truth.validation));
    RunReport report = run_psidag(source, run_cfg, &truth);

    row.wall_s = report.totals.wall_s;
    row.grad_evals = report.totals.grad_evals;
    row.final_loss = loss(report.W_pre, truth.validation);
    row.metrics = *report.metrics;
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace detail

// Runs the full cell matrix (dims x models x ks x noises x seeds), up to
// `jobs` cells in parallel, and writes one aggregate CSV. A failing cell is
// recorded as status=error without disturbing the rest.
inline std::vector<BenchRow> cmd_bench(const BenchSpec& spec,
                                       const std::string& out_csv) {
  struct Cell {
    int d;
    GraphModel model;
    int k;
    NoiseKind noise;
    int seed;
  };
  std::vector<Cell> cells;
  for (int d : spec.dims) {
    for (GraphModel model : spec.models) {
      for (int k : spec.ks) {
        for (NoiseKind noise : spec.noises) {
          for (int seed = 0; seed < spec.seeds; ++seed) {
            cells.push_back({d, model, k, noise, seed});
          }
        }
      }
    }
  }

  std::vector<BenchRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  const int jobs = std::max(1, spec.jobs);
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& c = cells[i];
      rows[i] = detail::run_bench_cell(spec, c.d, c.model, c.k, c.noise, c.seed);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  auto out = detail::open_out(out_csv);
  out << "d,model,k,noise,seed,wall_s,grad_evals,final_loss,shd,tpr,fpr,status\n";
  for (const BenchRow& row : rows) {
    out << row.d << ',' << detail::model_name(row.model) << ',' << row.k << ','
        << noise_kind_name(row.noise) << ',' << row.seed << ',';
    if (row.ok) {
      out << detail::full_precision(row.wall_s) << ',' << row.grad_evals << ','
          << detail::full_precision(row.final_loss) << ',' << row.metrics.shd
          << ',' << detail::full_precision(row.metrics.tpr) << ','
          << detail::full_precision(row.metrics.fpr) << ",ok\n";
    } else {
      out << ",,,,,,error\n";
    }
  }
  return rows;
}

}  // namespace psidag
