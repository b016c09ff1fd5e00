// File formats: edge-list CSV, per-step trace CSV, dense binary weights,
// metrics and run-report JSON, and streaming-source descriptors.
#pragma once

#include "psidag/driver.hpp"
#include "psidag/semdata.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace psidag {

using json = nlohmann::json;

namespace detail {

inline std::string full_precision(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ParseError("cannot write " + path);
  return out;
}

inline json finite_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

}  // namespace detail

// ---- edge lists: "src,dst,weight", one edge per row, full precision ----

inline void write_edge_csv(const std::string& path, const Matrix& W) {
  auto out = detail::open_out(path);
  out << "src,dst,weight\n";
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      if (W(i, j) != 0.0) {
        out << i << ',' << j << ',' << detail::full_precision(W(i, j)) << '\n';
      }
    }
  }
}

// d = 0 infers the vertex count as max index + 1.
inline Matrix read_edge_csv(const std::string& path, Eigen::Index d = 0) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  std::int64_t lineno = 0;
  struct Edge {
    Eigen::Index src, dst;
    double w;
  };
  std::vector<Edge> edges;
  Eigen::Index max_index = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    if (lineno == 1 && !cells.empty() && cells[0] == "src") continue;
    if (cells.size() != 3) {
      throw ParseError("expected src,dst,weight", lineno);
    }
    double s, t, w;
    if (!detail::parse_double(cells[0], s) || !detail::parse_double(cells[1], t) ||
        !detail::parse_double(cells[2], w)) {
      throw ParseError("non-numeric edge fields", lineno);
    }
    Edge e{static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t), w};
    if (e.src < 0 || e.dst < 0 || (d > 0 && (e.src >= d || e.dst >= d))) {
      throw ParseError("vertex index out of range", lineno);
    }
    max_index = std::max({max_index, e.src, e.dst});
    edges.push_back(e);
  }
  const Eigen::Index dim = d > 0 ? d : max_index + 1;
  Matrix W = Matrix::Zero(dim, dim);
  for (const Edge& e : edges) W(e.src, e.dst) = e.w;
  return W;
}

// Plain numeric CSV, one sample per row, no header.
inline void write_matrix_csv(const std::string& path, const Matrix& X) {
  auto out = detail::open_out(path);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (c) out << ',';
      out << detail::full_precision(X(r, c));
    }
    out << '\n';
  }
}

inline void write_ordering_csv(const std::string& path, const Ordering& pi) {
  auto out = detail::open_out(path);
  for (int r = 0; r < pi.size(); ++r) {
    if (r) out << ',';
    out << pi.perm[r];
  }
  out << '\n';
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
  auto out = detail::open_out(path);
  out << "step,loss,grad_evals,elapsed_s\n";
  for (const TraceRow& row : trace) {
    out << row.step << ',' << detail::full_precision(row.loss) << ','
        << row.grad_evals << ',' << detail::full_precision(row.elapsed_s)
        << '\n';
  }
}

// ---- dense binary: magic "PSIDAGW1", d as 64-bit little-endian, then
// row-major float64 entries ----

inline constexpr char kDenseMagic[8] = {'P', 'S', 'I', 'D', 'A', 'G', 'W', '1'};

inline void write_dense_bin(const std::string& path, const Matrix& W) {
  auto out = detail::open_out(path, true);
  out.write(kDenseMagic, 8);
  const std::uint64_t d = static_cast<std::uint64_t>(W.rows());
  char dims[8];
  for (int b = 0; b < 8; ++b) dims[b] = static_cast<char>((d >> (8 * b)) & 0xff);
  out.write(dims, 8);
  std::vector<double> row(W.cols());
  for (Eigen::Index i = 0; i < W.rows(); ++i) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) row[j] = W(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
}

inline Matrix read_dense_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kDenseMagic, 8) != 0) {
    throw ParseError(path + ": bad magic");
  }
  char dims[8];
  in.read(dims, 8);
  if (!in) throw ParseError(path + ": truncated header");
  std::uint64_t d = 0;
  for (int b = 0; b < 8; ++b) {
    d |= static_cast<std::uint64_t>(static_cast<unsigned char>(dims[b])) << (8 * b);
  }
  Matrix W(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::vector<double> row(d);
  for (std::uint64_t i = 0; i < d; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * d));
    if (!in) throw ParseError(path + ": truncated data");
    for (std::uint64_t j = 0; j < d; ++j) {
      W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return W;
}

// ---- JSON ----

inline json metrics_to_json(const StructureMetrics& m) {
  return json{{"shd", m.shd},
              {"tpr", m.tpr},
              {"fpr", m.fpr},
              {"predicted_edges", m.predicted_edges},
              {"true_edges", m.true_edges}};
}

inline std::string metrics_csv(const StructureMetrics& m) {
  std::string row = "shd,tpr,fpr,pred_edges,true_edges\n";
  row += std::to_string(m.shd) + ',' + detail::full_precision(m.tpr) + ',' +
         detail::full_precision(m.fpr) + ',' + std::to_string(m.predicted_edges) +
         ',' + std::to_string(m.true_edges) + '\n';
  return row;
}

inline json report_to_json(const RunReport& report) {
  json outer = json::array();
  for (const OuterRecord& rec : report.outer) {
    outer.push_back(
        {{"k", rec.k},
         {"ordering", rec.ordering.perm},
         {"mass_removed", rec.mass_removed},
         {"loss_start", detail::finite_or_null(rec.loss_start)},
         {"loss_after_unconstrained",
          detail::finite_or_null(rec.loss_after_unconstrained)},
         {"loss_after_projection",
          detail::finite_or_null(rec.loss_after_projection)},
         {"loss_after_masked", detail::finite_or_null(rec.loss_after_masked)}});
  }
  json j{{"d", report.d},
         {"threshold", report.threshold},
         {"outer", std::move(outer)},
         {"final_ordering", report.final_ordering.perm},
         {"pre_threshold_edges", edge_count(support(report.W_pre))},
         {"post_threshold_edges", edge_count(support(report.W_post))},
         {"totals",
          {{"grad_evals", report.totals.grad_evals},
           {"wall_s", report.totals.wall_s}}},
         {"diagnostics",
          {{"L1_hat", report.diagnostics.L1_hat},
           {"sigma1_hat", report.diagnostics.sigma1_hat},
           {"R_hat", report.diagnostics.R_hat}}}};
  if (report.metrics) j["metrics"] = metrics_to_json(*report.metrics);
  return j;
}

inline void write_json(const std::string& path, const json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << '\n';
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return json::parse(in);
}

// ---- streaming-source descriptor: enough to reproduce the stream ----

inline const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian:
      return "gaussian";
    case NoiseKind::Exponential:
      return "exponential";
    case NoiseKind::Gumbel:
      return "gumbel";
  }
  return "gaussian";
}

inline NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "exponential") return NoiseKind::Exponential;
  if (name == "gumbel") return NoiseKind::Gumbel;
  throw std::invalid_argument("unknown noise kind: " + name);
}

inline void write_source_descriptor(const std::string& path,
                                    const std::string& trueW_csv,
                                    const NoiseModel& noise,
                                    std::uint64_t seed) {
  write_json(path, json{{"trueW", trueW_csv},
                        {"noise",
                         {{"kind", noise_kind_name(noise.kind)},
                          {"scale", noise.scale}}},
                        {"seed", seed}});
}

inline SampleSource load_source_descriptor(const std::string& path) {
  json j = read_json(path);
  NoiseModel noise{noise_kind_from_name(j.at("noise").at("kind")),
                   j.at("noise").at("scale").get<double>()};
  Matrix W = read_edge_csv(j.at("trueW").get<std::string>());
  return SampleSource::streaming(std::move(W), noise,
                                 j.at("seed").get<std::uint64_t>());
}

}  // namespace psidag
