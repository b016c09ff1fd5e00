// Linear SEM simulation and sample delivery: streaming draws for stochastic
// approximation, epoch shuffles over a fixed dataset, and CSV ingestion.
#pragma once

#include "psidag/graphgen.hpp"
#include "psidag/rng.hpp"
#include "psidag/types.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace psidag {

enum class NoiseKind { Gaussian, Exponential, Gumbel };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  double scale = 1.0;  // equal across variables
};

inline double draw_noise_value(const NoiseModel& model, Rng& rng) {
  switch (model.kind) {
    case NoiseKind::Gaussian:
      return model.scale * rng.normal();
    case NoiseKind::Exponential:
      return model.scale * rng.exponential();
    case NoiseKind::Gumbel:
      return model.scale * rng.gumbel();
  }
  throw std::invalid_argument("draw_noise_value: unknown noise kind");
}

// b x d noise block, filled row by row so the draw order is pinned.
inline SampleBatch draw_noise(const NoiseModel& model, Eigen::Index b,
                              Eigen::Index d, Rng& rng) {
  if (model.scale <= 0.0) {
    throw std::invalid_argument("draw_noise: scale must be positive");
  }
  SampleBatch N(b, d);
  for (Eigen::Index r = 0; r < b; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      N(r, c) = draw_noise_value(model, rng);
    }
  }
  return N;
}

// Solves x = W^T x + n for every noise row by forward substitution along the
// topological certificate; cost is O(b * edges), no inverse is formed.
inline SampleBatch sem_transform(const Matrix& trueW, const Ordering& order,
                                 const SampleBatch& noise) {
  const Eigen::Index d = trueW.rows();
  if (trueW.cols() != d || noise.cols() != d ||
      order.size() != static_cast<int>(d)) {
    throw std::invalid_argument("sem_transform: dimension mismatch");
  }
  SampleBatch X = noise;
  for (int rank = 0; rank < order.size(); ++rank) {
    const int v = order.perm[rank];
    for (Eigen::Index u = 0; u < d; ++u) {
      const double w = trueW(u, v);
      if (w != 0.0) X.col(v) += w * X.col(u);
    }
  }
  return X;
}

// Fresh i.i.d. batch from the SEM distribution of an acyclic trueW.
inline SampleBatch simulate_samples(const Matrix& trueW, const NoiseModel& noise,
                                    Eigen::Index b, std::uint64_t seed) {
  auto order = is_dag(support(trueW));
  if (!order) {
    throw std::invalid_argument("simulate_samples: trueW must be acyclic");
  }
  Rng rng(seed);
  return sem_transform(trueW, *order, draw_noise(noise, b, trueW.rows(), rng));
}

// Serves batches either by simulating the SEM on demand (streaming) or by
// walking per-epoch shuffles of a fixed dataset. Batches never straddle an
// epoch: the last batch of an epoch may come up short.
class SampleSource {
 public:
  static SampleSource streaming(Matrix trueW, NoiseModel noise,
                                std::uint64_t seed) {
    auto order = is_dag(support(trueW));
    if (!order) {
      throw std::invalid_argument("SampleSource: streaming trueW must be acyclic");
    }
    SampleSource s;
    s.streaming_ = true;
    s.trueW_ = std::move(trueW);
    s.order_ = std::move(*order);
    s.noise_ = noise;
    s.seed_ = seed;
    s.rng_ = Rng(seed);
    s.d_ = s.trueW_.rows();
    return s;
  }

  static SampleSource fixed(Matrix data, std::uint64_t shuffle_seed = 0) {
    if (data.rows() < 1) {
      throw std::invalid_argument("SampleSource: fixed dataset is empty");
    }
    SampleSource s;
    s.streaming_ = false;
    s.data_ = std::move(data);
    s.seed_ = shuffle_seed;
    s.rng_ = Rng(shuffle_seed);
    s.d_ = s.data_.cols();
    s.n_ = s.data_.rows();
    s.cursor_ = s.n_;  // forces a shuffle on first use
    s.index_.resize(s.n_);
    for (Eigen::Index i = 0; i < s.n_; ++i) s.index_[i] = i;
    return s;
  }

  Eigen::Index dim() const { return d_; }
  bool is_fixed() const { return !streaming_; }
  Eigen::Index sample_count() const { return streaming_ ? 0 : n_; }

  const Matrix& true_weights() const {
    if (!streaming_) {
      throw std::logic_error("SampleSource: fixed source has no true weights");
    }
    return trueW_;
  }
  const NoiseModel& noise_model() const { return noise_; }
  std::uint64_t seed() const { return seed_; }

  SampleBatch next_batch(Eigen::Index b) {
    if (b < 1) throw std::invalid_argument("next_batch: b must be >= 1");
    if (streaming_) {
      return sem_transform(trueW_, order_, draw_noise(noise_, b, d_, rng_));
    }
    if (cursor_ >= n_) {
      rng_.shuffle(index_);
      cursor_ = 0;
    }
    const Eigen::Index take = std::min<Eigen::Index>(b, n_ - cursor_);
    SampleBatch batch(take, d_);
    for (Eigen::Index r = 0; r < take; ++r) {
      batch.row(r) = data_.row(index_[cursor_ + r]);
    }
    cursor_ += take;
    return batch;
  }

 private:
  SampleSource() : rng_(0) {}

  bool streaming_ = false;
  Eigen::Index d_ = 0;

  Matrix trueW_;
  Ordering order_;
  NoiseModel noise_;

  Matrix data_;
  Eigen::Index n_ = 0;
  Eigen::Index cursor_ = 0;
  std::vector<Eigen::Index> index_;

  std::uint64_t seed_ = 0;
  Rng rng_;
};

namespace detail {

inline bool parse_double(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) {
    --last;
  }
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

// Reads an n x d numeric CSV. A leading line with any non-numeric cell is
// treated as a header and skipped. Ragged or non-numeric rows fail with the
// offending line number.
inline Matrix load_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::int64_t lineno = 0;
  Eigen::Index d = -1;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!detail::parse_double(cells[c], row[c])) {
        numeric = false;
        if (!first_content_line) {
          throw ParseError("non-numeric cell '" + cells[c] + "' in column " +
                               std::to_string(c + 1),
                           lineno);
        }
        break;
      }
    }
    if (!numeric) {  // header line
      first_content_line = false;
      continue;
    }
    if (d < 0) {
      d = static_cast<Eigen::Index>(row.size());
    } else if (static_cast<Eigen::Index>(row.size()) != d) {
      throw ParseError("expected " + std::to_string(d) + " columns, got " +
                           std::to_string(row.size()),
                       lineno);
    }
    rows.push_back(std::move(row));
    first_content_line = false;
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Matrix X(static_cast<Eigen::Index>(rows.size()), d);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) X(r, c) = rows[r][c];
  }
  return X;
}

inline SampleSource load_csv(const std::string& path,
                             std::uint64_t shuffle_seed = 0) {
  return SampleSource::fixed(load_csv_matrix(path), shuffle_seed);
}

}  // namespace psidag
