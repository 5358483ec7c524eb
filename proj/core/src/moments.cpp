#include "scorefeat/moments.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "scorefeat/numdiff.hpp"

namespace scorefeat {

void LabeledDataset::validate() const {
  if (inputs.rows() < 1) throw std::invalid_argument("dataset: no rows");
  if (labels.rows() != inputs.rows()) {
    throw std::invalid_argument("dataset: input/label row count mismatch");
  }
  if (labels.cols() < 1) throw std::invalid_argument("dataset: no label columns");
  if (!inputs.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("dataset: non-finite entries");
  }
}

LabelTransform parse_label_transform(const std::string& name) {
  if (name == "identity") return LabelTransform::kIdentity;
  if (name == "square") return LabelTransform::kSquare;
  if (name == "centered") return LabelTransform::kCentered;
  throw std::invalid_argument("unknown label transform: " + name);
}

std::string label_transform_name(LabelTransform t) {
  switch (t) {
    case LabelTransform::kIdentity: return "identity";
    case LabelTransform::kSquare: return "square";
    default: return "centered";
  }
}

namespace {

struct ChunkAccumulator {
  std::vector<std::vector<double>> sums;  // per label coordinate, d^m values
  std::vector<double> norm_sum;           // Σ ‖g(y)·S_m‖_F
  std::vector<double> norm_sum_sq;        // Σ ‖g(y)·S_m‖_F²

  ChunkAccumulator(int p, std::size_t len)
      : sums(p, std::vector<double>(len, 0.0)), norm_sum(p, 0.0), norm_sum_sq(p, 0.0) {}

  void merge(const ChunkAccumulator& other) {
    for (std::size_t c = 0; c < sums.size(); ++c) {
      for (std::size_t i = 0; i < sums[c].size(); ++i) sums[c][i] += other.sums[c][i];
      norm_sum[c] += other.norm_sum[c];
      norm_sum_sq[c] += other.norm_sum_sq[c];
    }
  }
};

void accumulate_rows(const LabeledDataset& data, const DensityModel& model, int order,
                     const Eigen::VectorXd& label_offset, bool square, Eigen::Index begin,
                     Eigen::Index end, ChunkAccumulator& acc) {
  const int p = data.label_dim();
  for (Eigen::Index i = begin; i < end; ++i) {
    const SymmetricTensor s = score_tensor(model, data.inputs.row(i).transpose(), order);
    const double snorm = frobenius_norm(s);
    for (int c = 0; c < p; ++c) {
      double g = data.labels(i, c) - label_offset[c];
      if (square) g = g * g;
      for (std::size_t j = 0; j < s.values().size(); ++j) {
        acc.sums[static_cast<std::size_t>(c)][j] += g * s.values()[j];
      }
      const double term = std::abs(g) * snorm;
      acc.norm_sum[static_cast<std::size_t>(c)] += term;
      acc.norm_sum_sq[static_cast<std::size_t>(c)] += term * term;
    }
  }
}

}  // namespace

CrossMomentReport cross_moment(const LabeledDataset& data, const DensityModel& model,
                               int order, LabelTransform transform, int threads) {
  data.validate();
  if (order < 1 || order > 4) throw std::invalid_argument("cross_moment: order must be 1..4");
  if (data.input_dim() != model_dim(model)) {
    throw std::invalid_argument("cross_moment: data/model dimension mismatch");
  }
  const Eigen::Index n = data.inputs.rows();
  const int p = data.label_dim();
  const std::size_t len = pow_dim(data.input_dim(), order);

  Eigen::VectorXd offset = Eigen::VectorXd::Zero(p);
  if (transform == LabelTransform::kCentered) offset = data.labels.colwise().mean();
  const bool square = transform == LabelTransform::kSquare;

  if (threads < 1) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  threads = static_cast<int>(std::min<Eigen::Index>(threads, n));

  // The rows are split into a fixed number of contiguous chunks that does not
  // depend on the thread count, and chunk partials are merged in chunk order,
  // so the result is bit-identical for any number of threads.
  const Eigen::Index chunks = std::min<Eigen::Index>(64, n);
  const Eigen::Index per = (n + chunks - 1) / chunks;
  std::vector<ChunkAccumulator> parts(static_cast<std::size_t>(chunks),
                                      ChunkAccumulator(p, len));
  const auto run_chunk = [&](Eigen::Index c) {
    const Eigen::Index begin = c * per;
    const Eigen::Index end = std::min<Eigen::Index>(begin + per, n);
    accumulate_rows(data, model, order, offset, square, begin, end,
                    parts[static_cast<std::size_t>(c)]);
  };
  if (threads == 1) {
    for (Eigen::Index c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (Eigen::Index c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }
  ChunkAccumulator total(p, len);
  for (const auto& part : parts) total.merge(part);

  CrossMomentReport report;
  report.sample_count = static_cast<int>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int c = 0; c < p; ++c) {
    std::vector<double> vals = total.sums[static_cast<std::size_t>(c)];
    for (double& v : vals) v *= inv_n;
    report.moments.push_back(
        SymmetricTensor::from_symmetric_unchecked(order, data.input_dim(), std::move(vals)));
    const double mean = total.norm_sum[static_cast<std::size_t>(c)] * inv_n;
    const double var =
        std::max(0.0, total.norm_sum_sq[static_cast<std::size_t>(c)] * inv_n - mean * mean);
    report.standard_error_estimate.push_back(std::sqrt(var / static_cast<double>(n)));
  }
  return report;
}

SymmetricTensor derivative_oracle(const LabelFunction& g, const DensityModel& model,
                                  int order, int n_samples, std::uint64_t seed,
                                  OracleMode mode) {
  if (order < 1 || order > 4) throw std::invalid_argument("derivative_oracle: order must be 1..4");
  if (n_samples < 1) throw std::invalid_argument("derivative_oracle: need n_samples >= 1");
  if (label_function_dim(g) != model_dim(model)) {
    throw std::invalid_argument("derivative_oracle: label/model dimension mismatch");
  }
  if (mode == OracleMode::kAnalytic && !has_analytic_derivative(g, order)) {
    throw std::invalid_argument("derivative_oracle: no analytic derivative of order " +
                                std::to_string(order) + " for " + label_function_name(g));
  }
  const int d = model_dim(model);
  const Eigen::MatrixXd draws = sample(model, n_samples, seed);
  Eigen::VectorXd scale = model_covariance(model).diagonal().cwiseSqrt();
  const Eigen::VectorXd steps = default_fd_steps(order, scale);

  SymmetricTensor acc(order, d);
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::VectorXd x = draws.row(i).transpose();
    SymmetricTensor term =
        mode == OracleMode::kAnalytic
            ? derivative(g, x, order)
            : finite_difference_derivative(
                  [&](const Eigen::VectorXd& pt) { return eval(g, pt); }, x, order, steps);
    acc = add_scaled(acc, term, 1.0);
  }
  std::vector<double> vals = acc.values();
  for (double& v : vals) v /= static_cast<double>(n_samples);
  return SymmetricTensor::from_symmetric_unchecked(order, d, std::move(vals));
}

double stein_residual(const SymmetricTensor& lhs, const SymmetricTensor& rhs) {
  if (lhs.order() != rhs.order() || lhs.dim() != rhs.dim()) {
    throw std::invalid_argument("stein_residual: shape mismatch");
  }
  return frobenius_norm(add_scaled(lhs, rhs, -1.0)) / std::max(frobenius_norm(rhs), 1e-300);
}

}  // namespace scorefeat
