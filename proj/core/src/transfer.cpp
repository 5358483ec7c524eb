#include "scorefeat/transfer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace scorefeat {

TransferReport refit_mixture_weights(const GaussianMixtureModel& source,
                                     const Eigen::MatrixXd& new_inputs,
                                     const TransferConfig& config) {
  const Eigen::Index n = new_inputs.rows();
  if (n < 1) throw std::invalid_argument("refit_mixture_weights: empty data");
  if (static_cast<int>(new_inputs.cols()) != source.dim()) {
    throw std::invalid_argument("refit_mixture_weights: dimension mismatch");
  }
  const int kc = source.component_count();

  // per-row component log-densities are fixed; only the weights move
  Eigen::MatrixXd comp_ll(n, kc);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = new_inputs.row(i).transpose();
    for (int c = 0; c < kc; ++c) comp_ll(i, c) = source.components()[c].log_density(x);
  }

  const auto total_ll = [&](const Eigen::VectorXd& w) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < kc; ++c) {
        m = std::max(m, std::log(std::max(w[c], 1e-300)) + comp_ll(i, c));
      }
      double s = 0.0;
      for (int c = 0; c < kc; ++c) {
        s += std::exp(std::log(std::max(w[c], 1e-300)) + comp_ll(i, c) - m);
      }
      ll += m + std::log(s);
    }
    return ll;
  };

  Eigen::VectorXd w = source.weights();
  const double source_ll = total_ll(w);
  double prev_ll = source_ll;
  bool floored = false;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    Eigen::VectorXd resp_sum = Eigen::VectorXd::Zero(kc);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd lp(kc);
      for (int c = 0; c < kc; ++c) {
        lp[c] = std::log(std::max(w[c], 1e-300)) + comp_ll(i, c);
      }
      const double m = lp.maxCoeff();
      double s = 0.0;
      for (int c = 0; c < kc; ++c) s += std::exp(lp[c] - m);
      const double lse = m + std::log(s);
      for (int c = 0; c < kc; ++c) resp_sum[c] += std::exp(lp[c] - lse);
    }
    Eigen::VectorXd w_next = resp_sum / static_cast<double>(n);
    for (int c = 0; c < kc; ++c) {
      if (w_next[c] < 1e-12) {
        w_next[c] = 1e-12;
        floored = true;
      }
    }
    w_next /= w_next.sum();
    const double ll = total_ll(w_next);
    w = w_next;
    if (ll - prev_ll < config.tol * static_cast<double>(n) && iter > 0) {
      prev_ll = std::max(ll, prev_ll);
      break;
    }
    prev_ll = ll;
  }

  TransferReport report{GaussianMixtureModel(w, source.components()),
                        (w - source.weights()).cwiseAbs().sum(), prev_ll - source_ll,
                        floored};
  return report;
}

}  // namespace scorefeat
