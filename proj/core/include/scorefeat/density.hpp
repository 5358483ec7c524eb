#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

#include "scorefeat/tensor.hpp"

namespace scorefeat {

/// Multivariate Gaussian with cached Cholesky/inverse. Covariance must be
/// symmetric positive definite (smallest eigenvalue > 1e-10 · trace/d).
class GaussianModel {
 public:
  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  const Eigen::MatrixXd& precision() const { return precision_; }
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const;
  SymmetricTensor score_tensor(const Eigen::VectorXd& x, int order) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd chol_;  // lower triangular, covariance = chol·cholᵀ
  double log_norm_const_ = 0.0;
};

class GaussianMixtureModel {
 public:
  GaussianMixtureModel(Eigen::VectorXd weights, std::vector<GaussianModel> components);

  int dim() const { return components_.front().dim(); }
  int component_count() const { return static_cast<int>(components_.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<GaussianModel>& components() const { return components_; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad_log_density(const Eigen::VectorXd& x) const;
  SymmetricTensor score_tensor(const Eigen::VectorXd& x, int order) const;

  /// Posterior component probabilities r_i(x), computed in log space.
  Eigen::VectorXd responsibilities(const Eigen::VectorXd& x) const;

 private:
  Eigen::VectorXd weights_;
  std::vector<GaussianModel> components_;
};

using DensityModel = std::variant<GaussianModel, GaussianMixtureModel>;

int model_dim(const DensityModel& model);
double log_density(const DensityModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd grad_log_density(const DensityModel& model, const Eigen::VectorXd& x);

/// S_m(x) = (-1)^m ∇^{(m)} p(x) / p(x), m in 1..4.
SymmetricTensor score_tensor(const DensityModel& model, const Eigen::VectorXd& x, int order);

/// Overall mean / covariance of the model (mixture moments for GMMs).
Eigen::VectorXd model_mean(const DensityModel& model);
Eigen::MatrixXd model_covariance(const DensityModel& model);

/// i.i.d. draws, one row per sample, deterministic given seed.
Eigen::MatrixXd sample(const DensityModel& model, int n, std::uint64_t seed);

// -- fitting ----------------------------------------------------------------

struct EmConfig {
  double tol = 1e-7;        // relative log-likelihood gain
  int max_iter = 500;
  int restarts = 5;
};

struct FitReport {
  bool converged = true;
  int iterations = 0;
  int restarts_used = 0;
  double log_likelihood = 0.0;
};

/// Sample mean and covariance; ridge ε·(trace/d)·I with ε = 1e-6 is added
/// when the smallest eigenvalue falls below 1e-10·(trace/d).
GaussianModel fit_gaussian(const Eigen::MatrixXd& data);

GaussianMixtureModel fit_gmm(const Eigen::MatrixXd& data, int k, const EmConfig& config,
                             std::uint64_t seed, FitReport* report = nullptr);

/// Total log-likelihood of the rows of `data` under the model.
double data_log_likelihood(const DensityModel& model, const Eigen::MatrixXd& data);

}  // namespace scorefeat
