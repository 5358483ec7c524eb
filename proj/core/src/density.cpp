#include "scorefeat/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "scorefeat/rng.hpp"

namespace scorefeat {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double relative_eig_floor(const Eigen::MatrixXd& cov) {
  return 1e-10 * cov.trace() / static_cast<double>(cov.rows());
}

/// Ridge ε·(trace/d)·I whenever the smallest eigenvalue is below the floor.
Eigen::MatrixXd regularize_covariance(Eigen::MatrixXd cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < relative_eig_floor(cov)) {
    double scale = cov.trace() / static_cast<double>(cov.rows());
    if (scale <= 0.0) scale = 1.0;
    cov += 1e-6 * scale * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  }
  return cov;
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

void check_input(const Eigen::VectorXd& x, int dim) {
  if (static_cast<int>(x.size()) != dim) {
    throw std::invalid_argument("input dimension mismatch");
  }
  if (!x.allFinite()) throw std::invalid_argument("non-finite input point");
}

}  // namespace

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const int d = static_cast<int>(mean_.size());
  if (d < 1) throw std::invalid_argument("GaussianModel: empty mean");
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw std::invalid_argument("GaussianModel: covariance shape mismatch");
  }
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * (1.0 + covariance_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("GaussianModel: covariance not symmetric");
  }
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_);
  if (es.eigenvalues().minCoeff() <= relative_eig_floor(covariance_)) {
    throw std::invalid_argument("GaussianModel: covariance not positive definite");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  chol_ = llt.matrixL();
  precision_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
  double log_det = 0.0;
  for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(chol_(i, i));
  log_norm_const_ = -0.5 * (d * kLog2Pi + log_det);
}

double GaussianModel::log_density(const Eigen::VectorXd& x) const {
  check_input(x, dim());
  const Eigen::VectorXd c = x - mean_;
  return log_norm_const_ - 0.5 * c.dot(precision_ * c);
}

Eigen::VectorXd GaussianModel::grad_log_density(const Eigen::VectorXd& x) const {
  check_input(x, dim());
  return -(precision_ * (x - mean_));
}

SymmetricTensor GaussianModel::score_tensor(const Eigen::VectorXd& x, int order) const {
  check_input(x, dim());
  if (order < 1 || order > 4) {
    throw std::invalid_argument("score_tensor supports orders 1..4");
  }
  const int d = dim();
  const Eigen::VectorXd t = precision_ * (x - mean_);
  const Eigen::MatrixXd& b = precision_;
  std::vector<double> vals(pow_dim(d, order));
  switch (order) {
    case 1:
      for (int i = 0; i < d; ++i) vals[static_cast<std::size_t>(i)] = t[i];
      break;
    case 2:
      for_each_sorted_index(2, d, [&](std::span<const int> idx) {
        const int i = idx[0], j = idx[1];
        assign_orbit(vals, idx, d, t[i] * t[j] - b(i, j));
      });
      break;
    case 3:
      for_each_sorted_index(3, d, [&](std::span<const int> idx) {
        const int i = idx[0], j = idx[1], k = idx[2];
        const double v = t[i] * t[j] * t[k] -
                         (t[i] * b(j, k) + t[j] * b(i, k) + t[k] * b(i, j));
        assign_orbit(vals, idx, d, v);
      });
      break;
    case 4:
      for_each_sorted_index(4, d, [&](std::span<const int> idx) {
        const int i = idx[0], j = idx[1], k = idx[2], l = idx[3];
        const double v =
            t[i] * t[j] * t[k] * t[l] -
            (t[i] * t[j] * b(k, l) + t[i] * t[k] * b(j, l) + t[i] * t[l] * b(j, k) +
             t[j] * t[k] * b(i, l) + t[j] * t[l] * b(i, k) + t[k] * t[l] * b(i, j)) +
            (b(i, j) * b(k, l) + b(i, k) * b(j, l) + b(i, l) * b(j, k));
        assign_orbit(vals, idx, d, v);
      });
      break;
    default:
      break;
  }
  return SymmetricTensor::from_symmetric_unchecked(order, d, std::move(vals));
}

GaussianMixtureModel::GaussianMixtureModel(Eigen::VectorXd weights,
                                           std::vector<GaussianModel> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture needs >= 1 component");
  if (static_cast<std::size_t>(weights_.size()) != components_.size()) {
    throw std::invalid_argument("mixture: weight count != component count");
  }
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] >= 0.0)) throw std::invalid_argument("mixture: negative weight");
  }
  if (std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture: weights must sum to 1");
  }
  const int d = components_.front().dim();
  for (const auto& c : components_) {
    if (c.dim() != d) throw std::invalid_argument("mixture: component dim mismatch");
  }
}

double GaussianMixtureModel::log_density(const Eigen::VectorXd& x) const {
  const int kc = component_count();
  Eigen::VectorXd lp(kc);
  for (int i = 0; i < kc; ++i) {
    lp[i] = std::log(std::max(weights_[i], 1e-300)) + components_[i].log_density(x);
  }
  return log_sum_exp(lp);
}

Eigen::VectorXd GaussianMixtureModel::responsibilities(const Eigen::VectorXd& x) const {
  const int kc = component_count();
  Eigen::VectorXd lp(kc);
  for (int i = 0; i < kc; ++i) {
    lp[i] = std::log(std::max(weights_[i], 1e-300)) + components_[i].log_density(x);
  }
  const double lse = log_sum_exp(lp);
  Eigen::VectorXd r(kc);
  for (int i = 0; i < kc; ++i) r[i] = std::exp(lp[i] - lse);
  return r;
}

Eigen::VectorXd GaussianMixtureModel::grad_log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd r = responsibilities(x);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < component_count(); ++i) {
    g += r[i] * components_[i].grad_log_density(x);
  }
  return g;
}

SymmetricTensor GaussianMixtureModel::score_tensor(const Eigen::VectorXd& x,
                                                   int order) const {
  // exact: ∇^m p = Σ w_i ∇^m p_i, so S_m = Σ r_i S_m^{(i)}
  const Eigen::VectorXd r = responsibilities(x);
  SymmetricTensor acc(order, dim());
  for (int i = 0; i < component_count(); ++i) {
    acc = add_scaled(acc, components_[i].score_tensor(x, order), r[i]);
  }
  return acc;
}

int model_dim(const DensityModel& model) {
  return std::visit([](const auto& m) { return m.dim(); }, model);
}

double log_density(const DensityModel& model, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& m) { return m.log_density(x); }, model);
}

Eigen::VectorXd grad_log_density(const DensityModel& model, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& m) { return m.grad_log_density(x); }, model);
}

SymmetricTensor score_tensor(const DensityModel& model, const Eigen::VectorXd& x,
                             int order) {
  return std::visit([&](const auto& m) { return m.score_tensor(x, order); }, model);
}

Eigen::VectorXd model_mean(const DensityModel& model) {
  if (const auto* g = std::get_if<GaussianModel>(&model)) return g->mean();
  const auto& mix = std::get<GaussianMixtureModel>(model);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(mix.dim());
  for (int i = 0; i < mix.component_count(); ++i) {
    mu += mix.weights()[i] * mix.components()[i].mean();
  }
  return mu;
}

Eigen::MatrixXd model_covariance(const DensityModel& model) {
  if (const auto* g = std::get_if<GaussianModel>(&model)) return g->covariance();
  const auto& mix = std::get<GaussianMixtureModel>(model);
  const Eigen::VectorXd mu = model_mean(model);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(mix.dim(), mix.dim());
  for (int i = 0; i < mix.component_count(); ++i) {
    const auto& c = mix.components()[i];
    const Eigen::VectorXd dm = c.mean() - mu;
    cov += mix.weights()[i] * (c.covariance() + dm * dm.transpose());
  }
  return cov;
}

Eigen::MatrixXd sample(const DensityModel& model, int n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample: n must be >= 0");
  const int d = model_dim(model);
  Eigen::MatrixXd out(n, d);
  Rng rng(seed);
  const auto draw_gaussian = [&](const GaussianModel& g, Eigen::Index row) {
    Eigen::VectorXd z(d);
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    out.row(row) = (g.mean() + g.cholesky_factor() * z).transpose();
  };
  if (const auto* g = std::get_if<GaussianModel>(&model)) {
    for (int i = 0; i < n; ++i) draw_gaussian(*g, i);
  } else {
    const auto& mix = std::get<GaussianMixtureModel>(model);
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      double cum = 0.0;
      int pick = mix.component_count() - 1;
      for (int c = 0; c < mix.component_count(); ++c) {
        cum += mix.weights()[c];
        if (u < cum) {
          pick = c;
          break;
        }
      }
      draw_gaussian(mix.components()[static_cast<std::size_t>(pick)], i);
    }
  }
  return out;
}

GaussianModel fit_gaussian(const Eigen::MatrixXd& data) {
  const Eigen::Index n = data.rows();
  if (n < 1) throw std::invalid_argument("fit_gaussian: empty data");
  const Eigen::VectorXd mu = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);
  cov = regularize_covariance(std::move(cov));
  return GaussianModel(mu, cov);
}

double data_log_likelihood(const DensityModel& model, const Eigen::MatrixXd& data) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    ll += log_density(model, data.row(i).transpose());
  }
  return ll;
}

namespace {

/// k-means++ style seeding: means picked from data rows with probability
/// proportional to squared distance from the chosen set.
std::vector<Eigen::VectorXd> seed_means(const Eigen::MatrixXd& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  std::vector<Eigen::VectorXd> means;
  means.push_back(data.row(rng.index(static_cast<int>(n))).transpose());
  Eigen::VectorXd dist2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist2[i] = (data.row(i).transpose() - means[0]).squaredNorm();
  }
  while (static_cast<int>(means.size()) < k) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += dist2[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(static_cast<int>(n));
    }
    means.push_back(data.row(pick).transpose());
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i], (data.row(i).transpose() - means.back()).squaredNorm());
    }
  }
  return means;
}

struct EmRun {
  GaussianMixtureModel model;
  double log_likelihood;
  int iterations;
  bool converged;
};

EmRun run_em(const Eigen::MatrixXd& data, int k, const EmConfig& config, Rng& rng) {
  const Eigen::Index n = data.rows();
  const int d = static_cast<int>(data.cols());

  const Eigen::MatrixXd base_cov =
      regularize_covariance((data.rowwise() - data.colwise().mean())
                                .transpose() *
                            (data.rowwise() - data.colwise().mean()) /
                            static_cast<double>(n));
  std::vector<GaussianModel> comps;
  for (const auto& mu : seed_means(data, k, rng)) comps.emplace_back(mu, base_cov);
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(k, 1.0 / k);

  double prev_ll = -std::numeric_limits<double>::infinity();
  double ll = prev_ll;
  bool converged = false;
  int iter = 0;
  Eigen::MatrixXd resp(n, k);
  for (iter = 0; iter < config.max_iter; ++iter) {
    // E-step in log space
    ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd lp(k);
      const Eigen::VectorXd x = data.row(i).transpose();
      for (int c = 0; c < k; ++c) {
        lp[c] = std::log(std::max(weights[c], 1e-300)) + comps[c].log_density(x);
      }
      const double lse = log_sum_exp(lp);
      ll += lse;
      for (int c = 0; c < k; ++c) resp(i, c) = std::exp(lp[c] - lse);
    }
    if (std::isfinite(prev_ll) && ll - prev_ll < config.tol * std::abs(ll)) {
      converged = true;
      break;
    }
    prev_ll = ll;
    // M-step
    std::vector<GaussianModel> next;
    for (int c = 0; c < k; ++c) {
      const double nk = resp.col(c).sum();
      if (nk < 1e-12) {
        next.push_back(comps[c]);
        weights[c] = 1e-300;
        continue;
      }
      const Eigen::VectorXd mu = (resp.col(c).transpose() * data).transpose() / nk;
      const Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
      const Eigen::MatrixXd cov = regularize_covariance(
          centered.transpose() * resp.col(c).asDiagonal() * centered / nk);
      next.emplace_back(mu, cov);
      weights[c] = nk / static_cast<double>(n);
    }
    weights /= weights.sum();
    comps = std::move(next);
  }
  return {GaussianMixtureModel(weights / weights.sum(), comps), ll, iter, converged};
}

}  // namespace

GaussianMixtureModel fit_gmm(const Eigen::MatrixXd& data, int k, const EmConfig& config,
                             std::uint64_t seed, FitReport* report) {
  if (k < 1) throw std::invalid_argument("fit_gmm: k must be >= 1");
  if (data.rows() < k) throw std::invalid_argument("fit_gmm: need at least k rows");
  if (!data.allFinite()) throw std::invalid_argument("fit_gmm: non-finite data");

  std::optional<EmRun> best;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    EmRun run = run_em(data, k, config, rng);
    if (!best || run.log_likelihood > best->log_likelihood) best = std::move(run);
  }
  if (report) {
    report->converged = best->converged;
    report->iterations = best->iterations;
    report->restarts_used = std::max(1, config.restarts);
    report->log_likelihood = best->log_likelihood;
  }
  return best->model;
}

}  // namespace scorefeat
