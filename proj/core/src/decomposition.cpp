#include "scorefeat/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "scorefeat/rng.hpp"

namespace scorefeat {

namespace {

constexpr double kSignEps = 1e-8;

Eigen::VectorXd tensor_to_vector(const SymmetricTensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.values().data(),
                                           static_cast<Eigen::Index>(t.values().size()));
}

/// Σ_j λ_j u_j^{⊗m} with canonical-orbit fill.
SymmetricTensor weighted_rank_terms(const Eigen::MatrixXd& u, const Eigen::VectorXd& lambda,
                                    int order, int dim) {
  std::vector<double> vals(pow_dim(dim, order), 0.0);
  for_each_sorted_index(order, dim, [&](std::span<const int> idx) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      double p = lambda[j];
      for (int i : idx) p *= u(i, j);
      v += p;
    }
    assign_orbit(vals, idx, dim, v);
  });
  return SymmetricTensor::from_symmetric_unchecked(order, dim, std::move(vals));
}

double relative_residual(const SymmetricTensor& t, const CpModel& cp) {
  return frobenius_norm(add_scaled(t, reconstruct(cp), -1.0)) /
         std::max(frobenius_norm(t), 1e-300);
}

/// Least-squares weights for fixed unit components: (⟨u_i,u_j⟩^m)·λ = T(u_i,..).
Eigen::VectorXd solve_weights(const SymmetricTensor& t, const Eigen::MatrixXd& u) {
  const int k = static_cast<int>(u.cols());
  const int m = t.order();
  Eigen::MatrixXd gram = u.transpose() * u;
  Eigen::MatrixXd a = Eigen::MatrixXd::Ones(k, k);
  for (int p = 0; p < m; ++p) a = a.cwiseProduct(gram);
  Eigen::VectorXd b(k);
  for (int j = 0; j < k; ++j) b[j] = contract_scalar(t, u.col(j));
  Eigen::VectorXd lambda = a.ldlt().solve(b);
  if (!lambda.allFinite()) {
    const double ridge = 1e-10 * std::max(a.norm(), 1.0);
    lambda = (a + ridge * Eigen::MatrixXd::Identity(k, k)).ldlt().solve(b);
  }
  return lambda;
}

struct PowerResult {
  Eigen::VectorXd u;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

PowerResult power_iteration(const SymmetricTensor& t, Eigen::VectorXd u,
                            const PowerConfig& config) {
  PowerResult result;
  u.normalize();
  for (int it = 0; it < config.max_iter; ++it) {
    Eigen::VectorXd v = tensor_to_vector(contract(t, u, t.order() - 1));
    const double norm = v.norm();
    if (norm < 1e-300) break;
    v /= norm;
    const double align = std::abs(v.dot(u));
    u = v;
    result.iterations = it + 1;
    if (1.0 - align <= config.tol) {
      result.converged = true;
      break;
    }
  }
  result.u = u;
  result.lambda = contract_scalar(t, u);
  return result;
}

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  Eigen::VectorXd u(dim);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < dim; ++i) u[i] = rng.normal();
    norm2 = u.squaredNorm();
  } while (norm2 < 1e-12);
  return u / std::sqrt(norm2);
}

struct DeflationOutput {
  Eigen::MatrixXd components;
  Eigen::VectorXd lambdas;
  int iterations = 0;
  bool converged = true;
};

/// Repeated power iterations with deflation; valid when the components are
/// (near-)orthogonal in the working space.
DeflationOutput power_deflate(SymmetricTensor t, int k, const PowerConfig& config) {
  const int dim = t.dim();
  DeflationOutput out;
  out.components.resize(dim, k);
  out.lambdas.resize(k);
  for (int c = 0; c < k; ++c) {
    PowerResult best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
      Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(c) * 1000003ULL +
                                        static_cast<std::uint64_t>(r)));
      PowerResult cand = power_iteration(t, random_unit(rng, dim), config);
      out.iterations += cand.iterations;
      if (!have || std::abs(cand.lambda) > std::abs(best.lambda)) {
        best = cand;
        have = true;
      }
    }
    out.components.col(c) = best.u;
    out.lambdas[c] = best.lambda;
    out.converged = out.converged && best.converged;
    t = add_scaled(t, sym_outer_power(best.u, t.order()), -best.lambda);
  }
  return out;
}

void flip_sign(Eigen::Ref<Eigen::VectorXd> u, double& lambda, int order) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > kSignEps) {
      if (u[i] < 0.0) {
        u = -u;
        if (order % 2 == 1) lambda = -lambda;
      }
      return;
    }
  }
}

}  // namespace

void CpModel::validate() const {
  if (order < 1 || order > 4) throw std::invalid_argument("CpModel: order must be 1..4");
  if (dim < 1) throw std::invalid_argument("CpModel: dim must be >= 1");
  if (rank < 0) throw std::invalid_argument("CpModel: negative rank");
  if (weights.size() != rank || components.cols() != rank || components.rows() != dim) {
    throw std::invalid_argument("CpModel: shape mismatch");
  }
  for (int j = 0; j < rank; ++j) {
    if (std::abs(components.col(j).norm() - 1.0) > 1e-10) {
      throw std::invalid_argument("CpModel: component " + std::to_string(j) + " not unit norm");
    }
  }
}

void canonicalize(CpModel& cp) {
  for (int j = 0; j < cp.rank; ++j) {
    flip_sign(cp.components.col(j), cp.weights[j], cp.order);
  }
  std::vector<int> idx(static_cast<std::size_t>(cp.rank));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double la = std::abs(cp.weights[a]);
    const double lb = std::abs(cp.weights[b]);
    const double tie = 1e-12 * std::max({la, lb, 1.0});
    if (std::abs(la - lb) > tie) return la > lb;
    for (int i = 0; i < cp.dim; ++i) {
      if (cp.components(i, a) != cp.components(i, b)) {
        return cp.components(i, a) < cp.components(i, b);
      }
    }
    return false;
  });
  Eigen::VectorXd w(cp.rank);
  Eigen::MatrixXd u(cp.dim, cp.rank);
  for (int j = 0; j < cp.rank; ++j) {
    w[j] = cp.weights[idx[static_cast<std::size_t>(j)]];
    u.col(j) = cp.components.col(idx[static_cast<std::size_t>(j)]);
  }
  cp.weights = std::move(w);
  cp.components = std::move(u);
}

SymmetricTensor reconstruct(const CpModel& cp) {
  cp.validate();
  if (cp.rank == 0) return SymmetricTensor(cp.order, cp.dim);
  return weighted_rank_terms(cp.components, cp.weights, cp.order, cp.dim);
}

DecompositionReport decompose_matrix(const SymmetricTensor& m2, int k) {
  if (m2.order() != 2) throw std::invalid_argument("decompose_matrix: order-2 tensor required");
  if (k < 1 || k > m2.dim()) {
    throw std::invalid_argument("decompose_matrix: k must be in 1..dim");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unfold(m2));
  std::vector<int> idx(static_cast<std::size_t>(m2.dim()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
  });
  DecompositionReport report;
  report.cp.order = 2;
  report.cp.dim = m2.dim();
  report.cp.rank = k;
  report.cp.weights.resize(k);
  report.cp.components.resize(m2.dim(), k);
  for (int j = 0; j < k; ++j) {
    report.cp.weights[j] = es.eigenvalues()[idx[static_cast<std::size_t>(j)]];
    report.cp.components.col(j) =
        es.eigenvectors().col(idx[static_cast<std::size_t>(j)]).normalized();
  }
  canonicalize(report.cp);
  report.residual = relative_residual(m2, report.cp);
  return report;
}

WhitenResult whiten(const SymmetricTensor& m2, int k) {
  if (m2.order() != 2) throw std::invalid_argument("whiten: order-2 tensor required");
  if (k < 1 || k > m2.dim()) throw std::invalid_argument("whiten: k must be in 1..dim");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unfold(m2));
  // descending algebraic order
  const Eigen::VectorXd ev = es.eigenvalues().reverse();
  const double floor = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  WhitenResult result;
  result.w.resize(m2.dim(), k);
  result.unwhiten.resize(m2.dim(), k);
  result.eigenvalues.resize(k);
  for (int j = 0; j < k; ++j) {
    const double lambda = ev[j];
    if (lambda <= floor) {
      throw std::invalid_argument(
          "whiten: eigenvalue " + std::to_string(j) + " of the order-2 moment is not positive (" +
          std::to_string(lambda) + "); rank k may be too large or the moment is wrong");
    }
    const Eigen::VectorXd v = es.eigenvectors().col(m2.dim() - 1 - j);
    result.eigenvalues[j] = lambda;
    result.w.col(j) = v / std::sqrt(lambda);
    result.unwhiten.col(j) = v * std::sqrt(lambda);
  }
  return result;
}

DecompositionReport als_refine(const SymmetricTensor& t, const CpModel& init,
                               int iterations) {
  init.validate();
  if (init.order != t.order() || init.dim != t.dim()) {
    throw std::invalid_argument("als_refine: init shape does not match tensor");
  }
  const int m = t.order();
  const int d = t.dim();
  const int k = init.rank;
  DecompositionReport report;
  report.cp = init;
  report.residual = relative_residual(t, report.cp);
  if (k == 0 || m < 2) {
    report.converged = true;
    return report;
  }
  const Eigen::MatrixXd m1 = unfold(t);
  Eigen::MatrixXd u = init.components;
  // the returned model is the best iterate seen, so the reported residual is
  // non-increasing in the sweep budget even though raw sweeps may overshoot
  Eigen::MatrixXd best_u = u;
  Eigen::VectorXd best_lambda = init.weights;
  double best = report.residual;
  int stalled_sweeps = 0;
  report.converged = false;
  for (int sweep = 0; sweep < iterations; ++sweep) {
    // Khatri-Rao of (m-1) copies of U, row-major to match the unfolding
    Eigen::MatrixXd kr = u;
    for (int p = 1; p < m - 1; ++p) {
      Eigen::MatrixXd next(kr.rows() * d, k);
      for (int j = 0; j < k; ++j) {
        for (Eigen::Index r = 0; r < kr.rows(); ++r) {
          for (int i = 0; i < d; ++i) next(r * d + i, j) = kr(r, j) * u(i, j);
        }
      }
      kr = std::move(next);
    }
    Eigen::MatrixXd gram = u.transpose() * u;
    Eigen::MatrixXd g = Eigen::MatrixXd::Ones(k, k);
    for (int p = 0; p < m - 1; ++p) g = g.cwiseProduct(gram);
    Eigen::MatrixXd rhs = (m1 * kr).transpose();  // k×d
    Eigen::MatrixXd a = g.ldlt().solve(rhs).transpose();
    if (!a.allFinite()) {
      const double ridge = 1e-10 * std::max(g.norm(), 1.0);
      a = (g + ridge * Eigen::MatrixXd::Identity(k, k)).ldlt().solve(rhs).transpose();
    }
    for (int j = 0; j < k; ++j) {
      const double norm = a.col(j).norm();
      if (norm > 1e-300) u.col(j) = a.col(j) / norm;
    }
    const Eigen::VectorXd lambda = solve_weights(t, u);
    CpModel trial{m, d, k, lambda, u};
    const double res = relative_residual(t, trial);
    report.iterations_used = sweep + 1;
    if (res < best - 1e-14 * std::max(best, 1.0)) {
      best = res;
      best_u = u;
      best_lambda = lambda;
      stalled_sweeps = 0;
    } else {
      ++stalled_sweeps;
    }
    if (best < 1e-13 || stalled_sweeps >= 25) {
      report.converged = true;
      break;
    }
  }
  report.cp.components = best_u;
  report.cp.weights = best_lambda;
  canonicalize(report.cp);
  report.residual = relative_residual(t, report.cp);
  return report;
}

namespace {

DecompositionReport finish(const SymmetricTensor& t, Eigen::MatrixXd u, int k,
                           const PowerConfig& config, int power_iterations,
                           bool power_converged, int restarts_used) {
  for (int j = 0; j < k; ++j) u.col(j).normalize();
  CpModel init{t.order(), t.dim(), k, solve_weights(t, u), u};
  canonicalize(init);
  DecompositionReport report = als_refine(t, init, config.refine_sweeps);
  report.iterations_used += power_iterations;
  report.restarts_used = restarts_used;
  report.converged = report.converged && power_converged;
  return report;
}

/// Gauss-Newton/Levenberg-Marquardt polish of an order-3 model with the
/// weights absorbed into unnormalized columns a_j = λ_j^{1/3}·u_j. ALS stalls
/// on plateaus of coherent overcomplete problems; the joint second-order step
/// does not. The model is replaced only when the residual improves.
void lm_polish(const SymmetricTensor& t, CpModel& cp, int max_iter) {
  if (cp.order != 3 || cp.rank < 1) return;
  const int d = cp.dim;
  const int k = cp.rank;
  const int n = static_cast<int>(t.values().size());
  const int p = d * k;
  Eigen::MatrixXd a = cp.components;
  for (int j = 0; j < k; ++j) a.col(j) *= std::cbrt(cp.weights[j]);

  const auto residual_vec = [&](const Eigen::MatrixXd& m, Eigen::VectorXd& r) {
    r.resize(n);
    int idx = 0;
    for (int p1 = 0; p1 < d; ++p1) {
      for (int q = 0; q < d; ++q) {
        for (int s = 0; s < d; ++s) {
          double v = 0.0;
          for (int j = 0; j < k; ++j) v += m(p1, j) * m(q, j) * m(s, j);
          r[idx] = t.values()[static_cast<std::size_t>(idx)] - v;
          ++idx;
        }
      }
    }
  };

  Eigen::VectorXd r;
  residual_vec(a, r);
  double cost = r.squaredNorm();
  const double initial_cost = cost;
  double mu = 1e-3;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, p);
    int idx = 0;
    for (int p1 = 0; p1 < d; ++p1) {
      for (int q = 0; q < d; ++q) {
        for (int s = 0; s < d; ++s) {
          for (int j = 0; j < k; ++j) {
            jac(idx, j * d + p1) -= a(q, j) * a(s, j);
            jac(idx, j * d + q) -= a(p1, j) * a(s, j);
            jac(idx, j * d + s) -= a(p1, j) * a(q, j);
          }
          ++idx;
        }
      }
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 25; ++attempt) {
      const Eigen::VectorXd step =
          (jtj + mu * Eigen::MatrixXd::Identity(p, p)).ldlt().solve(-jtr);
      if (!step.allFinite()) break;
      Eigen::MatrixXd trial = a;
      for (int j = 0; j < k; ++j) {
        for (int i = 0; i < d; ++i) trial(i, j) += step[j * d + i];
      }
      Eigen::VectorXd r2;
      residual_vec(trial, r2);
      const double c2 = r2.squaredNorm();
      if (c2 < cost) {
        a = std::move(trial);
        r = std::move(r2);
        cost = c2;
        mu = std::max(mu * 0.5, 1e-14);
        improved = true;
        break;
      }
      mu *= 4.0;
    }
    if (!improved || cost < 1e-26) break;
  }
  if (cost >= initial_cost) return;

  CpModel refined = cp;
  for (int j = 0; j < k; ++j) {
    const double norm = a.col(j).norm();
    if (norm <= 1e-300) return;  // collapsed column, keep the ALS model
    refined.components.col(j) = a.col(j) / norm;
    refined.weights[j] = norm * norm * norm;
  }
  canonicalize(refined);
  if (relative_residual(t, refined) < relative_residual(t, cp)) cp = refined;
}

DecompositionReport order4_by_unfolding(const SymmetricTensor& t, int k,
                                        const PowerConfig& config) {
  // experimental: eigendecompose the d²×d² unfolding, take the dominant
  // singular direction of each reshaped eigenvector
  const int d = t.dim();
  const Eigen::Index d2 = static_cast<Eigen::Index>(d) * d;
  Eigen::MatrixXd flat(d2, d2);
  for (Eigen::Index r = 0; r < d2; ++r) {
    for (Eigen::Index c = 0; c < d2; ++c) {
      flat(r, c) = t.values()[static_cast<std::size_t>(r * d2 + c)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(flat);
  std::vector<int> idx(static_cast<std::size_t>(d2));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()[a]) > std::abs(es.eigenvalues()[b]);
  });
  Eigen::MatrixXd u(d, k);
  for (int j = 0; j < k; ++j) {
    Eigen::MatrixXd slab(d, d);
    const Eigen::VectorXd v = es.eigenvectors().col(idx[static_cast<std::size_t>(j)]);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) slab(r, c) = v[r * d + c];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(slab, Eigen::ComputeThinU);
    u.col(j) = svd.matrixU().col(0);
  }
  return finish(t, std::move(u), k, config, 0, true, 0);
}

}  // namespace

DecompositionReport tensor_power_method(const SymmetricTensor& t, int k,
                                        const PowerConfig& config,
                                        const SymmetricTensor* m2) {
  if (k < 1) throw std::invalid_argument("tensor_power_method: k must be >= 1");
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("tensor_power_method: non-finite tensor");
  }
  if (t.order() == 2) return decompose_matrix(t, k);
  if (t.order() == 4) return order4_by_unfolding(t, k, config);
  if (t.order() != 3) {
    throw std::invalid_argument("tensor_power_method: order must be 2, 3 or 4");
  }
  const int d = t.dim();

  if (k <= d) {
    if (m2 != nullptr) {
      const WhitenResult wr = whiten(*m2, k);
      const SymmetricTensor whitened = multilinear_transform(t, wr.w);
      DeflationOutput defl = power_deflate(whitened, k, config);
      Eigen::MatrixXd u = wr.unwhiten * defl.components;
      return finish(t, std::move(u), k, config, defl.iterations, defl.converged,
                    config.restarts * k);
    }
    DeflationOutput defl = power_deflate(t, k, config);
    return finish(t, defl.components, k, config, defl.iterations, defl.converged,
                  config.restarts * k);
  }

  // overcomplete: independent restarts on the raw tensor, clustered
  const int total = config.restarts * k;
  std::vector<PowerResult> candidates;
  int power_iterations = 0;
  for (int r = 0; r < total; ++r) {
    Rng rng(mix_seed(config.seed, 0xabcdULL + static_cast<std::uint64_t>(r)));
    PowerResult cand = power_iteration(t, random_unit(rng, d), config);
    power_iterations += cand.iterations;
    if (!cand.converged || std::abs(cand.lambda) < 1e-300) continue;
    flip_sign(cand.u, cand.lambda, t.order());
    candidates.push_back(std::move(cand));
  }
  std::sort(candidates.begin(), candidates.end(), [](const PowerResult& a, const PowerResult& b) {
    return std::abs(a.lambda) > std::abs(b.lambda);
  });
  std::vector<PowerResult> reps;
  const auto try_add = [&](PowerResult cand) {
    for (const auto& rep : reps) {
      if (std::abs(cand.u.dot(rep.u)) >= 0.99) return;
    }
    reps.push_back(std::move(cand));
  };
  for (const auto& cand : candidates) try_add(cand);

  // Coherent instances expose few attractors to independent restarts; top up
  // the candidate pool by power iterations on progressively deflated copies,
  // which steer later searches away from the directions already found.
  SymmetricTensor residual_t = t;
  for (const auto& rep : reps) {
    residual_t = add_scaled(residual_t, sym_outer_power(rep.u, 3), -rep.lambda);
  }
  for (int round = 0; static_cast<int>(reps.size()) < k && round < 4 * k; ++round) {
    PowerResult best;
    bool have = false;
    for (int r = 0; r < config.restarts; ++r) {
      Rng rng(mix_seed(config.seed,
                       0xdef1ULL + static_cast<std::uint64_t>(round) * 1000003ULL +
                           static_cast<std::uint64_t>(r)));
      PowerResult cand = power_iteration(residual_t, random_unit(rng, d), config);
      power_iterations += cand.iterations;
      if (std::abs(cand.lambda) < 1e-300) continue;
      if (!have || std::abs(cand.lambda) > std::abs(best.lambda)) {
        best = cand;
        have = true;
      }
    }
    if (!have) break;
    residual_t = add_scaled(residual_t, sym_outer_power(best.u, 3), -best.lambda);
    best.lambda = contract_scalar(t, best.u);
    flip_sign(best.u, best.lambda, t.order());
    try_add(std::move(best));
  }

  if (static_cast<int>(reps.size()) < k) {
    throw std::runtime_error("tensor_power_method: only " + std::to_string(reps.size()) +
                             " distinct components found for rank " + std::to_string(k) +
                             "; increase restarts");
  }
  std::sort(reps.begin(), reps.end(), [](const PowerResult& a, const PowerResult& b) {
    return std::abs(a.lambda) > std::abs(b.lambda);
  });
  Eigen::MatrixXd u(d, k);
  for (int j = 0; j < k; ++j) u.col(j) = reps[static_cast<std::size_t>(j)].u;
  DecompositionReport report =
      finish(t, std::move(u), k, config, power_iterations, true, total);
  lm_polish(t, report.cp, 200);
  report.residual = relative_residual(t, report.cp);
  return report;
}

}  // namespace scorefeat
