#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "scorefeat/tensor.hpp"

namespace scorefeat {

/// Rank-k symmetric CP decomposition Σ_j λ_j u_j^{⊗m}: unit components,
/// weights sorted by descending |λ|, sign convention on the first
/// significant coordinate of each component.
struct CpModel {
  int order = 0;
  int dim = 0;
  int rank = 0;
  Eigen::VectorXd weights;     // k
  Eigen::MatrixXd components;  // d×k, columns unit norm

  void validate() const;
};

struct DecompositionReport {
  CpModel cp;
  double residual = 0.0;  // relative Frobenius reconstruction error
  int iterations_used = 0;
  int restarts_used = 0;
  bool converged = true;
};

/// Sorts by descending |λ| (ties broken by component coordinates) and flips
/// each component so its first coordinate with |value| > 1e-8 is positive;
/// for odd orders the flip is absorbed into the weight sign.
void canonicalize(CpModel& cp);

/// Symmetric eigendecomposition, top-k pairs by |eigenvalue|.
DecompositionReport decompose_matrix(const SymmetricTensor& m2, int k);

struct WhitenResult {
  Eigen::MatrixXd w;            // d×k, Wᵀ·M2·W = I_k
  Eigen::MatrixXd unwhiten;     // d×k, (Wᵀ)⁺ = V_k·D_k^{1/2}
  Eigen::VectorXd eigenvalues;  // top-k, descending
};

/// W = V_k·D_k^{-1/2} from the top-k eigendecomposition; requires the top-k
/// eigenvalues positive.
WhitenResult whiten(const SymmetricTensor& m2, int k);

struct PowerConfig {
  int max_iter = 200;   // per restart
  double tol = 1e-10;   // deviation of successive-iterate |dot| from 1
  int restarts = 30;    // per component (undercomplete) or ·k total (overcomplete)
  std::uint64_t seed = 0;
  int refine_sweeps = 100;  // ALS polish after the power stage
};

/// Order-3 symmetric CP via the tensor power method.
///   k ≤ d with m2: whiten, power iterations + deflation in whitened space,
///     un-whiten through the pseudo-inverse map.
///   k ≤ d without m2: power iterations + deflation on the raw tensor
///     (orthogonal-component regime).
///   k > d: restarts·k independent iterations on the raw tensor, candidates
///     clustered at |⟨·,·⟩| ≥ 0.99, top-k clusters by |λ|, joint ALS refine.
DecompositionReport tensor_power_method(const SymmetricTensor& t, int k,
                                        const PowerConfig& config,
                                        const SymmetricTensor* m2 = nullptr);

/// Alternating least-squares sweeps on the symmetric factorization; reverts
/// and stops if a sweep would increase the residual.
DecompositionReport als_refine(const SymmetricTensor& t, const CpModel& init,
                               int iterations);

/// Σ_j λ_j·u_j^{⊗m}.
SymmetricTensor reconstruct(const CpModel& cp);

}  // namespace scorefeat
