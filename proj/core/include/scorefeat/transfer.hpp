#pragma once

#include <Eigen/Dense>

#include "scorefeat/density.hpp"

namespace scorefeat {

struct TransferConfig {
  double tol = 1e-8;  // absolute log-likelihood gain per row
  int max_iter = 500;
};

struct TransferReport {
  GaussianMixtureModel model;   // same components, re-estimated weights
  double weight_shift = 0.0;    // ‖w_new − w_old‖₁
  double loglik_gain = 0.0;     // total over the new inputs
  bool floored_component = false;
};

/// Weight-only EM with frozen component means/covariances: the self-taught
/// transfer step, re-estimating the latent marginal on the new inputs.
/// Components whose total responsibility vanishes keep a 1e-12 weight floor.
TransferReport refit_mixture_weights(const GaussianMixtureModel& source,
                                     const Eigen::MatrixXd& new_inputs,
                                     const TransferConfig& config = {});

}  // namespace scorefeat
