#pragma once

#include <Eigen/Dense>
#include <string>

namespace scorefeat {

enum class Nonlinearity { kIdentity, kSigmoid, kTanh, kRelu, kCube };

Nonlinearity parse_nonlinearity(const std::string& name);
std::string nonlinearity_name(Nonlinearity sigma);
double apply_nonlinearity(Nonlinearity sigma, double z);

/// Maps an input row x to k features σ(u_jᵀx).
struct FeatureMap {
  Eigen::MatrixXd components;  // d×k, columns unit norm
  Nonlinearity nonlinearity = Nonlinearity::kIdentity;
  Eigen::VectorXd scales;  // optional per-component scale (empty = none)

  void validate() const;
};

Eigen::MatrixXd featurize(const FeatureMap& map, const Eigen::MatrixXd& inputs);

/// Ridge regression head with intercept, closed-form normal equations.
struct RidgeHead {
  Eigen::MatrixXd weights;    // k×p
  Eigen::VectorXd intercept;  // p
};

RidgeHead fit_ridge_head(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                         double ridge);

Eigen::MatrixXd predict(const RidgeHead& head, const Eigen::MatrixXd& features);

/// 1 − SS_res/SS_tot, averaged over label columns.
double r_squared(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels);

}  // namespace scorefeat
