#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "scorefeat/density.hpp"
#include "scorefeat/label_functions.hpp"
#include "scorefeat/tensor.hpp"

namespace scorefeat {

struct LabeledDataset {
  Eigen::MatrixXd inputs;  // N×d
  Eigen::MatrixXd labels;  // N×p, p = 1 for scalar labels

  int sample_count() const { return static_cast<int>(inputs.rows()); }
  int input_dim() const { return static_cast<int>(inputs.cols()); }
  int label_dim() const { return static_cast<int>(labels.cols()); }
  void validate() const;
};

enum class LabelTransform { kIdentity, kSquare, kCentered };

LabelTransform parse_label_transform(const std::string& name);
std::string label_transform_name(LabelTransform t);

struct CrossMomentReport {
  std::vector<SymmetricTensor> moments;  // one per label coordinate
  int sample_count = 0;
  std::vector<double> standard_error_estimate;  // per tensor
};

/// Empirical (1/N)·Σ g(y_i)·S_m(x_i) per label coordinate; `centered`
/// subtracts the label mean before weighting.
CrossMomentReport cross_moment(const LabeledDataset& data, const DensityModel& model,
                               int order, LabelTransform transform,
                               int threads = 1);

enum class OracleMode { kAnalytic, kFiniteDifference };

/// Monte-Carlo E[∇^{(m)}G(x)] over draws from `model`, the independent side
/// of the Stein identity.
SymmetricTensor derivative_oracle(const LabelFunction& g, const DensityModel& model,
                                  int order, int n_samples, std::uint64_t seed,
                                  OracleMode mode);

/// ‖lhs − rhs‖_F / max(‖rhs‖_F, 1e-300).
double stein_residual(const SymmetricTensor& lhs, const SymmetricTensor& rhs);

}  // namespace scorefeat
