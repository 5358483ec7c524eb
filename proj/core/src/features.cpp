#include "scorefeat/features.hpp"

#include <cmath>
#include <stdexcept>

namespace scorefeat {

Nonlinearity parse_nonlinearity(const std::string& name) {
  if (name == "identity") return Nonlinearity::kIdentity;
  if (name == "sigmoid") return Nonlinearity::kSigmoid;
  if (name == "tanh") return Nonlinearity::kTanh;
  if (name == "relu") return Nonlinearity::kRelu;
  if (name == "cube") return Nonlinearity::kCube;
  throw std::invalid_argument("unknown nonlinearity: " + name);
}

std::string nonlinearity_name(Nonlinearity sigma) {
  switch (sigma) {
    case Nonlinearity::kIdentity: return "identity";
    case Nonlinearity::kSigmoid: return "sigmoid";
    case Nonlinearity::kTanh: return "tanh";
    case Nonlinearity::kRelu: return "relu";
    default: return "cube";
  }
}

double apply_nonlinearity(Nonlinearity sigma, double z) {
  switch (sigma) {
    case Nonlinearity::kIdentity: return z;
    case Nonlinearity::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Nonlinearity::kTanh: return std::tanh(z);
    case Nonlinearity::kRelu: return z > 0.0 ? z : 0.0;
    default: return z * z * z;
  }
}

void FeatureMap::validate() const {
  if (components.cols() < 1) throw std::invalid_argument("FeatureMap: no components");
  for (Eigen::Index j = 0; j < components.cols(); ++j) {
    if (std::abs(components.col(j).norm() - 1.0) > 1e-10) {
      throw std::invalid_argument("FeatureMap: component " + std::to_string(j) +
                                  " not unit norm");
    }
  }
  if (scales.size() != 0 && scales.size() != components.cols()) {
    throw std::invalid_argument("FeatureMap: scale count mismatch");
  }
}

Eigen::MatrixXd featurize(const FeatureMap& map, const Eigen::MatrixXd& inputs) {
  map.validate();
  if (inputs.cols() != map.components.rows()) {
    throw std::invalid_argument("featurize: input dimension mismatch");
  }
  Eigen::MatrixXd z = inputs * map.components;  // N×k
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      double f = apply_nonlinearity(map.nonlinearity, z(i, j));
      if (map.scales.size() != 0) f *= map.scales[j];
      z(i, j) = f;
    }
  }
  return z;
}

RidgeHead fit_ridge_head(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labels,
                         double ridge) {
  if (ridge < 0.0) throw std::invalid_argument("ridge must be >= 0");
  if (features.rows() < 1 || features.rows() != labels.rows()) {
    throw std::invalid_argument("ridge head: feature/label row mismatch");
  }
  const Eigen::Index k = features.cols();
  const Eigen::VectorXd fmean = features.colwise().mean();
  const Eigen::VectorXd ymean = labels.colwise().mean();
  const Eigen::MatrixXd fc = features.rowwise() - fmean.transpose();
  const Eigen::MatrixXd yc = labels.rowwise() - ymean.transpose();
  Eigen::MatrixXd gram = fc.transpose() * fc + ridge * Eigen::MatrixXd::Identity(k, k);
  if (ridge == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) {
      throw std::runtime_error("ridge head: singular normal equations; use ridge > 0");
    }
  }
  RidgeHead head;
  head.weights = gram.ldlt().solve(fc.transpose() * yc);
  head.intercept = ymean - head.weights.transpose() * fmean;
  return head;
}

Eigen::MatrixXd predict(const RidgeHead& head, const Eigen::MatrixXd& features) {
  if (features.cols() != head.weights.rows()) {
    throw std::invalid_argument("predict: feature dimension mismatch");
  }
  return (features * head.weights).rowwise() + head.intercept.transpose();
}

double r_squared(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& labels) {
  if (predictions.rows() != labels.rows() || predictions.cols() != labels.cols()) {
    throw std::invalid_argument("r_squared: shape mismatch");
  }
  const Eigen::VectorXd mean = labels.colwise().mean();
  const double ss_res = (labels - predictions).squaredNorm();
  const double ss_tot = (labels.rowwise() - mean.transpose()).squaredNorm();
  return 1.0 - ss_res / std::max(ss_tot, 1e-300);
}

}  // namespace scorefeat
