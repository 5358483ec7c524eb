#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scorefeat/density.hpp"
#include "scorefeat/features.hpp"
#include "scorefeat/rng.hpp"
#include "scorefeat/transfer.hpp"

using namespace scorefeat;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

}  // namespace

TEST_CASE("nonlinearity point values") {
  CHECK(apply_nonlinearity(Nonlinearity::kIdentity, 1.7) == 1.7);
  CHECK(apply_nonlinearity(Nonlinearity::kSigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(apply_nonlinearity(Nonlinearity::kTanh, 0.0) == 0.0);
  CHECK(apply_nonlinearity(Nonlinearity::kRelu, -3.0) == 0.0);
  CHECK(apply_nonlinearity(Nonlinearity::kRelu, 3.0) == 3.0);
  CHECK(apply_nonlinearity(Nonlinearity::kCube, 2.0) == 8.0);
  CHECK(parse_nonlinearity("sigmoid") == Nonlinearity::kSigmoid);
  CHECK_THROWS_AS(parse_nonlinearity("softplus"), std::invalid_argument);
  CHECK(nonlinearity_name(Nonlinearity::kTanh) == "tanh");
}

TEST_CASE("featurize computes sigma of projections") {
  FeatureMap map;
  map.components = Eigen::MatrixXd::Identity(3, 2);
  map.nonlinearity = Nonlinearity::kSigmoid;
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 0, -1, 5;
  const Eigen::MatrixXd f = featurize(map, x);
  REQUIRE(f.rows() == 2);
  REQUIRE(f.cols() == 2);
  CHECK(f(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(f(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-14));
  CHECK(f(1, 0) == doctest::Approx(0.5).epsilon(1e-14));

  // per-component scales multiply the feature after sigma
  map.scales = vec({2.0, 0.0});
  const Eigen::MatrixXd g = featurize(map, x);
  CHECK(g(0, 0) == doctest::Approx(2.0 / (1.0 + std::exp(-1.0))).epsilon(1e-14));
  CHECK(g(0, 1) == 0.0);
  CHECK(g(1, 0) == doctest::Approx(1.0).epsilon(1e-14));

  FeatureMap bad = map;
  bad.components.col(0) *= 3.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  Eigen::MatrixXd wrong(2, 4);
  wrong.setZero();
  CHECK_THROWS_AS(featurize(map, wrong), std::invalid_argument);
}

TEST_CASE("ridge head interpolates a linear target at tiny ridge") {
  Rng rng(5);
  const int n = 200, k = 4;
  Eigen::MatrixXd f(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) f(i, j) = rng.normal();
  const Eigen::VectorXd w = vec({1.0, -2.0, 0.5, 3.0});
  Eigen::MatrixXd y = f * w;
  y.array() += 0.7;  // intercept
  const RidgeHead head = fit_ridge_head(f, y, 1e-12);
  CHECK((head.weights.col(0) - w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(head.intercept[0] == doctest::Approx(0.7).epsilon(1e-6));
  const Eigen::MatrixXd pred = predict(head, f);
  CHECK(r_squared(pred, y) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("large ridge shrinks weights toward zero, keeps the mean") {
  Rng rng(7);
  Eigen::MatrixXd f(100, 2);
  Eigen::MatrixXd y(100, 1);
  for (int i = 0; i < 100; ++i) {
    f(i, 0) = rng.normal();
    f(i, 1) = rng.normal();
    y(i, 0) = f(i, 0) + 5.0;
  }
  const RidgeHead head = fit_ridge_head(f, y, 1e9);
  CHECK(head.weights.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(head.intercept[0] == doctest::Approx(y.col(0).mean()).epsilon(1e-6));
}

TEST_CASE("zero ridge on singular features throws with guidance") {
  Eigen::MatrixXd f(10, 2);
  for (int i = 0; i < 10; ++i) {
    f(i, 0) = i;
    f(i, 1) = 2.0 * i;  // collinear
  }
  const Eigen::MatrixXd y = f.col(0);
  CHECK_THROWS_AS(fit_ridge_head(f, y, 0.0), std::runtime_error);
  CHECK_NOTHROW(fit_ridge_head(f, y, 1e-8));
}

TEST_CASE("r_squared behavior") {
  Eigen::MatrixXd y(4, 1);
  y << 1, 2, 3, 4;
  CHECK(r_squared(y, y) == doctest::Approx(1.0));
  Eigen::MatrixXd mean_pred = Eigen::MatrixXd::Constant(4, 1, 2.5);
  CHECK(r_squared(mean_pred, y) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("transfer reweights a frozen mixture toward the target marginal") {
  std::vector<GaussianModel> comps;
  comps.emplace_back(vec({-6.0}), Eigen::MatrixXd::Identity(1, 1));
  comps.emplace_back(vec({6.0}), Eigen::MatrixXd::Identity(1, 1));
  const GaussianMixtureModel source(vec({0.5, 0.5}), comps);

  // target marginal: 80/20 split
  const GaussianMixtureModel target(vec({0.8, 0.2}), comps);
  const Eigen::MatrixXd draws = sample(DensityModel(target), 50000, 11);
  const TransferReport report = refit_mixture_weights(source, draws);
  CHECK(std::abs(report.model.weights()[0] - 0.8) < 0.02);
  CHECK(std::abs(report.model.weights()[1] - 0.2) < 0.02);
  CHECK(report.loglik_gain > 0.0);
  CHECK(report.weight_shift > 0.5);
  // components are untouched
  CHECK((report.model.components()[0].mean() - comps[0].mean()).norm() == 0.0);

  // refit on data matching the source is a near no-op
  const Eigen::MatrixXd same = sample(DensityModel(source), 50000, 12);
  const TransferReport noop = refit_mixture_weights(source, same);
  CHECK(noop.weight_shift < 0.02);
}

TEST_CASE("transfer floors a dead component instead of dropping it") {
  std::vector<GaussianModel> comps;
  comps.emplace_back(vec({0.0}), Eigen::MatrixXd::Identity(1, 1));
  comps.emplace_back(vec({1000.0}), Eigen::MatrixXd::Identity(1, 1));
  const GaussianMixtureModel source(vec({0.5, 0.5}), comps);
  const Eigen::MatrixXd draws = sample(DensityModel(GaussianModel(
                                           vec({0.0}), Eigen::MatrixXd::Identity(1, 1))),
                                       5000, 13);
  const TransferReport report = refit_mixture_weights(source, draws);
  CHECK(report.floored_component);
  CHECK(report.model.weights()[1] >= 0.9e-12);  // floor, then renormalized
  CHECK(report.model.weights()[1] < 1e-6);
  CHECK(report.model.weights().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("transfer rejects dimension mismatch and empty input") {
  std::vector<GaussianModel> comps;
  comps.emplace_back(vec({0.0, 0.0}), Eigen::MatrixXd::Identity(2, 2));
  const GaussianMixtureModel source(vec({1.0}), comps);
  CHECK_THROWS_AS(refit_mixture_weights(source, Eigen::MatrixXd::Zero(5, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(refit_mixture_weights(source, Eigen::MatrixXd(0, 2)),
                  std::invalid_argument);
}
