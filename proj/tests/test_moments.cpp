#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scorefeat/moments.hpp"
#include "scorefeat/numdiff.hpp"
#include "scorefeat/rng.hpp"

using namespace scorefeat;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

DensityModel standard_gaussian(int d) {
  return GaussianModel(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
}

LabeledDataset make_dataset(const DensityModel& model, const LabelFunction& g, int n,
                            std::uint64_t seed) {
  LabeledDataset data;
  data.inputs = sample(model, n, seed);
  data.labels.resize(n, 1);
  for (int i = 0; i < n; ++i) data.labels(i, 0) = eval(g, data.inputs.row(i).transpose());
  return data;
}

}  // namespace

TEST_CASE("stein identity: linear label, first-order moment") {
  // E[(wᵀx)·S_1(x)] = E[∇(wᵀx)] = w for a standard Gaussian
  const auto w = vec({1, -2, 0.5});
  const auto model = standard_gaussian(3);
  const auto data = make_dataset(model, LinearLabel{w}, 200000, 7);
  const auto report = cross_moment(data, model, 1, LabelTransform::kIdentity);
  REQUIRE(report.moments.size() == 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(report.moments[0].at({i}) - w[i]) < 0.02);
  }
  CHECK(report.sample_count == 200000);
}

TEST_CASE("stein identity: cubic network, third-order moment") {
  const int d = 4;
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(d, 2);
  const CubicNetworkLabel g{vec({1.0, -0.5}), u};
  const auto model = standard_gaussian(d);
  const auto data = make_dataset(model, LabelFunction(g), 200000, 11);
  const auto report = cross_moment(data, model, 3, LabelTransform::kIdentity);
  // oracle: E[∇³G] = 6·Σ_j a_j u_j^⊗3 exactly for a standard Gaussian
  SymmetricTensor want(3, d);
  want = add_scaled(want, sym_outer_power(u.col(0), 3), 6.0 * 1.0);
  want = add_scaled(want, sym_outer_power(u.col(1), 3), 6.0 * -0.5);
  CHECK(stein_residual(report.moments[0], want) < 0.05);
}

TEST_CASE("constant label gives a vanishing odd moment") {
  const auto model = standard_gaussian(3);
  LabeledDataset data;
  data.inputs = sample(model, 100000, 13);
  data.labels = Eigen::MatrixXd::Ones(100000, 1);
  for (int m = 1; m <= 3; ++m) {
    const auto report = cross_moment(data, model, m, LabelTransform::kIdentity);
    CHECK(frobenius_norm(report.moments[0]) <
          0.03 * std::sqrt(std::pow(3.0, m)));
  }
}

TEST_CASE("cross_moment is linear in the labels") {
  const auto model = standard_gaussian(2);
  LabeledDataset a, b, comb;
  a.inputs = b.inputs = comb.inputs = sample(model, 500, 17);
  Rng rng(18);
  a.labels.resize(500, 1);
  b.labels.resize(500, 1);
  for (int i = 0; i < 500; ++i) {
    a.labels(i, 0) = rng.normal();
    b.labels(i, 0) = rng.normal();
  }
  comb.labels = 2.0 * a.labels - 3.0 * b.labels;
  const auto ra = cross_moment(a, model, 2, LabelTransform::kIdentity);
  const auto rb = cross_moment(b, model, 2, LabelTransform::kIdentity);
  const auto rc = cross_moment(comb, model, 2, LabelTransform::kIdentity);
  const auto want = add_scaled(add_scaled(SymmetricTensor(2, 2), ra.moments[0], 2.0),
                               rb.moments[0], -3.0);
  for (std::size_t i = 0; i < want.values().size(); ++i) {
    CHECK(rc.moments[0].values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-10));
  }
}

TEST_CASE("vector labels produce one tensor per coordinate") {
  const auto model = standard_gaussian(2);
  LabeledDataset data;
  data.inputs = sample(model, 400, 21);
  data.labels.resize(400, 2);
  Rng rng(22);
  for (int i = 0; i < 400; ++i) {
    data.labels(i, 0) = rng.normal();
    data.labels(i, 1) = rng.normal();
  }
  const auto joint = cross_moment(data, model, 2, LabelTransform::kIdentity);
  REQUIRE(joint.moments.size() == 2);
  for (int c = 0; c < 2; ++c) {
    LabeledDataset single;
    single.inputs = data.inputs;
    single.labels = data.labels.col(c);
    const auto one = cross_moment(single, model, 2, LabelTransform::kIdentity);
    for (std::size_t i = 0; i < one.moments[0].values().size(); ++i) {
      CHECK(joint.moments[c].values()[i] == one.moments[0].values()[i]);
    }
  }
}

TEST_CASE("label transforms") {
  const auto model = standard_gaussian(1);
  LabeledDataset data;
  data.inputs = sample(model, 300, 25);
  data.labels = Eigen::MatrixXd::Constant(300, 1, 2.0);
  const auto sq = cross_moment(data, model, 1, LabelTransform::kSquare);
  LabeledDataset four = data;
  four.labels.setConstant(4.0);
  const auto id4 = cross_moment(four, model, 1, LabelTransform::kIdentity);
  CHECK(sq.moments[0].values()[0] == doctest::Approx(id4.moments[0].values()[0]));

  // centered transform kills a constant label exactly
  const auto cen = cross_moment(data, model, 1, LabelTransform::kCentered);
  CHECK(cen.moments[0].values()[0] == 0.0);

  CHECK_THROWS_AS(parse_label_transform("bogus"), std::invalid_argument);
  CHECK(parse_label_transform("square") == LabelTransform::kSquare);
  CHECK(label_transform_name(LabelTransform::kCentered) == "centered");
}

TEST_CASE("threaded accumulation is bit-identical to single-threaded") {
  const auto model = standard_gaussian(3);
  const auto data =
      make_dataset(model, LabelFunction(LinearLabel{vec({1, 2, 3})}), 10003, 31);
  const auto one = cross_moment(data, model, 3, LabelTransform::kIdentity, 1);
  const auto four = cross_moment(data, model, 3, LabelTransform::kIdentity, 4);
  for (std::size_t i = 0; i < one.moments[0].values().size(); ++i) {
    CHECK(one.moments[0].values()[i] == four.moments[0].values()[i]);
  }
}

TEST_CASE("derivative_oracle analytic vs finite-difference") {
  const int d = 3;
  const auto model = standard_gaussian(d);
  const SigmoidNetworkLabel g{vec({1.0, 0.5}), Eigen::MatrixXd::Identity(d, 2)};
  for (int m = 1; m <= 3; ++m) {
    const auto a = derivative_oracle(LabelFunction(g), model, m, 4000, 41, OracleMode::kAnalytic);
    const auto f = derivative_oracle(LabelFunction(g), model, m, 4000, 41,
                                     OracleMode::kFiniteDifference);
    // same draws, so the gap is pure finite-difference error
    CHECK(stein_residual(f, a) < 1e-3);
  }

  // linear label: exact oracle E[∇(wᵀx)] = w regardless of samples
  const auto lin = derivative_oracle(LabelFunction(LinearLabel{vec({2, -1, 0.5})}), model,
                                     1, 10, 43, OracleMode::kAnalytic);
  CHECK(lin.at({0}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(lin.at({1}) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("stein_residual basics") {
  const auto t = sym_outer_power(vec({1, 2}), 2);
  CHECK(stein_residual(t, t) == 0.0);
  const SymmetricTensor z(2, 2);
  CHECK(stein_residual(z, t) == doctest::Approx(1.0).epsilon(1e-15));
  // zero rhs guard: residual stays finite
  CHECK(std::isfinite(stein_residual(t, z)));
}

TEST_CASE("dataset validation") {
  LabeledDataset bad;
  bad.inputs = Eigen::MatrixXd::Zero(5, 2);
  bad.labels = Eigen::MatrixXd::Zero(4, 1);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.labels = Eigen::MatrixXd::Zero(5, 1);
  CHECK_NOTHROW(bad.validate());
  bad.labels(2, 0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  const auto model = standard_gaussian(3);
  CHECK_THROWS_AS(cross_moment(bad, model, 1, LabelTransform::kIdentity),
                  std::invalid_argument);
}
