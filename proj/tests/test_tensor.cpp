#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "scorefeat/io.hpp"
#include "scorefeat/rng.hpp"
#include "scorefeat/tensor.hpp"

using namespace scorefeat;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

Eigen::VectorXd random_vec(int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.normal();
  return x;
}

// brute-force loop oracle for u^⊗m entries
double outer_entry(const Eigen::VectorXd& u, std::vector<int> idx) {
  double p = 1.0;
  for (int i : idx) p *= u[i];
  return p;
}

}  // namespace

TEST_CASE("sym_outer_power basis and hand examples") {
  const auto t = sym_outer_power(vec({1, 0}), 2);
  CHECK(t.at({0, 0}) == 1.0);
  CHECK(t.at({0, 1}) == 0.0);
  CHECK(t.at({1, 0}) == 0.0);
  CHECK(t.at({1, 1}) == 0.0);

  const auto e1 = sym_outer_power(vec({1, 0}), 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(e1.at({i, j, k}) == (i == 0 && j == 0 && k == 0 ? 1.0 : 0.0));

  // oracle: elementwise products computed by an independent loop
  const auto u = vec({1, 2});
  const auto t2 = sym_outer_power(u, 2);
  CHECK(t2.at({0, 0}) == 1.0);
  CHECK(t2.at({0, 1}) == 2.0);
  CHECK(t2.at({1, 0}) == 2.0);
  CHECK(t2.at({1, 1}) == 4.0);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(t2.at({i, j}) == outer_entry(u, {i, j}));
}

TEST_CASE("sym_outer_power rejects bad input") {
  CHECK_THROWS_AS(sym_outer_power(vec({1, 2}), 5), std::invalid_argument);
  CHECK_THROWS_AS(sym_outer_power(vec({1, 2}), 0), std::invalid_argument);
  CHECK_THROWS_AS(sym_outer_power(Eigen::VectorXd(), 2), std::invalid_argument);
}

TEST_CASE("symmetrize examples") {
  // fixed point on symmetric input
  const auto t = sym_outer_power(random_vec(3, 1), 3);
  const auto s = symmetrize(3, 3, t.values());
  for (std::size_t i = 0; i < t.values().size(); ++i) CHECK(s.values()[i] == t.values()[i]);

  const std::vector<double> raw{0, 1, 0, 0};
  const auto m = symmetrize(2, 2, raw);
  CHECK(m.at({0, 1}) == 0.5);
  CHECK(m.at({1, 0}) == 0.5);
  CHECK(m.at({0, 0}) == 0.0);

  // e1⊗e1⊗e2: 1/3 at each of the three distinct permuted positions
  std::vector<double> raw3(8, 0.0);
  raw3[flat_index(std::vector<int>{0, 0, 1}, 2)] = 1.0;
  const auto s3 = symmetrize(3, 2, raw3);
  CHECK(s3.at({0, 0, 1}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s3.at({0, 1, 0}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s3.at({1, 0, 0}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(s3.at({0, 0, 0}) == 0.0);

  CHECK_THROWS_AS(symmetrize(2, 2, raw3), std::invalid_argument);
}

TEST_CASE("contract examples with brute-force oracle") {
  const auto u = vec({1, 2});
  const auto t = sym_outer_power(u, 3);
  const auto v = vec({1, 0});
  const auto c = contract(t, v, 2);
  // oracle: triple loop
  for (int j = 0; j < 2; ++j) {
    double want = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) want += outer_entry(u, {a, b, j}) * v[a] * v[b];
    CHECK(c.at({j}) == doctest::Approx(want).epsilon(1e-15));
  }
  CHECK(c.at({0}) == doctest::Approx(1.0));
  CHECK(c.at({1}) == doctest::Approx(2.0));

  // zero vector annihilates
  const auto z = contract(t, vec({0, 0}), 1);
  for (double e : z.values()) CHECK(e == 0.0);

  // identity matrix contracts to v
  const auto eye = SymmetricTensor::from_values(2, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto w = vec({3, -1, 2});
  const auto r = contract(eye, w, 1);
  for (int i = 0; i < 3; ++i) CHECK(r.at({i}) == w[i]);

  CHECK_THROWS_AS(contract(t, v, 4), std::invalid_argument);
  CHECK_THROWS_AS(contract(t, vec({1, 0, 0}), 1), std::invalid_argument);
}

TEST_CASE("contract is linear in v") {
  const auto t = symmetrize(3, 4, std::vector<double>(64, 0.0));
  Rng rng(7);
  std::vector<double> raw(64);
  for (double& e : raw) e = rng.normal();
  const auto ts = symmetrize(3, 4, raw);
  const auto v = random_vec(4, 8), w = random_vec(4, 9);
  const double a = 1.3, b = -0.7;
  const auto lhs = contract(ts, (a * v + b * w).eval(), 1);
  const auto rhs = add_scaled(contract(ts, v, 1), contract(ts, w, 1), 0.0);
  const auto rhs2 =
      add_scaled(add_scaled(SymmetricTensor(2, 4), contract(ts, v, 1), a), contract(ts, w, 1), b);
  for (std::size_t i = 0; i < lhs.values().size(); ++i) {
    CHECK(lhs.values()[i] == doctest::Approx(rhs2.values()[i]).epsilon(1e-12));
  }
  (void)t;
  (void)rhs;
}

TEST_CASE("multilinear_transform maps outer powers and composes") {
  const auto u = random_vec(4, 11);
  Rng rng(12);
  Eigen::MatrixXd w(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = rng.normal();

  // identity leaves the tensor unchanged
  const auto t = sym_outer_power(u, 3);
  const auto same = multilinear_transform(t, Eigen::MatrixXd::Identity(4, 4));
  for (std::size_t i = 0; i < t.values().size(); ++i) CHECK(same.values()[i] == t.values()[i]);

  // scaling: c·I on an order-3 tensor multiplies by c³
  const auto scaled = multilinear_transform(t, (2.0 * Eigen::MatrixXd::Identity(4, 4)).eval());
  for (std::size_t i = 0; i < t.values().size(); ++i) {
    CHECK(scaled.values()[i] == doctest::Approx(8.0 * t.values()[i]).epsilon(1e-12));
  }

  // u^⊗3 maps to (Wᵀu)^⊗3, checked entrywise against the loop oracle
  const auto mapped = multilinear_transform(t, w);
  const Eigen::VectorXd wu = w.transpose() * u;
  const auto want = sym_outer_power(wu, 3);
  for (std::size_t i = 0; i < mapped.values().size(); ++i) {
    CHECK(mapped.values()[i] == doctest::Approx(want.values()[i]).epsilon(1e-12));
  }

  // composition: transform by W then V equals transform by W·V
  Eigen::MatrixXd v(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) v(i, j) = rng.normal();
  const auto two_step = multilinear_transform(multilinear_transform(t, w), v);
  const auto one_step = multilinear_transform(t, (w * v).eval());
  for (std::size_t i = 0; i < two_step.values().size(); ++i) {
    CHECK(two_step.values()[i] ==
          doctest::Approx(one_step.values()[i]).epsilon(1e-10));
  }

  CHECK_THROWS_AS(multilinear_transform(t, v), std::invalid_argument);
}

TEST_CASE("add_scaled, frobenius_norm, unfold") {
  const auto u = vec({3, 4});
  CHECK(frobenius_norm(sym_outer_power(u, 2)) == doctest::Approx(25.0).epsilon(1e-14));
  CHECK(frobenius_norm(SymmetricTensor(3, 4)) == 0.0);

  const auto t = sym_outer_power(random_vec(3, 21), 3);
  const auto z = add_scaled(t, t, -1.0);
  for (double e : z.values()) CHECK(e == 0.0);
  CHECK_THROWS_AS(add_scaled(t, SymmetricTensor(2, 3), 1.0), std::invalid_argument);

  const auto m = unfold(t);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 9);
  CHECK(m(1, 2 * 3 + 0) == t.at({1, 2, 0}));
}

TEST_CASE("norm power property and bit-exact symmetry") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng(100 + s);
    const int d = 2 + rng.index(9);
    const int m = 1 + rng.index(4);
    const auto u = random_vec(d, 200 + s);
    const auto t = sym_outer_power(u, m);
    CHECK(t.is_symmetric());
    CHECK(frobenius_norm(t) ==
          doctest::Approx(std::pow(u.norm(), m)).epsilon(1e-12));
    // round trip: symmetrize of an outer power returns it up to rounding in
    // the orbit average
    const auto rt = symmetrize(m, d, t.values());
    for (std::size_t i = 0; i < t.values().size(); ++i) {
      CHECK(rt.values()[i] == doctest::Approx(t.values()[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("tensor text format round trip") {
  const auto t = sym_outer_power(random_vec(3, 33), 3);
  const auto path = std::filesystem::temp_directory_path() / "scorefeat_test.tensor";
  save_tensor(t, path);
  const auto back = load_tensor(path);
  CHECK(back.order() == 3);
  CHECK(back.dim() == 3);
  for (std::size_t i = 0; i < t.values().size(); ++i) CHECK(back.values()[i] == t.values()[i]);
  std::filesystem::remove(path);
}
