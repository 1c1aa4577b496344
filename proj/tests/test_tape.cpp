#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "samkit/finite_diff.hpp"
#include "samkit/rng.hpp"
#include "samkit/tape.hpp"
#include "test_util.hpp"

using namespace samkit;
using samkit::test::max_rel_err;

namespace {

/// Builds a scalar root from a flat parameter vector; reports the parameter
/// leaves when asked so autodiff and finite differences see the same graph.
using Builder = std::function<Value(Tape&, std::span<const double>, std::vector<Value>*)>;

double max_grad_err_vs_fd(const Builder& build, const std::vector<double>& x0,
                          double h = 1e-5) {
  Tape tape;
  std::vector<Value> leaves;
  Value root = build(tape, x0, &leaves);
  tape.backward(root);
  std::vector<double> analytic;
  for (const Value& v : leaves) {
    for (double g : v.grad().data) analytic.push_back(g);
  }

  const auto f = [&](std::span<const double> x) {
    Tape t;
    return build(t, x, nullptr).item();
  };
  const auto fd = finite_diff_grad(f, x0, h);
  REQUIRE(fd.size() == analytic.size());
  return max_rel_err(analytic, fd);
}

}  // namespace

TEST_CASE("relu and log_softmax forward values") {
  Tape tape;
  Value r = tape.relu(tape.leaf(Array({3}, {-1.0, 0.0, 2.5})));
  CHECK(r.data().data == std::vector<double>{0.0, 0.0, 2.5});

  Value ls = tape.log_softmax(tape.leaf(Array({2}, {0.0, 0.0})));
  CHECK(ls.data().data[0] == doctest::Approx(-std::numbers::ln2).epsilon(1e-12));
  CHECK(ls.data().data[1] == doctest::Approx(-std::numbers::ln2).epsilon(1e-12));
}

TEST_CASE("log_softmax stays finite across the working range") {
  Tape tape;
  Value ls = tape.log_softmax(tape.leaf(Array({2, 2}, {700.0, -700.0, -700.0, 700.0})));
  CHECK(all_finite(ls.data().data));
  // rows are extreme but normalized: exp of the entries sums to 1
  const double p0 = std::exp(ls.data().at(0, 0)) + std::exp(ls.data().at(0, 1));
  CHECK(p0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("matmul identity passthrough") {
  Tape tape;
  Value eye = tape.leaf(Array({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  Value m = tape.leaf(Array({2, 2}, {3.0, 4.0, 5.0, 6.0}));
  Value out = tape.matmul(eye, m);
  CHECK(out.data().data == std::vector<double>{3.0, 4.0, 5.0, 6.0});
}

TEST_CASE("shape mismatches are rejected with a diagnostic") {
  Tape tape;
  Value a = tape.leaf(Array({2, 3}));
  Value b = tape.leaf(Array({2, 2}));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b),
                       "matmul: incompatible shapes (2, 3) and (2, 2)",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(tape.sub(a, b), "sub: incompatible shapes (2, 3) and (2, 2)",
                       std::invalid_argument);
  CHECK_THROWS_AS(tape.add(a, b), std::invalid_argument);
}

TEST_CASE("stop_grad passes data and blocks gradients") {
  SUBCASE("data passthrough") {
    Tape tape;
    Value v = tape.leaf(Array({2}, {0.2, 0.8}), true);
    Value s = tape.stop_grad(v);
    CHECK(s.data().data == v.data().data);
    CHECK_FALSE(s.requires_grad());
  }

  SUBCASE("x dot stop_grad(x) differentiates only the live factor") {
    Tape tape;
    Value x = tape.leaf(Array({1}, {3.0}), true);
    Value y = tape.matmul(x, tape.stop_grad(x));
    tape.backward(y);
    CHECK(x.grad().data[0] == doctest::Approx(3.0).epsilon(1e-15));  // not 6
  }

  SUBCASE("gradient through stop_grad alone is zero") {
    Tape tape;
    Value x = tape.leaf(Array({3}, {1.0, -2.0, 0.5}), true);
    Value root = tape.sum(tape.stop_grad(x));
    tape.backward(root);
    CHECK(x.grad().data == std::vector<double>{0.0, 0.0, 0.0});
  }
}

TEST_CASE("backward on analytic cases") {
  SUBCASE("sum of squares via the dot product") {
    Tape tape;
    Value x = tape.leaf(Array({3}, {1.0, 2.0, 3.0}), true);
    Value root = tape.matmul(x, x);
    tape.backward(root);
    CHECK(x.grad().data == std::vector<double>{2.0, 4.0, 6.0});
  }

  SUBCASE("mean spreads the gradient uniformly") {
    Tape tape;
    Value x = tape.leaf(Array({4}, {5.0, -1.0, 2.0, 0.0}), true);
    tape.backward(tape.mean(x));
    CHECK(x.grad().data == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  }

  SUBCASE("non-scalar root is rejected") {
    Tape tape;
    Value x = tape.leaf(Array({3}, {1.0, 2.0, 3.0}), true);
    CHECK_THROWS_WITH_AS(tape.backward(x), "backward: root must be scalar, got shape (3)",
                         std::invalid_argument);
  }

  SUBCASE("repeated backward accumulates into leaf gradients") {
    Tape tape;
    Value x = tape.leaf(Array({2}, {1.0, 2.0}), true);
    Value root = tape.sum(x);
    tape.backward(root);
    tape.backward(root);
    CHECK(x.grad().data == std::vector<double>{2.0, 2.0});
  }
}

TEST_CASE("gather_class picks and scatters per row") {
  Tape tape;
  Value z = tape.leaf(Array({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0}), true);
  Value g = tape.gather_class(z, {2, 0});
  CHECK(g.data().data == std::vector<double>{3.0, 4.0});
  tape.backward(tape.sum(g));
  CHECK(z.grad().data == std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0, 0.0});

  Tape other;
  Value bad = other.leaf(Array({2, 3}));
  CHECK_THROWS_AS(other.gather_class(bad, {3, 0}), std::invalid_argument);
  CHECK_THROWS_AS(other.gather_class(bad, {0}), std::invalid_argument);
}

TEST_CASE("finite_diff_grad basics") {
  SUBCASE("quadratic") {
    const auto f = [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s;
    };
    const auto g = finite_diff_grad(f, std::vector<double>{1.0, 2.0}, 1e-5);
    CHECK(std::abs(g[0] - 2.0) < 1e-8);
    CHECK(std::abs(g[1] - 4.0) < 1e-8);
  }

  SUBCASE("constant function") {
    const auto f = [](std::span<const double>) { return 7.5; };
    const auto g = finite_diff_grad(f, std::vector<double>{0.3, -0.2, 9.0}, 1e-5);
    for (double v : g) CHECK(std::abs(v) < 1e-10);
  }

  SUBCASE("non-finite evaluations name the coordinate") {
    // f is finite at the base point but the minus-step at coordinate 1 goes
    // through log of a negative number
    const auto f = [](std::span<const double> x) { return std::log(x[1]); };
    CHECK_THROWS_WITH_AS(
        finite_diff_grad(f, std::vector<double>{1.0, 1e-6}, 1e-5),
        "finite_diff_grad: non-finite evaluation at coordinate 1", std::runtime_error);
  }

  SUBCASE("step must be positive") {
    const auto f = [](std::span<const double>) { return 0.0; };
    CHECK_THROWS_AS(finite_diff_grad(f, std::vector<double>{1.0}, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("per-primitive gradients match finite differences") {
  SUBCASE("broadcast bias add") {
    // params: 2x3 matrix then a 3-vector bias
    const Builder build = [](Tape& t, std::span<const double> x, std::vector<Value>* leaves) {
      Value m = t.leaf(Array({2, 3}, {x[0], x[1], x[2], x[3], x[4], x[5]}), true);
      Value b = t.leaf(Array({3}, {x[6], x[7], x[8]}), true);
      if (leaves) *leaves = {m, b};
      return t.mean(t.relu(t.add(m, b)));
    };
    const std::vector<double> x0{0.3, -0.7, 1.2, 0.9, -0.1, 0.4, 0.2, -0.5, 0.8};
    CHECK(max_grad_err_vs_fd(build, x0) < 1e-6);
  }

  SUBCASE("matmul both operands") {
    const Builder build = [](Tape& t, std::span<const double> x, std::vector<Value>* leaves) {
      Value a = t.leaf(Array({2, 2}, {x[0], x[1], x[2], x[3]}), true);
      Value b = t.leaf(Array({2, 2}, {x[4], x[5], x[6], x[7]}), true);
      if (leaves) *leaves = {a, b};
      return t.sum(t.matmul(a, b));
    };
    const std::vector<double> x0{0.5, -1.0, 2.0, 0.25, 1.5, -0.5, 0.75, 1.0};
    CHECK(max_grad_err_vs_fd(build, x0) < 1e-6);
  }

  SUBCASE("log_softmax with gather") {
    const Builder build = [](Tape& t, std::span<const double> x, std::vector<Value>* leaves) {
      Value z = t.leaf(Array({2, 3}, std::vector<double>(x.begin(), x.end())), true);
      if (leaves) *leaves = {z};
      return t.mean(t.gather_class(t.log_softmax(z), {1, 2}));
    };
    const std::vector<double> x0{0.2, -0.4, 1.1, -0.9, 0.3, 0.6};
    CHECK(max_grad_err_vs_fd(build, x0) < 1e-6);
  }

  SUBCASE("scale by constant array and subtraction") {
    const Builder build = [](Tape& t, std::span<const double> x, std::vector<Value>* leaves) {
      Value a = t.leaf(Array({4}, {x[0], x[1], x[2], x[3]}), true);
      Value b = t.leaf(Array({4}, {x[4], x[5], x[6], x[7]}), true);
      if (leaves) *leaves = {a, b};
      Value diff = t.sub(a, b);
      return t.sum(t.scale(t.scale(diff, Array({4}, {0.5, -1.5, 2.0, 0.1})), 3.0));
    };
    const std::vector<double> x0{1.0, 2.0, 3.0, 4.0, 0.5, 0.25, -0.75, 2.5};
    CHECK(max_grad_err_vs_fd(build, x0) < 1e-6);
  }
}

TEST_CASE("random composite expressions match finite differences") {
  // Property over the primitive set: random MLP-like chains with a few
  // hundred parameters, gradient agreement to 1e-6 relative per coordinate.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(3);       // batch rows
    const std::size_t d0 = 2 + rng.below(4);      // input width
    const std::size_t d1 = 2 + rng.below(5);      // hidden width
    const std::size_t d2 = 2 + rng.below(3);      // output width
    const std::size_t depth = 1 + rng.below(3);   // extra elementwise stages

    std::vector<std::size_t> gather(n);
    for (std::size_t i = 0; i < n; ++i) gather[i] = rng.below(d2);
    std::vector<double> consts;
    for (std::size_t i = 0; i < depth; ++i) consts.push_back(rng.uniform() * 2.0 - 1.0);

    const std::size_t param_count = n * d0 + d0 * d1 + d1 + d1 * d2;
    std::vector<double> x0(param_count);
    for (double& v : x0) v = rng.normal() * 0.8;

    const Builder build = [&](Tape& t, std::span<const double> x, std::vector<Value>* leaves) {
      std::size_t off = 0;
      const auto take = [&](Shape shape) {
        const std::size_t sz = numel(shape);
        Array arr(std::move(shape), std::vector<double>(x.begin() + off, x.begin() + off + sz));
        off += sz;
        return t.leaf(std::move(arr), true);
      };
      Value input = take({n, d0});
      Value w1 = take({d0, d1});
      Value b1 = take({d1});
      Value w2 = take({d1, d2});
      if (leaves) *leaves = {input, w1, b1, w2};

      Value h = t.relu(t.add(t.matmul(input, w1), b1));
      Value z = t.matmul(h, w2);
      for (std::size_t i = 0; i < depth; ++i) {
        z = i % 2 == 0 ? t.scale(z, consts[i]) : t.add(z, z);
      }
      return t.mean(t.gather_class(t.log_softmax(z), gather));
    };

    CHECK(max_grad_err_vs_fd(build, x0) < 1e-6);
  }
}
