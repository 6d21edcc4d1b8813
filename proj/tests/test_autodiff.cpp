#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "topicrnn/autodiff.hpp"
#include "topicrnn/errors.hpp"
#include "topicrnn/numerics.hpp"
#include "topicrnn/tensor.hpp"

using namespace topicrnn;

namespace {

void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo, double hi,
                  double avoid = 0.0, double margin = 0.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (size_t i = 0; i < t.size(); ++i) {
    double v = dist(rng);
    while (margin > 0.0 && std::abs(std::abs(v) - avoid) < margin) {
      v = dist(rng);
    }
    t[i] = v;
  }
}

Tensor random_vector(std::mt19937_64& rng, size_t n, double lo = -1.5,
                     double hi = 1.5) {
  Tensor t({n});
  fill_uniform(t, rng, lo, hi);
  return t;
}

}  // namespace

TEST_CASE("softmax matches closed forms") {
  ParamStore store;
  Tape tape(&store, false);

  Tensor probs = tape.value(
      tape.softmax(tape.constant(Tensor::from_vector({0.0, 0.0, 0.0}))));
  for (size_t i = 0; i < 3; ++i) {
    CHECK(probs[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }

  Tensor skew = tape.value(
      tape.softmax(tape.constant(Tensor::from_vector({0.0, std::log(3.0)}))));
  CHECK(skew[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(skew[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax properties: normalization and shift invariance") {
  std::mt19937_64 rng(11);
  ParamStore store;
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape(&store, false);
    Tensor logits = random_vector(rng, 1 + trial % 7, -30.0, 30.0);
    Tensor base = tape.value(tape.softmax(tape.constant(logits)));
    double total = 0.0;
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK(base[i] > 0.0);
      total += base[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    double c = (trial - 25) * 3.7;
    Tensor shifted = logits;
    for (size_t i = 0; i < shifted.size(); ++i) shifted[i] += c;
    Tensor moved = tape.value(tape.softmax(tape.constant(shifted)));
    for (size_t i = 0; i < base.size(); ++i) {
      CHECK(moved[i] == doctest::Approx(base[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("softmax rejects NaN input") {
  ParamStore store;
  Tape tape(&store, false);
  Tensor bad = Tensor::from_vector({0.0, std::nan(""), 1.0});
  CHECK_THROWS_AS(tape.softmax(tape.constant(bad)), NumericError);
}

TEST_CASE("sigmoid closed forms and saturation") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(sigmoid(40.0) - 1.0) < 1e-12);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  // sigma(x) + sigma(-x) = 1
  for (double x : {-25.0, -3.0, -0.1, 0.7, 12.0}) {
    CHECK(sigmoid(x) + sigmoid(-x) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("backward: linear case gives all-ones gradient") {
  ParamStore store;
  Tensor& p = store.add("p", {5});
  for (size_t i = 0; i < p.size(); ++i) p[i] = 0.3 * i - 1.0;
  Tape tape(&store, true);
  tape.backward(tape.sum(tape.param("p")));
  const Tensor& g = store.grad("p");
  for (size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 1.0);
}

TEST_CASE("backward: unreachable parameter keeps zero gradient") {
  ParamStore store;
  store.add("used", {3}).fill(0.5);
  store.add("unused", {4}).fill(0.5);
  Tape tape(&store, true);
  Var loss = tape.sum(tape.tanh_(tape.param("used")));
  tape.param("unused");  // on the tape but not in the loss
  tape.backward(loss);
  const Tensor& g = store.grad("unused");
  for (size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("backward: softmax cross-entropy matches a by-hand central-difference oracle") {
  ParamStore store;
  Tensor& logits = store.add("logits", {3});
  logits[0] = 0.4;
  logits[1] = -1.1;
  logits[2] = 0.9;

  auto loss_value = [&]() {
    Tape tape(&store, false);
    Var nll = tape.scale(
        tape.pick(tape.log_softmax(tape.param("logits")), 1), -1.0);
    return tape.scalar(nll);
  };

  store.zero_grads();
  {
    Tape tape(&store, true);
    Var nll = tape.scale(
        tape.pick(tape.log_softmax(tape.param("logits")), 1), -1.0);
    tape.backward(nll);
  }
  const double h = 1e-5;
  for (size_t i = 0; i < 3; ++i) {
    double saved = logits[i];
    logits[i] = saved + h;
    double up = loss_value();
    logits[i] = saved - h;
    double down = loss_value();
    logits[i] = saved;
    double numeric = (up - down) / (2.0 * h);
    double analytic = store.grad("logits")[i];
    CHECK(std::abs(analytic - numeric) <=
          1e-6 * std::max({1.0, std::abs(analytic), std::abs(numeric)}));
  }
}

TEST_CASE("finite_difference_check: quadratic, constant, sine") {
  SUBCASE("theta squared at 3") {
    ParamStore store;
    store.add("theta", {})[0] = 3.0;
    auto report = finite_difference_check(
        [](Tape& t) { return t.mul(t.param("theta"), t.param("theta")); },
        store, 1e-4);
    CHECK(report.max_rel_error <= 1e-7);
    CHECK(store.grad("theta")[0] == doctest::Approx(6.0).epsilon(1e-10));
  }
  SUBCASE("constant function reports zero error") {
    ParamStore store;
    store.add("theta", {})[0] = 1.25;
    auto report = finite_difference_check(
        [](Tape& t) {
          t.param("theta");
          return t.constant_scalar(5.0);
        },
        store, 1e-4);
    CHECK(report.max_rel_error == 0.0);
  }
  SUBCASE("sine at zero") {
    ParamStore store;
    store.add("theta", {})[0] = 0.0;
    auto report = finite_difference_check(
        [](Tape& t) { return t.sin_(t.param("theta")); }, store, 1e-5);
    store.zero_grads();
    Tape tape(&store, true);
    Var loss = tape.sin_(tape.param("theta"));
    tape.backward(loss);
    CHECK(store.grad("theta")[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.max_rel_error <= 1e-8);
  }
  SUBCASE("step size outside the documented range is rejected") {
    ParamStore store;
    store.add("theta", {})[0] = 1.0;
    auto build = [](Tape& t) { return t.param("theta"); };
    CHECK_THROWS_AS(finite_difference_check(build, store, 1e-7), ConfigError);
    CHECK_THROWS_AS(finite_difference_check(build, store, 1e-2), ConfigError);
  }
}

TEST_CASE("every differentiable primitive passes the finite-difference suite") {
  std::mt19937_64 rng(42);
  const double tol = 1e-4;
  const double h = 1e-5;

  auto check_report = [&](const char* name, ParamStore& store,
                          const std::function<Var(Tape&)>& build) {
    auto report = finite_difference_check(build, store, h);
    INFO("primitive " << name << " worst " << report.worst_param << "["
                      << report.worst_index << "] analytic " << report.analytic
                      << " numeric " << report.numeric);
    CHECK(report.max_rel_error <= tol);
  };

  SUBCASE("matmul matrix-vector") {
    ParamStore store;
    fill_uniform(store.add("m", {7, 5}), rng, -1.5, 1.5);
    fill_uniform(store.add("x", {5}), rng, -1.5, 1.5);
    Tensor w = random_vector(rng, 7);
    check_report("matmul mv", store, [w](Tape& t) {
      return t.dot(t.matmul(t.param("m"), t.param("x")), t.constant(w));
    });
  }
  SUBCASE("matmul matrix-matrix") {
    ParamStore store;
    fill_uniform(store.add("a", {4, 6}), rng, -1.5, 1.5);
    fill_uniform(store.add("b", {6, 3}), rng, -1.5, 1.5);
    Tensor w({4, 3});
    fill_uniform(w, rng, -1.0, 1.0);
    check_report("matmul mm", store, [w](Tape& t) {
      return t.sum(t.mul(t.matmul(t.param("a"), t.param("b")), t.constant(w)));
    });
  }
  SUBCASE("matmul_tn") {
    ParamStore store;
    fill_uniform(store.add("m", {6, 8}), rng, -1.5, 1.5);
    fill_uniform(store.add("x", {6}), rng, -1.5, 1.5);
    Tensor w = random_vector(rng, 8);
    check_report("matmul_tn", store, [w](Tape& t) {
      return t.dot(t.matmul_tn(t.param("m"), t.param("x")), t.constant(w));
    });
  }
  SUBCASE("add sub mul smul scale") {
    ParamStore store;
    fill_uniform(store.add("a", {6}), rng, -1.5, 1.5);
    fill_uniform(store.add("b", {6}), rng, -1.5, 1.5);
    fill_uniform(store.add("s", {}), rng, -1.5, 1.5);
    Tensor w = random_vector(rng, 6);
    check_report("add", store, [w](Tape& t) {
      return t.dot(t.add(t.param("a"), t.param("b")), t.constant(w));
    });
    check_report("sub", store, [w](Tape& t) {
      return t.dot(t.sub(t.param("a"), t.param("b")), t.constant(w));
    });
    check_report("mul", store, [w](Tape& t) {
      return t.dot(t.mul(t.param("a"), t.param("b")), t.constant(w));
    });
    check_report("smul", store, [w](Tape& t) {
      return t.dot(t.smul(t.param("s"), t.param("a")), t.constant(w));
    });
    check_report("scale", store, [w](Tape& t) {
      return t.dot(t.scale(t.param("a"), -2.25), t.constant(w));
    });
  }
  SUBCASE("unary activations") {
    ParamStore store;
    fill_uniform(store.add("x", {8}), rng, -2.0, 2.0, 0.0, 0.01);
    Tensor w = random_vector(rng, 8);
    for (const char* op : {"tanh", "sigmoid", "relu", "exp", "sin",
                           "log_sigmoid"}) {
      std::string name = op;
      check_report(op, store, [name, w](Tape& t) {
        Var x = t.param("x");
        Var y;
        if (name == "tanh") y = t.tanh_(x);
        else if (name == "sigmoid") y = t.sigmoid_(x);
        else if (name == "relu") y = t.relu(x);
        else if (name == "exp") y = t.exp_(x);
        else if (name == "sin") y = t.sin_(x);
        else y = t.log_sigmoid_(x);
        return t.dot(y, t.constant(w));
      });
    }
  }
  SUBCASE("log on positive inputs") {
    ParamStore store;
    fill_uniform(store.add("x", {8}), rng, 0.5, 2.5);
    Tensor w = random_vector(rng, 8);
    check_report("log", store, [w](Tape& t) {
      return t.dot(t.log_(t.param("x")), t.constant(w));
    });
  }
  SUBCASE("softmax and log_softmax") {
    ParamStore store;
    fill_uniform(store.add("x", {8}), rng, -2.0, 2.0);
    Tensor w = random_vector(rng, 8);
    check_report("softmax", store, [w](Tape& t) {
      return t.dot(t.softmax(t.param("x")), t.constant(w));
    });
    check_report("log_softmax", store, [w](Tape& t) {
      return t.dot(t.log_softmax(t.param("x")), t.constant(w));
    });
    check_report("pick of log_softmax", store, [](Tape& t) {
      return t.pick(t.log_softmax(t.param("x")), 3);
    });
  }
  SUBCASE("clamp away from its boundaries") {
    ParamStore store;
    Tensor& x = store.add("x", {8});
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (size_t i = 0; i < x.size(); ++i) {
      double v = dist(rng);
      while (std::abs(std::abs(v) - 1.0) < 0.01) v = dist(rng);
      x[i] = v;
    }
    Tensor w = random_vector(rng, 8);
    check_report("clamp", store, [w](Tape& t) {
      return t.dot(t.clamp(t.param("x"), -1.0, 1.0), t.constant(w));
    });
  }
  SUBCASE("concat row pick dot sum") {
    ParamStore store;
    fill_uniform(store.add("a", {5}), rng, -1.5, 1.5);
    fill_uniform(store.add("b", {3}), rng, -1.5, 1.5);
    fill_uniform(store.add("emb", {6, 4}), rng, -1.5, 1.5);
    Tensor w = random_vector(rng, 8);
    Tensor w4 = random_vector(rng, 4);
    check_report("concat", store, [w](Tape& t) {
      return t.dot(t.concat(t.param("a"), t.param("b")), t.constant(w));
    });
    check_report("row", store, [w4](Tape& t) {
      return t.dot(t.row(t.param("emb"), 2), t.constant(w4));
    });
    check_report("pick", store, [](Tape& t) {
      return t.pick(t.param("a"), 1);
    });
    check_report("dot", store, [](Tape& t) {
      return t.dot(t.param("a"), t.param("a"));
    });
    check_report("sum", store, [](Tape& t) {
      return t.sum(t.param("emb"));
    });
  }
}

TEST_CASE("backward is linear in the loss") {
  std::mt19937_64 rng(7);
  ParamStore store;
  fill_uniform(store.add("p", {6}), rng, -1.0, 1.0);
  const double a = 1.7;
  const double b = -0.45;

  auto f = [](Tape& t) { return t.sum(t.tanh_(t.param("p"))); };
  auto g = [](Tape& t) { return t.dot(t.param("p"), t.param("p")); };

  store.zero_grads();
  {
    Tape tape(&store, true);
    tape.backward(f(tape));
  }
  Tensor grad_f = store.grad("p");
  store.zero_grads();
  {
    Tape tape(&store, true);
    tape.backward(g(tape));
  }
  Tensor grad_g = store.grad("p");
  store.zero_grads();
  {
    Tape tape(&store, true);
    tape.backward(tape.add(tape.scale(f(tape), a), tape.scale(g(tape), b)));
  }
  const Tensor& combined = store.grad("p");
  for (size_t i = 0; i < combined.size(); ++i) {
    CHECK(std::abs(combined[i] - (a * grad_f[i] + b * grad_g[i])) <= 1e-10);
  }
}

TEST_CASE("detach cuts gradient flow") {
  ParamStore store;
  store.add("p", {3}).fill(0.7);
  Tape tape(&store, true);
  Var p = tape.param("p");
  Var cut = tape.detach(tape.tanh_(p));
  Var loss = tape.dot(cut, p);
  tape.backward(loss);
  // only the direct p path contributes: dloss/dp = tanh(0.7) per entry
  for (size_t i = 0; i < 3; ++i) {
    CHECK(store.grad("p")[i] == doctest::Approx(std::tanh(0.7)).epsilon(1e-12));
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradients leave parameters unchanged") {
    ParamStore store;
    store.add("p", {4}).fill(1.5);
    AdamState adam(store, {});
    Tensor before = store.param("p");
    adam.step(store);
    for (size_t i = 0; i < 4; ++i) CHECK(store.param("p")[i] == before[i]);
  }
  SUBCASE("single step matches the hand-computed update") {
    // m=0.1, v=0.001, bias-corrected to 1 and 1, so the step is
    // -lr * 1 / (1 + eps)
    ParamStore store;
    store.add("p", {})[0] = 0.0;
    store.grad("p")[0] = 1.0;
    AdamState adam(store, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
    adam.step(store);
    double expected = -1e-3 / (1.0 + 1e-8);
    CHECK(store.param("p")[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(store.param("p")[0] == doctest::Approx(-9.99999e-4).epsilon(1e-5));
    CHECK(store.grad("p")[0] == 0.0);  // gradients consumed
  }
  SUBCASE("two identical runs are bit-identical") {
    auto run = [](uint64_t seed) {
      std::mt19937_64 rng(seed);
      ParamStore store;
      fill_uniform(store.add("p", {8}), rng, -1.0, 1.0);
      AdamState adam(store, AdamConfig{0.01, 0.9, 0.999, 1e-8});
      for (int iter = 0; iter < 5; ++iter) {
        Tape tape(&store, true);
        tape.backward(tape.dot(tape.param("p"), tape.param("p")));
        adam.step(store);
      }
      return store.param("p");
    };
    Tensor a = run(3);
    Tensor b = run(3);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
  SUBCASE("lr = 0 is the identity") {
    ParamStore store;
    store.add("p", {3}).fill(0.25);
    store.grad("p").fill(2.0);
    AdamState adam(store, AdamConfig{0.0, 0.9, 0.999, 1e-8});
    adam.step(store);
    for (size_t i = 0; i < 3; ++i) CHECK(store.param("p")[i] == 0.25);
  }
}

TEST_CASE("clip_gradients") {
  ParamStore store;
  store.add("p", {2});
  SUBCASE("zero gradients clip to factor 1") {
    CHECK(store.clip_gradients(1.0) == 1.0);
    CHECK(store.grad("p")[0] == 0.0);
  }
  SUBCASE("3-4-5 vector scales to the unit sphere") {
    store.grad("p")[0] = 3.0;
    store.grad("p")[1] = 4.0;
    double factor = store.clip_gradients(1.0);
    CHECK(factor == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(store.grad("p")[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(store.grad("p")[1] == doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("below the threshold the factor is exactly 1") {
    store.grad("p")[0] = 0.3;
    store.grad("p")[1] = 0.4;
    CHECK(store.clip_gradients(5.0) == 1.0);
    CHECK(store.grad("p")[0] == 0.3);
  }
}
