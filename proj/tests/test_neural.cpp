#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mecoff/neural.hpp"
#include "mecoff/rng.hpp"

using namespace mecoff;

namespace {

NetInput random_input(const NetConfig& cfg, int batch, Rng& rng) {
  NetInput in;
  in.scalars.resize(cfg.scalar_inputs(), batch);
  for (Eigen::Index j = 0; j < in.scalars.cols(); ++j)
    for (Eigen::Index i = 0; i < in.scalars.rows(); ++i)
      in.scalars(i, j) = rng.uniform01();
  in.hist.assign(cfg.t_step, Eigen::MatrixXd(cfg.num_edges, batch));
  for (auto& x : in.hist)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.uniform01();
  return in;
}

double weighted_sum_loss(const NetParams& p, const NetInput& in, const Eigen::MatrixXd& c) {
  return forward(p, in).cwiseProduct(c).sum();
}

}  // namespace

// ============================================================================
// Dueling recombination
// ============================================================================

TEST_CASE("dueling head arithmetic on crafted biases", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;  // two actions
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  NetParams p = zeros_like(cfg);
  p.adv_b2 << 1.0, 3.0;
  p.val_b2 << 0.0;
  Rng rng(1);
  Eigen::MatrixXd q = forward(p, random_input(cfg, 1, rng));
  CHECK_THAT(q(0, 0), Catch::Matchers::WithinAbs(-1.0, 1e-12));
  CHECK_THAT(q(1, 0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("equal advantages collapse the Q-values onto the state value", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  NetParams p = zeros_like(cfg);
  p.adv_b2.setConstant(7.5);
  p.val_b2 << 4.0;
  Rng rng(2);
  Eigen::MatrixXd q = forward(p, random_input(cfg, 3, rng));
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    for (Eigen::Index i = 0; i < q.rows(); ++i)
      CHECK_THAT(q(i, j), Catch::Matchers::WithinAbs(4.0, 1e-12));
}

TEST_CASE("mean Q equals the value head output on random nets", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 3;
  cfg.t_step = 4;
  cfg.lstm_hidden = 8;
  cfg.fc1 = 16;
  cfg.fc2 = 12;
  cfg.head_hidden = 8;
  Rng wrng(substream_seed(11, Stream::weights));
  Rng irng(substream_seed(11, Stream::instance));
  for (int rep = 0; rep < 100; ++rep) {
    NetParams p = init_params(cfg, wrng);
    ForwardTrace trace;
    Eigen::MatrixXd q = forward(p, random_input(cfg, 2, irng), &trace);
    for (Eigen::Index j = 0; j < q.cols(); ++j)
      CHECK_THAT(q.col(j).mean(),
                 Catch::Matchers::WithinAbs(trace.value(0, j), 1e-6));
  }
}

// ============================================================================
// LSTM behavior
// ============================================================================

TEST_CASE("zero history with zero biases leaves the hidden state at zero", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 5;
  cfg.lstm_hidden = 6;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng rng(substream_seed(3, Stream::weights));
  NetParams p = init_params(cfg, rng);
  p.lstm_b.setZero();  // clear the forget-bias default for the symmetry check
  NetInput in;
  in.scalars = Eigen::MatrixXd::Random(cfg.scalar_inputs(), 2);
  in.hist.assign(cfg.t_step, Eigen::MatrixXd::Zero(cfg.num_edges, 2));
  ForwardTrace trace;
  forward(p, in, &trace);
  CHECK(trace.concat.topRows(cfg.lstm_hidden).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward is a pure function of parameters and input", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng wrng(substream_seed(5, Stream::weights));
  Rng irng(substream_seed(5, Stream::instance));
  NetParams p = init_params(cfg, wrng);
  NetInput in = random_input(cfg, 4, irng);
  Eigen::MatrixXd q1 = forward(p, in);
  Eigen::MatrixXd q2 = forward(p, in);
  CHECK(q1 == q2);
}

TEST_CASE("forward validates input shapes", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng rng(7);
  NetParams p = init_params(cfg, rng);
  NetInput in = random_input(cfg, 2, rng);
  in.scalars.conservativeResize(in.scalars.rows() + 1, Eigen::NoChange);
  CHECK_THROWS_AS(forward(p, in), std::invalid_argument);
  NetInput in2 = random_input(cfg, 2, rng);
  in2.hist.pop_back();
  CHECK_THROWS_AS(forward(p, in2), std::invalid_argument);
}

// ============================================================================
// Gradients
// ============================================================================

TEST_CASE("backward of a zero loss gradient is zero", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng rng(substream_seed(9, Stream::weights));
  NetParams p = init_params(cfg, rng);
  ForwardTrace trace;
  NetInput in = random_input(cfg, 3, rng);
  forward(p, in, &trace);
  NetParams g = backward(p, trace, Eigen::MatrixXd::Zero(cfg.num_actions(), 3));
  for_each_param(
      [](const char*, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        if (m.size() > 0) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
      },
      g);
}

TEST_CASE("identical traces give identical gradients", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng rng(substream_seed(13, Stream::weights));
  NetParams p = init_params(cfg, rng);
  NetInput in = random_input(cfg, 2, rng);
  ForwardTrace t1, t2;
  forward(p, in, &t1);
  forward(p, in, &t2);
  Eigen::MatrixXd dq = Eigen::MatrixXd::Random(cfg.num_actions(), 2);
  NetParams g1 = backward(p, t1, dq);
  NetParams g2 = backward(p, t2, dq);
  for_each_param(
      [](const char*, const Eigen::Ref<const Eigen::MatrixXd>& a,
         const Eigen::Ref<const Eigen::MatrixXd>& b) { CHECK(a == b); },
      g1, g2);
}

TEST_CASE("every parameter group passes a central finite-difference check", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 8;
  Rng wrng(substream_seed(21, Stream::weights));
  Rng irng(substream_seed(21, Stream::instance));
  NetParams p = init_params(cfg, wrng);
  NetInput in = random_input(cfg, 3, irng);
  Eigen::MatrixXd c = Eigen::MatrixXd::Random(cfg.num_actions(), 3);

  ForwardTrace trace;
  forward(p, in, &trace);
  NetParams analytic = backward(p, trace, c);

  const double step = 1e-4;
  double worst = 0.0;
  for_each_param(
      [&](const char* name, Eigen::Ref<Eigen::MatrixXd> w,
          const Eigen::Ref<const Eigen::MatrixXd>& g) {
        for (Eigen::Index j = 0; j < w.cols(); ++j)
          for (Eigen::Index i = 0; i < w.rows(); ++i) {
            double saved = w(i, j);
            w(i, j) = saved + step;
            double plus = weighted_sum_loss(p, in, c);
            w(i, j) = saved - step;
            double minus = weighted_sum_loss(p, in, c);
            w(i, j) = saved;
            double fd = (plus - minus) / (2.0 * step);
            double rel = std::abs(fd - g(i, j)) /
                         std::max({1e-6, std::abs(fd), std::abs(g(i, j))});
            worst = std::max(worst, rel);
            if (rel > 1e-3) {
              INFO(name << "(" << i << "," << j << "): fd=" << fd << " bp=" << g(i, j));
              REQUIRE(rel <= 1e-3);
            }
          }
      },
      p, analytic);
  CHECK(worst <= 1e-3);
}

// ============================================================================
// Optimizer steps
// ============================================================================

TEST_CASE("zero learning rate leaves parameters unchanged", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  Rng rng(31);
  NetParams p = init_params(cfg, rng);
  NetParams before = clone_params(p);
  NetParams g = zeros_like(cfg);
  g.fc1_w.setConstant(3.0);
  sgd_step(p, g, 0.0);
  CHECK(p.fc1_w == before.fc1_w);
}

TEST_CASE("one descent step on a scalar quadratic", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  NetParams p = zeros_like(cfg);
  p.val_b2(0) = 1.0;  // w = 1, f(w) = w^2
  NetParams g = zeros_like(cfg);
  g.val_b2(0) = 2.0 * p.val_b2(0);
  sgd_step(p, g, 0.1);
  CHECK_THAT(p.val_b2(0), Catch::Matchers::WithinAbs(0.8, 1e-12));
}

TEST_CASE("descent on a convex quadratic decreases the loss monotonically", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  NetParams p = zeros_like(cfg);
  p.val_b2(0) = 5.0;
  double target = 3.0;
  double prev = (p.val_b2(0) - target) * (p.val_b2(0) - target);
  for (int step = 0; step < 200; ++step) {
    NetParams g = zeros_like(cfg);
    g.val_b2(0) = 2.0 * (p.val_b2(0) - target);
    sgd_step(p, g, 0.05);
    double loss = (p.val_b2(0) - target) * (p.val_b2(0) - target);
    CHECK(loss <= prev);
    prev = loss;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("non-finite gradients are rejected with a diagnostic", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 1;
  cfg.t_step = 2;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 4;
  cfg.fc2 = 4;
  cfg.head_hidden = 4;
  NetParams p = zeros_like(cfg);
  NetParams g = zeros_like(cfg);
  g.fc2_w(0, 0) = std::nan("");
  CHECK_THROWS_WITH(sgd_step(p, g, 0.1), Catch::Matchers::ContainsSubstring("fc2_w"));
  AdamOptimizer adam(cfg);
  CHECK_THROWS_AS(adam.step(p, g, 0.1), std::runtime_error);
}

// ============================================================================
// Copy and serialization
// ============================================================================

TEST_CASE("copies are independent of later source mutations", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 2;
  cfg.t_step = 3;
  cfg.lstm_hidden = 4;
  cfg.fc1 = 8;
  cfg.fc2 = 8;
  cfg.head_hidden = 4;
  Rng rng(substream_seed(41, Stream::weights));
  NetParams src = init_params(cfg, rng);
  NetParams dst = zeros_like(cfg);
  copy_into(src, dst);
  NetInput in = random_input(cfg, 2, rng);
  CHECK(forward(src, in) == forward(dst, in));
  src.fc1_w.setConstant(9.0);
  CHECK(dst.fc1_w(0, 0) != 9.0);
  copy_into(src, dst);
  copy_into(src, dst);  // idempotent
  CHECK(forward(src, in) == forward(dst, in));
}

TEST_CASE("parameter blobs round-trip exactly", "[neural]") {
  NetConfig cfg;
  cfg.num_edges = 3;
  cfg.t_step = 4;
  cfg.lstm_hidden = 6;
  cfg.fc1 = 10;
  cfg.fc2 = 8;
  cfg.head_hidden = 5;
  Rng rng(substream_seed(43, Stream::weights));
  NetParams p = init_params(cfg, rng);
  std::string blob = serialize_params(p);
  NetParams q = deserialize_params(blob);
  NetInput in = random_input(cfg, 3, rng);
  CHECK(forward(p, in) == forward(q, in));

  std::string truncated = blob.substr(0, blob.size() / 2);
  CHECK_THROWS_AS(deserialize_params(truncated), std::runtime_error);
  std::string corrupt = blob;
  corrupt[0] = 'x';
  CHECK_THROWS_AS(deserialize_params(corrupt), std::runtime_error);
}
