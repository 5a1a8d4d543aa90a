// Dense network for the offloading Q-function: an LSTM over the load-history
// window, two ReLU layers, and dueling advantage/value heads recombined with
// mean-advantage subtraction. Forward, exact reverse-mode gradients
// (including backpropagation through time), and plain/adaptive gradient
// descent live here. Matrix arithmetic is Eigen; batches are column-major
// (one sample per column).
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "mecoff/rng.hpp"

namespace mecoff {

struct NetConfig {
  int num_edges = 5;
  int t_step = 10;
  int lstm_hidden = 32;
  int fc1 = 128;
  int fc2 = 64;
  int head_hidden = 32;

  int scalar_inputs() const { return 3 + num_edges; }
  int num_actions() const { return num_edges + 1; }

  void validate() const {
    if (num_edges < 0 || t_step <= 0 || lstm_hidden <= 0 || fc1 <= 0 || fc2 <= 0 ||
        head_hidden <= 0)
      throw std::invalid_argument("invalid network configuration");
  }
  bool operator==(const NetConfig& o) const {
    return num_edges == o.num_edges && t_step == o.t_step && lstm_hidden == o.lstm_hidden &&
           fc1 == o.fc1 && fc2 == o.fc2 && head_hidden == o.head_hidden;
  }
};

// All trainable weights and biases. Copy construction/assignment is the deep
// copy used for target-network synchronization.
struct NetParams {
  NetConfig cfg;
  Eigen::MatrixXd lstm_wx, lstm_wh;  // gate rows stacked [input; forget; output; candidate]
  Eigen::VectorXd lstm_b;
  Eigen::MatrixXd fc1_w;
  Eigen::VectorXd fc1_b;
  Eigen::MatrixXd fc2_w;
  Eigen::VectorXd fc2_b;
  Eigen::MatrixXd adv_w1;
  Eigen::VectorXd adv_b1;
  Eigen::MatrixXd adv_w2;
  Eigen::VectorXd adv_b2;
  Eigen::MatrixXd val_w1;
  Eigen::VectorXd val_b1;
  Eigen::MatrixXd val_w2;
  Eigen::VectorXd val_b2;
};

// Applies f(name, field_of_each_pack_member...) to every parameter tensor,
// in the fixed serialization order.
template <class F, class... P>
void for_each_param(F&& f, P&&... p) {
  f("lstm_wx", p.lstm_wx...);
  f("lstm_wh", p.lstm_wh...);
  f("lstm_b", p.lstm_b...);
  f("fc1_w", p.fc1_w...);
  f("fc1_b", p.fc1_b...);
  f("fc2_w", p.fc2_w...);
  f("fc2_b", p.fc2_b...);
  f("adv_w1", p.adv_w1...);
  f("adv_b1", p.adv_b1...);
  f("adv_w2", p.adv_w2...);
  f("adv_b2", p.adv_b2...);
  f("val_w1", p.val_w1...);
  f("val_b1", p.val_b1...);
  f("val_w2", p.val_w2...);
  f("val_b2", p.val_b2...);
}

inline NetParams zeros_like(const NetConfig& cfg) {
  cfg.validate();
  const int h = cfg.lstm_hidden;
  NetParams p;
  p.cfg = cfg;
  p.lstm_wx = Eigen::MatrixXd::Zero(4 * h, cfg.num_edges);
  p.lstm_wh = Eigen::MatrixXd::Zero(4 * h, h);
  p.lstm_b = Eigen::VectorXd::Zero(4 * h);
  p.fc1_w = Eigen::MatrixXd::Zero(cfg.fc1, h + cfg.scalar_inputs());
  p.fc1_b = Eigen::VectorXd::Zero(cfg.fc1);
  p.fc2_w = Eigen::MatrixXd::Zero(cfg.fc2, cfg.fc1);
  p.fc2_b = Eigen::VectorXd::Zero(cfg.fc2);
  p.adv_w1 = Eigen::MatrixXd::Zero(cfg.head_hidden, cfg.fc2);
  p.adv_b1 = Eigen::VectorXd::Zero(cfg.head_hidden);
  p.adv_w2 = Eigen::MatrixXd::Zero(cfg.num_actions(), cfg.head_hidden);
  p.adv_b2 = Eigen::VectorXd::Zero(cfg.num_actions());
  p.val_w1 = Eigen::MatrixXd::Zero(cfg.head_hidden, cfg.fc2);
  p.val_b1 = Eigen::VectorXd::Zero(cfg.head_hidden);
  p.val_w2 = Eigen::MatrixXd::Zero(1, cfg.head_hidden);
  p.val_b2 = Eigen::VectorXd::Zero(1);
  return p;
}

// Uniform [-1/sqrt(fan_in), +1/sqrt(fan_in)] weights, zero biases, and a
// forget-gate bias of one.
inline NetParams init_params(const NetConfig& cfg, Rng& rng) {
  NetParams p = zeros_like(cfg);
  auto fill = [&](Eigen::MatrixXd& w) {
    if (w.cols() == 0) return;
    double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        w(i, j) = (2.0 * rng.uniform01() - 1.0) * bound;
  };
  fill(p.lstm_wx);
  fill(p.lstm_wh);
  fill(p.fc1_w);
  fill(p.fc2_w);
  fill(p.adv_w1);
  fill(p.adv_w2);
  fill(p.val_w1);
  fill(p.val_w2);
  p.lstm_b.segment(cfg.lstm_hidden, cfg.lstm_hidden).setOnes();
  return p;
}

inline NetParams clone_params(const NetParams& src) { return src; }
inline void copy_into(const NetParams& src, NetParams& dst) { dst = src; }

// Batched, normalized network input.
struct NetInput {
  Eigen::MatrixXd scalars;            // scalar_inputs x batch
  std::vector<Eigen::MatrixXd> hist;  // t_step entries, each num_edges x batch

  Eigen::Index batch() const { return scalars.cols(); }
};

namespace detail {
inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
  return ((-z.array()).exp() + 1.0).inverse().matrix();
}
}  // namespace detail

// Cached activations of one forward pass, sufficient for exact gradients.
struct ForwardTrace {
  NetInput input;
  struct LstmStep {
    Eigen::MatrixXd i, f, o, g, tanh_c, c_prev, h_prev;
  };
  std::vector<LstmStep> steps;
  Eigen::MatrixXd concat;  // [last hidden; scalars]
  Eigen::MatrixXd a1, a2;  // post-ReLU
  Eigen::MatrixXd adv_h, val_h;
  Eigen::MatrixXd advantage;  // num_actions x batch
  Eigen::MatrixXd value;      // 1 x batch
};

// Q-values for a batch: num_actions x batch. When trace is non-null the
// activations needed by backward() are recorded.
inline Eigen::MatrixXd forward(const NetParams& p, const NetInput& input,
                               ForwardTrace* trace = nullptr) {
  const int h = p.cfg.lstm_hidden;
  const Eigen::Index batch = input.batch();
  if (input.scalars.rows() != p.cfg.scalar_inputs())
    throw std::invalid_argument("forward: scalar input rows mismatch");
  if (static_cast<int>(input.hist.size()) != p.cfg.t_step)
    throw std::invalid_argument("forward: history step count mismatch");
  for (const auto& x : input.hist)
    if (x.rows() != p.cfg.num_edges || x.cols() != batch)
      throw std::invalid_argument("forward: history row shape mismatch");

  if (trace) {
    trace->input = input;
    trace->steps.clear();
    trace->steps.reserve(input.hist.size());
  }

  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(h, batch);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(h, batch);
  for (const Eigen::MatrixXd& x : input.hist) {
    Eigen::MatrixXd z = p.lstm_wx * x + p.lstm_wh * h_prev;
    z.colwise() += p.lstm_b;
    Eigen::MatrixXd gi = detail::sigmoid(z.topRows(h));
    Eigen::MatrixXd gf = detail::sigmoid(z.middleRows(h, h));
    Eigen::MatrixXd go = detail::sigmoid(z.middleRows(2 * h, h));
    Eigen::MatrixXd gg = z.bottomRows(h).array().tanh().matrix();
    Eigen::MatrixXd c = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
    Eigen::MatrixXd tanh_c = c.array().tanh().matrix();
    Eigen::MatrixXd h_new = go.cwiseProduct(tanh_c);
    if (trace)
      trace->steps.push_back(ForwardTrace::LstmStep{gi, gf, go, gg, tanh_c, c_prev, h_prev});
    h_prev = std::move(h_new);
    c_prev = std::move(c);
  }

  Eigen::MatrixXd concat(h + p.cfg.scalar_inputs(), batch);
  concat.topRows(h) = h_prev;
  concat.bottomRows(p.cfg.scalar_inputs()) = input.scalars;

  Eigen::MatrixXd a1 = (p.fc1_w * concat).colwise() + p.fc1_b;
  a1 = a1.cwiseMax(0.0);
  Eigen::MatrixXd a2 = (p.fc2_w * a1).colwise() + p.fc2_b;
  a2 = a2.cwiseMax(0.0);

  Eigen::MatrixXd adv_h = ((p.adv_w1 * a2).colwise() + p.adv_b1).cwiseMax(0.0);
  Eigen::MatrixXd advantage = (p.adv_w2 * adv_h).colwise() + p.adv_b2;
  Eigen::MatrixXd val_h = ((p.val_w1 * a2).colwise() + p.val_b1).cwiseMax(0.0);
  Eigen::MatrixXd value = (p.val_w2 * val_h).colwise() + p.val_b2;

  Eigen::RowVectorXd adv_mean = advantage.colwise().mean();
  Eigen::MatrixXd q = advantage;
  q.rowwise() -= adv_mean;
  q.rowwise() += value.row(0);

  if (trace) {
    trace->concat = std::move(concat);
    trace->a1 = std::move(a1);
    trace->a2 = std::move(a2);
    trace->adv_h = std::move(adv_h);
    trace->val_h = std::move(val_h);
    trace->advantage = std::move(advantage);
    trace->value = std::move(value);
  }
  return q;
}

// Exact parameter gradients for a loss whose gradient with respect to the
// Q-value matrix is dq (num_actions x batch).
inline NetParams backward(const NetParams& p, const ForwardTrace& trace,
                          const Eigen::MatrixXd& dq) {
  const int h = p.cfg.lstm_hidden;
  if (dq.rows() != p.cfg.num_actions() || dq.cols() != trace.input.batch())
    throw std::invalid_argument("backward: loss gradient shape mismatch");
  NetParams g = zeros_like(p.cfg);

  auto relu_mask = [](const Eigen::MatrixXd& post) -> Eigen::MatrixXd {
    return (post.array() > 0.0).cast<double>();
  };

  // Dueling recombination.
  Eigen::RowVectorXd col_sum = dq.colwise().sum();
  Eigen::MatrixXd d_value = col_sum;                 // 1 x batch
  Eigen::MatrixXd d_adv = dq;
  d_adv.rowwise() -= col_sum / static_cast<double>(p.cfg.num_actions());

  // Value head.
  g.val_w2 = d_value * trace.val_h.transpose();
  g.val_b2 = d_value.rowwise().sum();
  Eigen::MatrixXd d_val_h =
      (p.val_w2.transpose() * d_value).cwiseProduct(relu_mask(trace.val_h));
  g.val_w1 = d_val_h * trace.a2.transpose();
  g.val_b1 = d_val_h.rowwise().sum();

  // Advantage head.
  g.adv_w2 = d_adv * trace.adv_h.transpose();
  g.adv_b2 = d_adv.rowwise().sum();
  Eigen::MatrixXd d_adv_h =
      (p.adv_w2.transpose() * d_adv).cwiseProduct(relu_mask(trace.adv_h));
  g.adv_w1 = d_adv_h * trace.a2.transpose();
  g.adv_b1 = d_adv_h.rowwise().sum();

  // Shared trunk.
  Eigen::MatrixXd d_a2 = p.val_w1.transpose() * d_val_h + p.adv_w1.transpose() * d_adv_h;
  Eigen::MatrixXd d_z2 = d_a2.cwiseProduct(relu_mask(trace.a2));
  g.fc2_w = d_z2 * trace.a1.transpose();
  g.fc2_b = d_z2.rowwise().sum();
  Eigen::MatrixXd d_z1 =
      (p.fc2_w.transpose() * d_z2).cwiseProduct(relu_mask(trace.a1));
  g.fc1_w = d_z1 * trace.concat.transpose();
  g.fc1_b = d_z1.rowwise().sum();
  Eigen::MatrixXd d_concat = p.fc1_w.transpose() * d_z1;

  // Backpropagation through time.
  Eigen::MatrixXd d_h = d_concat.topRows(h);
  Eigen::MatrixXd d_c = Eigen::MatrixXd::Zero(h, trace.input.batch());
  for (int t = static_cast<int>(trace.steps.size()) - 1; t >= 0; --t) {
    const auto& s = trace.steps[t];
    Eigen::MatrixXd d_o = d_h.cwiseProduct(s.tanh_c);
    d_c += d_h.cwiseProduct(s.o).cwiseProduct(
        (1.0 - s.tanh_c.array().square()).matrix());
    Eigen::MatrixXd d_i = d_c.cwiseProduct(s.g);
    Eigen::MatrixXd d_f = d_c.cwiseProduct(s.c_prev);
    Eigen::MatrixXd d_g = d_c.cwiseProduct(s.i);

    Eigen::MatrixXd d_z(4 * h, trace.input.batch());
    d_z.topRows(h) = d_i.cwiseProduct(s.i).cwiseProduct((1.0 - s.i.array()).matrix());
    d_z.middleRows(h, h) = d_f.cwiseProduct(s.f).cwiseProduct((1.0 - s.f.array()).matrix());
    d_z.middleRows(2 * h, h) = d_o.cwiseProduct(s.o).cwiseProduct((1.0 - s.o.array()).matrix());
    d_z.bottomRows(h) = d_g.cwiseProduct((1.0 - s.g.array().square()).matrix());

    g.lstm_wx += d_z * trace.input.hist[t].transpose();
    g.lstm_wh += d_z * s.h_prev.transpose();
    g.lstm_b += d_z.rowwise().sum();

    d_h = p.lstm_wh.transpose() * d_z;
    d_c = d_c.cwiseProduct(s.f);
  }
  return g;
}

inline void require_finite(const NetParams& grads) {
  for_each_param(
      [](const char* name, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        if (!m.allFinite())
          throw std::runtime_error(std::string("non-finite gradient in ") + name);
      },
      grads);
}

// Plain gradient descent: params <- params - lr * grads.
inline void sgd_step(NetParams& params, const NetParams& grads, double learning_rate) {
  require_finite(grads);
  for_each_param(
      [learning_rate](const char*, Eigen::Ref<Eigen::MatrixXd> p,
                      const Eigen::Ref<const Eigen::MatrixXd>& g) {
        p -= learning_rate * g;
      },
      params, grads);
}

// First/second-moment adaptive variant behind the same step interface.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const NetConfig& cfg, double beta1 = 0.9, double beta2 = 0.999,
                         double eps = 1e-8)
      : m_(zeros_like(cfg)), v_(zeros_like(cfg)), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(NetParams& params, const NetParams& grads, double learning_rate) {
    require_finite(grads);
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, t_);
    double bc2 = 1.0 - std::pow(beta2_, t_);
    double b1 = beta1_, b2 = beta2_, eps = eps_;
    for_each_param(
        [&](const char*, Eigen::Ref<Eigen::MatrixXd> p,
            const Eigen::Ref<const Eigen::MatrixXd>& g, Eigen::Ref<Eigen::MatrixXd> m,
            Eigen::Ref<Eigen::MatrixXd> v) {
          m = b1 * m + (1.0 - b1) * g;
          v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
          p.array() -= learning_rate * (m.array() / bc1) /
                       ((v.array() / bc2).sqrt() + eps);
        },
        params, grads, m_, v_);
  }

 private:
  NetParams m_, v_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
};

// --- Flat, versioned binary dump of the parameters -------------------------

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw std::runtime_error("truncated parameter blob");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, sizeof v);
  pos += 4;
  return v;
}
}  // namespace detail

inline constexpr std::uint32_t kNetBlobMagic = 0x4d4e4554;  // "MNET"
inline constexpr std::uint32_t kNetBlobVersion = 1;

inline std::string serialize_params(const NetParams& p) {
  std::string out;
  detail::put_u32(out, kNetBlobMagic);
  detail::put_u32(out, kNetBlobVersion);
  for (int v : {p.cfg.num_edges, p.cfg.t_step, p.cfg.lstm_hidden, p.cfg.fc1, p.cfg.fc2,
                p.cfg.head_hidden})
    detail::put_u32(out, static_cast<std::uint32_t>(v));
  for_each_param(
      [&out](const char*, const Eigen::Ref<const Eigen::MatrixXd>& m) {
        detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
        detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
        out.append(reinterpret_cast<const char*>(m.data()),
                   static_cast<std::size_t>(m.size()) * sizeof(double));
      },
      p);
  return out;
}

inline NetParams deserialize_params(const std::string& blob, std::size_t* consumed = nullptr) {
  std::size_t pos = 0;
  if (detail::get_u32(blob, pos) != kNetBlobMagic)
    throw std::runtime_error("bad parameter blob magic");
  if (detail::get_u32(blob, pos) != kNetBlobVersion)
    throw std::runtime_error("unsupported parameter blob version");
  NetConfig cfg;
  cfg.num_edges = static_cast<int>(detail::get_u32(blob, pos));
  cfg.t_step = static_cast<int>(detail::get_u32(blob, pos));
  cfg.lstm_hidden = static_cast<int>(detail::get_u32(blob, pos));
  cfg.fc1 = static_cast<int>(detail::get_u32(blob, pos));
  cfg.fc2 = static_cast<int>(detail::get_u32(blob, pos));
  cfg.head_hidden = static_cast<int>(detail::get_u32(blob, pos));
  NetParams p = zeros_like(cfg);
  for_each_param(
      [&blob, &pos](const char* name, Eigen::Ref<Eigen::MatrixXd> m) {
        auto rows = detail::get_u32(blob, pos);
        auto cols = detail::get_u32(blob, pos);
        if (rows != static_cast<std::uint32_t>(m.rows()) ||
            cols != static_cast<std::uint32_t>(m.cols()))
          throw std::runtime_error(std::string("parameter blob shape mismatch in ") + name);
        std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
        if (pos + bytes > blob.size()) throw std::runtime_error("truncated parameter blob");
        std::memcpy(m.data(), blob.data() + pos, bytes);
        pos += bytes;
      },
      p);
  if (consumed) *consumed = pos;
  return p;
}

}  // namespace mecoff
