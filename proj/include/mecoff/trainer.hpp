// Edge-side trainer: replay storage, double-DQN targets, loss minimization,
// and periodic target-network replacement, driven by uploaded experiences.
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mecoff/agent.hpp"
#include "mecoff/messages.hpp"
#include "mecoff/neural.hpp"
#include "mecoff/replay.hpp"
#include "mecoff/rng.hpp"

namespace mecoff {

enum class OptimizerKind { sgd, adam };

struct TrainerHyperparams {
  int batch_size = 32;
  std::size_t replay_capacity = 10000;
  int replace_threshold = 100;
  double discount = 0.9;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
};

struct TrainerState {
  NetParams eval_net;
  NetParams target_net;
  std::int64_t update_count = 0;
  int replace_threshold = 100;
  int batch_size = 32;
  double discount = 0.9;

  TrainerState(NetParams eval, NetParams target, int replace_thr, int batch, double gamma)
      : eval_net(std::move(eval)),
        target_net(std::move(target)),
        replace_threshold(replace_thr),
        batch_size(batch),
        discount(gamma) {
    if (discount <= 0.0 || discount > 1.0)
      throw std::invalid_argument("discount outside (0,1]");
    if (replace_threshold < 1) throw std::invalid_argument("replace threshold below one");
    if (batch_size < 1) throw std::invalid_argument("batch size below one");
  }
};

// Double-DQN targets for a batch: the bootstrap action is the eval-net argmin
// at the next state, its value comes from the target net. Terminal
// experiences contribute their cost only.
template <class ExpIter>
Eigen::VectorXd compute_targets(const TrainerState& trainer, ExpIter first, ExpIter last,
                                const Normalizer& norm) {
  auto count = static_cast<Eigen::Index>(std::distance(first, last));
  Eigen::VectorXd targets(count);
  std::vector<Observation> next_states;
  std::vector<Eigen::Index> bootstrap_cols;
  next_states.reserve(count);
  Eigen::Index col = 0;
  for (ExpIter it = first; it != last; ++it, ++col) {
    targets(col) = it->cost;
    if (!it->terminal) {
      next_states.push_back(it->next_state);
      bootstrap_cols.push_back(col);
    }
  }
  if (!next_states.empty()) {
    NetInput next_input = norm.batch(next_states.begin(), next_states.end());
    Eigen::MatrixXd q_eval = forward(trainer.eval_net, next_input);
    Eigen::MatrixXd q_target = forward(trainer.target_net, next_input);
    for (std::size_t k = 0; k < bootstrap_cols.size(); ++k) {
      int a_next = argmin_index(q_eval.col(static_cast<Eigen::Index>(k)));
      targets(bootstrap_cols[k]) +=
          trainer.discount * q_target(a_next, static_cast<Eigen::Index>(k));
    }
  }
  return targets;
}

inline double compute_target(const TrainerState& trainer, const Experience& e,
                             const Normalizer& norm) {
  return compute_targets(trainer, &e, &e + 1, norm)(0);
}

// Applies either optimizer behind one step interface.
class GradientStepper {
 public:
  GradientStepper(OptimizerKind kind, double learning_rate, const NetConfig& cfg)
      : kind_(kind), learning_rate_(learning_rate) {
    if (learning_rate_ <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (kind_ == OptimizerKind::adam) adam_.emplace(cfg);
  }

  void step(NetParams& params, const NetParams& grads) {
    if (kind_ == OptimizerKind::adam)
      adam_->step(params, grads, learning_rate_);
    else
      sgd_step(params, grads, learning_rate_);
  }

 private:
  OptimizerKind kind_;
  double learning_rate_;
  std::optional<AdamOptimizer> adam_;
};

// One minibatch update: mean squared error between the eval net's Q of the
// taken actions and the double-DQN targets. Returns the loss, or nothing
// when the memory cannot fill a batch yet.
inline std::optional<double> train_step(TrainerState& trainer, ReplayMemory& memory,
                                        Rng& rng, const Normalizer& norm,
                                        GradientStepper& stepper) {
  if (memory.size() < static_cast<std::size_t>(trainer.batch_size)) return std::nullopt;

  std::vector<std::size_t> idx = memory.sample_indices(trainer.batch_size, rng);
  std::vector<Experience> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(memory.at(i));

  Eigen::VectorXd targets = compute_targets(trainer, batch.begin(), batch.end(), norm);

  std::vector<Observation> states;
  states.reserve(batch.size());
  for (const Experience& e : batch) states.push_back(e.state);
  NetInput input = norm.batch(states.begin(), states.end());

  ForwardTrace trace;
  Eigen::MatrixXd q = forward(trainer.eval_net, input, &trace);

  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    int a = batch[static_cast<std::size_t>(i)].action.index();
    double residual = q(a, i) - targets(i);
    loss += residual * residual;
    dq(a, i) = 2.0 * residual / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  NetParams grads = backward(trainer.eval_net, trace, dq);
  stepper.step(trainer.eval_net, grads);

  ++trainer.update_count;
  if (trainer.update_count % trainer.replace_threshold == 0)
    copy_into(trainer.eval_net, trainer.target_net);
  return loss;
}

// The per-device trainer actor: answers parameter requests with the current
// eval net and folds idempotent experience uploads into replay + one train
// step each.
class Trainer {
 public:
  Trainer(int device, const NetConfig& net_cfg, const TrainerHyperparams& hp,
          const Normalizer& norm, std::uint64_t master_seed)
      : device_(device),
        norm_(norm),
        memory_(hp.replay_capacity),
        rng_(substream(master_seed, Stream::replay, 0, device)),
        stepper_(hp.optimizer, hp.learning_rate, net_cfg),
        state_(make_initial_state(net_cfg, hp, master_seed, device)) {}

  std::optional<Message> handle(const Message& msg) {
    if (msg.device != device_) throw std::invalid_argument("message routed to wrong trainer");
    switch (msg.type) {
      case Message::Type::parameter_request:
        return Message::make_parameter_response(device_, serialize_params(state_.eval_net));
      case Message::Type::experience_upload: {
        auto key = std::make_pair(msg.episode, msg.birth_slot);
        if (!seen_uploads_.insert(key).second) return std::nullopt;  // duplicate
        memory_.store(msg.experience);
        if (auto loss = train_step(state_, memory_, rng_, norm_, stepper_)) {
          ++train_steps_;
          last_loss_ = *loss;
        }
        return std::nullopt;
      }
      default:
        throw std::invalid_argument("unexpected message type at trainer");
    }
  }

  const TrainerState& state() const { return state_; }
  TrainerState& state() { return state_; }
  const ReplayMemory& memory() const { return memory_; }
  std::int64_t train_steps() const { return train_steps_; }
  double last_loss() const { return last_loss_; }
  int device() const { return device_; }

 private:
  static TrainerState make_initial_state(const NetConfig& cfg, const TrainerHyperparams& hp,
                                         std::uint64_t master_seed, int device) {
    Rng wrng = substream(master_seed, Stream::weights, 0, device);
    Rng trng = substream(master_seed, Stream::weights, 1, device);
    return TrainerState(init_params(cfg, wrng), init_params(cfg, trng),
                        hp.replace_threshold, hp.batch_size, hp.discount);
  }

  int device_;
  Normalizer norm_;
  ReplayMemory memory_;
  Rng rng_;
  GradientStepper stepper_;
  TrainerState state_;
  std::set<std::pair<int, int>> seen_uploads_;  // (episode, birth slot)
  std::int64_t train_steps_ = 0;
  double last_loss_ = 0.0;
};

// Routes messages to per-device trainers. Each device's trainer notionally
// runs at one edge node; with uniform transmission capacities the assignment
// round-robins over the edges.
class TrainerPool {
 public:
  TrainerPool(int num_devices, int num_edges, const NetConfig& net_cfg,
              const TrainerHyperparams& hp, const Normalizer& norm,
              std::uint64_t master_seed)
      : num_edges_(num_edges) {
    trainers_.reserve(num_devices);
    for (int m = 0; m < num_devices; ++m)
      trainers_.emplace_back(m, net_cfg, hp, norm, master_seed);
  }

  std::optional<Message> route_message(const Message& msg) {
    if (msg.device < 0 || msg.device >= static_cast<int>(trainers_.size()))
      throw std::invalid_argument("route_message: unknown device");
    return trainers_[msg.device].handle(msg);
  }

  int trainer_edge(int device) const {
    if (num_edges_ <= 0) return 0;
    return device % num_edges_;
  }

  Trainer& trainer(int device) { return trainers_.at(device); }
  const Trainer& trainer(int device) const { return trainers_.at(device); }
  std::int64_t total_train_steps() const {
    std::int64_t n = 0;
    for (const auto& t : trainers_) n += t.train_steps();
    return n;
  }

 private:
  int num_edges_;
  std::vector<Trainer> trainers_;
};

}  // namespace mecoff
