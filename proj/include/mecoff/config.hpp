// Experiment configuration: one flat key set with Table-style defaults,
// validation diagnostics, and projections onto the simulator, network, and
// trainer parameter structs.
#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mecoff/environment.hpp"
#include "mecoff/neural.hpp"
#include "mecoff/trainer.hpp"

namespace mecoff {

enum class PolicyKind { drl, no_offload, random_offload, myopic };

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "drl") return PolicyKind::drl;
  if (s == "no_offload") return PolicyKind::no_offload;
  if (s == "random") return PolicyKind::random_offload;
  if (s == "myopic") return PolicyKind::myopic;
  throw std::invalid_argument("unknown policy kind: " + s);
}

inline const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::drl: return "drl";
    case PolicyKind::no_offload: return "no_offload";
    case PolicyKind::random_offload: return "random";
    case PolicyKind::myopic: return "myopic";
  }
  return "?";
}

struct RunConfig {
  // Scenario.
  int num_devices = 50;
  int num_edges = 5;
  int horizon_slots = 100;
  int episodes = 200;
  int eval_episodes = 20;
  double slot_seconds = 0.1;
  double f_device_ghz = 2.5;
  double f_edge_ghz = 41.8;
  double f_tran_mbps = 14.0;
  double size_min_mbits = 2.0;
  double size_max_mbits = 5.0;
  double size_step_mbits = 0.1;
  double density_gcycles_per_mbit = 0.297;
  int deadline_slots = 10;
  double arrival_probability = 0.3;
  double drop_penalty = 20.0;
  int t_step = 10;

  // Learner.
  double discount = 0.9;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int replay_capacity = 10000;
  int replace_threshold = 100;
  std::string optimizer = "adam";  // adam | sgd
  int lstm_hidden = 32;
  int fc1 = 128;
  int fc2 = 64;
  int head_hidden = 32;

  // Harness.
  std::string policy = "drl";  // one kind, or a comma list with one per device
  std::uint64_t master_seed = 1;

  // Field-level diagnostics; empty means valid.
  std::vector<std::string> validate() const {
    std::vector<std::string> errs;
    auto bad = [&errs](const std::string& field, const std::string& why) {
      errs.push_back(field + ": " + why);
    };
    if (num_devices <= 0) bad("num_devices", "must be positive");
    if (num_edges < 0) bad("num_edges", "must be non-negative");
    if (horizon_slots <= 0) bad("horizon_slots", "must be positive");
    if (episodes <= 0) bad("episodes", "must be positive");
    if (eval_episodes < 0) bad("eval_episodes", "must be non-negative");
    if (slot_seconds <= 0.0) bad("slot_seconds", "must be positive");
    if (f_device_ghz <= 0.0) bad("f_device_ghz", "must be positive");
    if (f_edge_ghz <= 0.0) bad("f_edge_ghz", "must be positive");
    if (f_tran_mbps <= 0.0) bad("f_tran_mbps", "must be positive");
    if (size_min_mbits <= 0.0) bad("size_min_mbits", "must be positive");
    if (size_max_mbits < size_min_mbits) bad("size_max_mbits", "below size_min_mbits");
    if (size_max_mbits > size_min_mbits && size_step_mbits <= 0.0)
      bad("size_step_mbits", "must be positive for a size range");
    if (density_gcycles_per_mbit <= 0.0) bad("density_gcycles_per_mbit", "must be positive");
    if (deadline_slots < 1) bad("deadline_slots", "must be at least one slot");
    if (arrival_probability < 0.0 || arrival_probability > 1.0)
      bad("arrival_probability", "outside [0,1]");
    if (drop_penalty <= 0.0) bad("drop_penalty", "must be positive");
    if (t_step <= 0) bad("t_step", "must be positive");
    if (discount <= 0.0 || discount > 1.0) bad("discount", "outside (0,1]");
    if (learning_rate <= 0.0) bad("learning_rate", "must be positive");
    if (batch_size <= 0) bad("batch_size", "must be positive");
    if (replay_capacity <= 0) bad("replay_capacity", "must be positive");
    if (replay_capacity < batch_size) bad("replay_capacity", "smaller than batch_size");
    if (replace_threshold < 1) bad("replace_threshold", "must be at least one");
    if (optimizer != "adam" && optimizer != "sgd") bad("optimizer", "must be adam or sgd");
    if (lstm_hidden <= 0) bad("lstm_hidden", "must be positive");
    if (fc1 <= 0) bad("fc1", "must be positive");
    if (fc2 <= 0) bad("fc2", "must be positive");
    if (head_hidden <= 0) bad("head_hidden", "must be positive");
    try {
      auto kinds = device_policies();
      bool any_drl = false;
      for (auto k : kinds) any_drl |= k == PolicyKind::drl;
      if (any_drl && num_edges == 0) bad("policy", "drl needs at least one edge");
    } catch (const std::exception& e) {
      bad("policy", e.what());
    }
    return errs;
  }

  void validate_or_throw() const {
    auto errs = validate();
    if (errs.empty()) return;
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& e : errs) os << "\n  " << e;
    throw std::invalid_argument(os.str());
  }

  std::vector<double> size_choices_mbits() const {
    std::vector<double> sizes;
    if (size_max_mbits <= size_min_mbits || size_step_mbits <= 0.0) {
      sizes.push_back(size_min_mbits);
      return sizes;
    }
    int count =
        static_cast<int>(std::round((size_max_mbits - size_min_mbits) / size_step_mbits)) + 1;
    for (int i = 0; i < count; ++i) sizes.push_back(size_min_mbits + i * size_step_mbits);
    return sizes;
  }

  // Per-slot capacities: GHz * slot gives gigacycles, Mbps * slot gives Mbit.
  double device_gcycles_per_slot() const { return f_device_ghz * slot_seconds; }
  double edge_gcycles_per_slot() const { return f_edge_ghz * slot_seconds; }
  double tran_mbits_per_slot() const { return f_tran_mbps * slot_seconds; }

  SimParams sim_params() const {
    SimParams p;
    p.num_devices = num_devices;
    p.num_edges = num_edges;
    p.horizon_slots = horizon_slots;
    p.t_step = t_step;
    p.slot_seconds = slot_seconds;
    p.arrival_probability = arrival_probability;
    p.size_choices_mbits = size_choices_mbits();
    p.density_gcycles_per_mbit = density_gcycles_per_mbit;
    p.deadline_slots = deadline_slots;
    p.drop_penalty = drop_penalty;
    p.device_gcycles_per_slot = device_gcycles_per_slot();
    p.tran_mbits_per_slot = tran_mbits_per_slot();
    p.edge_gcycles_per_slot = edge_gcycles_per_slot();
    return p;
  }

  NetConfig net_config() const {
    NetConfig c;
    c.num_edges = num_edges;
    c.t_step = t_step;
    c.lstm_hidden = lstm_hidden;
    c.fc1 = fc1;
    c.fc2 = fc2;
    c.head_hidden = head_hidden;
    return c;
  }

  TrainerHyperparams trainer_hyperparams() const {
    TrainerHyperparams hp;
    hp.batch_size = batch_size;
    hp.replay_capacity = static_cast<std::size_t>(replay_capacity);
    hp.replace_threshold = replace_threshold;
    hp.discount = discount;
    hp.learning_rate = learning_rate;
    hp.optimizer = optimizer == "sgd" ? OptimizerKind::sgd : OptimizerKind::adam;
    return hp;
  }

  Normalizer normalizer() const {
    return Normalizer(size_choices_mbits().back(), deadline_slots, num_devices);
  }

  // The policy field holds one kind for all devices or a comma list of
  // exactly num_devices kinds.
  std::vector<PolicyKind> device_policies() const {
    std::vector<PolicyKind> kinds;
    std::stringstream ss(policy);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t a = item.find_first_not_of(" \t");
      std::size_t b = item.find_last_not_of(" \t");
      if (a == std::string::npos) throw std::invalid_argument("empty policy entry");
      kinds.push_back(parse_policy_kind(item.substr(a, b - a + 1)));
    }
    if (kinds.empty()) throw std::invalid_argument("policy list is empty");
    if (kinds.size() == 1) return std::vector<PolicyKind>(num_devices, kinds[0]);
    if (kinds.size() != static_cast<std::size_t>(num_devices))
      throw std::invalid_argument("policy list length must be 1 or num_devices");
    return kinds;
  }
};

}  // namespace mecoff
