// Experiment driver: episode loops, device policies, trainer wiring, metric
// aggregation, and single-axis sweeps.
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mecoff/agent.hpp"
#include "mecoff/config.hpp"
#include "mecoff/environment.hpp"
#include "mecoff/messages.hpp"
#include "mecoff/metrics.hpp"
#include "mecoff/policies.hpp"
#include "mecoff/trainer.hpp"

namespace mecoff {

struct EpisodeLog {
  MetricsRow row;
  double wall_seconds = 0.0;
  std::int64_t train_steps = 0;  // cumulative across the run
};

// Owns one environment plus, when any device policy is drl, the per-device
// agents and trainers. Episodes can be replayed at arbitrary indices so that
// different policies face identical arrival streams.
class Runner {
 public:
  explicit Runner(RunConfig cfg)
      : cfg_(validated(std::move(cfg))),
        env_(cfg_.sim_params()),
        policies_(cfg_.device_policies()),
        norm_(cfg_.normalizer()) {
    myopic_rates_.local_mbits_per_slot =
        cfg_.device_gcycles_per_slot() / cfg_.density_gcycles_per_mbit;
    myopic_rates_.tran_mbits_per_slot = cfg_.tran_mbits_per_slot();
    myopic_rates_.edge_mbits_per_slot =
        cfg_.edge_gcycles_per_slot() / cfg_.density_gcycles_per_mbit;
    bool any_drl = false;
    for (PolicyKind k : policies_) any_drl |= k == PolicyKind::drl;
    if (any_drl) {
      trainers_.emplace(cfg_.num_devices, cfg_.num_edges, cfg_.net_config(),
                        cfg_.trainer_hyperparams(), norm_, cfg_.master_seed);
      for (int m = 0; m < cfg_.num_devices; ++m) agents_.emplace_back(m);
    }
  }

  // One episode at the given index. Training (uploads + updates) only happens
  // when train is set; evaluation episodes act greedily with the given
  // epsilon and leave the networks untouched.
  MetricsRow run_episode(int episode_index, double epsilon, bool train) {
    env_.episode_reset(cfg_.master_seed, episode_index);
    for (auto& a : agents_) a.begin_episode(cfg_.horizon_slots);

    std::vector<Rng> policy_rngs, explore_rngs;
    for (int m = 0; m < cfg_.num_devices; ++m) {
      policy_rngs.push_back(substream(cfg_.master_seed, Stream::policy, episode_index, m));
      explore_rngs.push_back(substream(cfg_.master_seed, Stream::explore, episode_index, m));
    }

    std::vector<std::vector<CostEvent>> pending(cfg_.num_devices);
    for (int t = 1; t <= cfg_.horizon_slots; ++t) {
      env_.begin_slot();
      std::vector<Observation> obs(cfg_.num_devices);
      for (int m = 0; m < cfg_.num_devices; ++m) {
        obs[m] = env_.observe(m);
        if (policies_[m] == PolicyKind::drl) agents_[m].record_observation(t, obs[m]);
      }
      if (train) flush_experiences(episode_index, pending);
      for (auto& evs : pending) evs.clear();

      for (int m = 0; m < cfg_.num_devices; ++m) {
        if (!obs[m].has_arrival()) continue;
        ActionChoice action = choose(m, obs[m], epsilon, policy_rngs[m], explore_rngs[m]);
        env_.apply_action(m, action);
        if (policies_[m] == PolicyKind::drl) agents_[m].record_action(t, action);
      }
      pending = env_.step_world();
    }

    for (int m = 0; m < cfg_.num_devices; ++m)
      if (policies_[m] == PolicyKind::drl)
        agents_[m].record_observation(cfg_.horizon_slots + 1, env_.final_observation(m));
    if (train) flush_experiences(episode_index, pending);

    EpisodeAccounting acc = env_.finish_episode();
    MetricsRow row;
    row.episode = episode_index;
    row.arrivals = acc.arrivals;
    row.completed = acc.completed;
    row.dropped = acc.dropped;
    row.in_flight_at_end = acc.in_flight_at_end;
    row.drop_ratio = acc.arrivals ? static_cast<double>(acc.dropped) / acc.arrivals : 0.0;
    row.avg_delay_s =
        acc.completed ? acc.delay_slots_sum / acc.completed * cfg_.slot_seconds : 0.0;
    std::int64_t resolved = acc.completed + acc.dropped;
    row.mean_cost = resolved ? acc.cost_sum / resolved : 0.0;
    return row;
  }

  // Full protocol: for drl, `episodes` training episodes under the linear
  // exploration schedule followed by `eval_episodes` greedy ones; baselines
  // run `episodes` plain episodes.
  std::vector<EpisodeLog> run_all(const std::function<void(const EpisodeLog&)>& on_row = {}) {
    std::vector<EpisodeLog> logs;
    bool any_drl = trainers_.has_value();
    int total = cfg_.episodes + (any_drl ? cfg_.eval_episodes : 0);
    for (int e = 1; e <= total; ++e) {
      bool training = any_drl && e <= cfg_.episodes;
      double eps = training ? epsilon_schedule(e, cfg_.episodes) : 0.01;
      auto start = std::chrono::steady_clock::now();
      MetricsRow row = run_episode(e, eps, training);
      EpisodeLog log;
      log.row = row;
      log.wall_seconds = std::chrono::duration<double>(
          std::chrono::steady_clock::now() - start).count();
      log.train_steps = trainers_ ? trainers_->total_train_steps() : 0;
      logs.push_back(log);
      if (on_row) on_row(log);
    }
    return logs;
  }

  // Mean eval metrics over explicit episode indices (greedy, no training).
  MetricsRow evaluate(int first_episode, int count) {
    MetricsRow mean;
    for (int i = 0; i < count; ++i) {
      MetricsRow r = run_episode(first_episode + i, 0.01, false);
      mean.arrivals += r.arrivals;
      mean.completed += r.completed;
      mean.dropped += r.dropped;
      mean.in_flight_at_end += r.in_flight_at_end;
      mean.drop_ratio += r.drop_ratio;
      mean.avg_delay_s += r.avg_delay_s;
      mean.mean_cost += r.mean_cost;
    }
    if (count > 0) {
      mean.drop_ratio /= count;
      mean.avg_delay_s /= count;
      mean.mean_cost /= count;
    }
    mean.episode = first_episode;
    return mean;
  }

  Environment& env() { return env_; }
  TrainerPool* trainers() { return trainers_ ? &*trainers_ : nullptr; }
  const RunConfig& config() const { return cfg_; }

 private:
  static RunConfig validated(RunConfig cfg) {
    cfg.validate_or_throw();
    return cfg;
  }

  ActionChoice choose(int device, const Observation& obs, double epsilon, Rng& policy_rng,
                      Rng& explore_rng) {
    switch (policies_[device]) {
      case PolicyKind::no_offload:
        return policy_no_offload();
      case PolicyKind::random_offload:
        return policy_random(cfg_.num_edges, policy_rng);
      case PolicyKind::myopic:
        return policy_myopic(obs, myopic_rates_);
      case PolicyKind::drl: {
        // Fetch the freshest eval-net parameters for this arrival.
        auto reply = trainers_->route_message(Message::make_parameter_request(device));
        if (!reply || reply->type != Message::Type::parameter_response)
          throw std::logic_error("parameter request yielded no response");
        NetParams params = deserialize_params(reply->params_blob);
        return select_action(params, obs, norm_, epsilon, explore_rng);
      }
    }
    throw std::logic_error("unhandled policy kind");
  }

  void flush_experiences(int episode_index, const std::vector<std::vector<CostEvent>>& pending) {
    if (!trainers_) return;
    for (int m = 0; m < cfg_.num_devices; ++m) {
      if (policies_[m] != PolicyKind::drl || pending[m].empty()) continue;
      for (auto& tagged : agents_[m].completion_bookkeeping(pending[m]))
        trainers_->route_message(Message::make_experience_upload(
            m, episode_index, tagged.birth_slot, std::move(tagged.experience)));
    }
  }

  RunConfig cfg_;
  Environment env_;
  std::vector<PolicyKind> policies_;
  Normalizer norm_;
  MyopicRates myopic_rates_;
  std::optional<TrainerPool> trainers_;
  std::vector<DeviceAgent> agents_;
};

// Sweep of one numeric config key across a list of values. Per value the
// metrics are averaged over `sweep_seeds` master seeds (seed, seed+1, ...)
// and, for drl, over the greedy evaluation episodes.
struct SweepPoint {
  double value = 0.0;
  MetricsRow mean;  // episode field unused
};

inline void apply_axis(RunConfig& cfg, const std::string& axis, double value) {
  if (axis == "arrival_probability") cfg.arrival_probability = value;
  else if (axis == "deadline_slots") cfg.deadline_slots = static_cast<int>(value);
  else if (axis == "f_edge_ghz") cfg.f_edge_ghz = value;
  else if (axis == "f_device_ghz") cfg.f_device_ghz = value;
  else if (axis == "f_tran_mbps") cfg.f_tran_mbps = value;
  else if (axis == "density_gcycles_per_mbit") cfg.density_gcycles_per_mbit = value;
  else if (axis == "num_devices") cfg.num_devices = static_cast<int>(value);
  else if (axis == "drop_penalty") cfg.drop_penalty = value;
  else throw std::invalid_argument("unknown sweep axis: " + axis);
}

inline std::vector<SweepPoint> run_sweep(const RunConfig& base, const std::string& axis,
                                         const std::vector<double>& values, int sweep_seeds,
                                         const std::function<void(const SweepPoint&)>& on_point = {}) {
  if (sweep_seeds < 1) throw std::invalid_argument("sweep needs at least one seed");
  std::vector<SweepPoint> points;
  for (double v : values) {
    RunConfig cfg = base;
    apply_axis(cfg, axis, v);
    cfg.validate_or_throw();
    SweepPoint pt;
    pt.value = v;
    int counted = 0;
    for (int s = 0; s < sweep_seeds; ++s) {
      cfg.master_seed = base.master_seed + static_cast<std::uint64_t>(s);
      Runner runner(cfg);
      bool any_drl = runner.trainers() != nullptr;
      std::vector<EpisodeLog> logs = runner.run_all();
      std::size_t first = any_drl ? static_cast<std::size_t>(cfg.episodes) : 0;
      for (std::size_t i = first; i < logs.size(); ++i) {
        const MetricsRow& r = logs[i].row;
        pt.mean.arrivals += r.arrivals;
        pt.mean.completed += r.completed;
        pt.mean.dropped += r.dropped;
        pt.mean.in_flight_at_end += r.in_flight_at_end;
        pt.mean.drop_ratio += r.drop_ratio;
        pt.mean.avg_delay_s += r.avg_delay_s;
        pt.mean.mean_cost += r.mean_cost;
        ++counted;
      }
    }
    if (counted > 0) {
      pt.mean.drop_ratio /= counted;
      pt.mean.avg_delay_s /= counted;
      pt.mean.mean_cost /= counted;
    }
    points.push_back(pt);
    if (on_point) on_point(pt);
  }
  return points;
}

inline void emit_sweep_csv(const std::vector<SweepPoint>& points, const std::string& axis,
                           const std::string& path, bool overwrite = false) {
  if (!overwrite && std::filesystem::exists(path))
    throw std::runtime_error("refusing to overwrite existing file: " + path);
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << axis << ",arrivals,completed,dropped,in_flight_at_end,drop_ratio,avg_delay_s,mean_cost\n";
  char buf[320];
  for (const SweepPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.6f,%lld,%lld,%lld,%lld,%.6f,%.6f,%.6f", p.value,
                  static_cast<long long>(p.mean.arrivals),
                  static_cast<long long>(p.mean.completed),
                  static_cast<long long>(p.mean.dropped),
                  static_cast<long long>(p.mean.in_flight_at_end), p.mean.drop_ratio,
                  p.mean.avg_delay_s, p.mean.mean_cost);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace mecoff
