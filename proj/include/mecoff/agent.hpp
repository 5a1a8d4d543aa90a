// Device-side learner pieces: observation normalization, epsilon-greedy
// action selection, the exploration schedule, and the per-episode
// bookkeeping that turns delayed cost events into experiences.
#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mecoff/neural.hpp"
#include "mecoff/observation.hpp"
#include "mecoff/replay.hpp"
#include "mecoff/rng.hpp"

namespace mecoff {

// Scales raw observations into bounded network inputs: sizes and backlogs by
// the largest task size, waits by the deadline, load counts by the device
// count.
struct Normalizer {
  double size_scale = 1.0;
  double wait_scale = 1.0;
  double load_scale = 1.0;

  Normalizer() = default;
  Normalizer(double max_task_size_mbits, int deadline_slots, int num_devices)
      : size_scale(max_task_size_mbits),
        wait_scale(deadline_slots),
        load_scale(num_devices) {
    if (size_scale <= 0.0 || wait_scale <= 0.0 || load_scale <= 0.0)
      throw std::invalid_argument("normalizer scales must be positive");
  }

  // Packs a batch of observations into column-major network inputs.
  template <class Iter>
  NetInput batch(Iter first, Iter last) const {
    auto count = static_cast<Eigen::Index>(std::distance(first, last));
    if (count == 0) throw std::invalid_argument("empty observation batch");
    const Observation& head = *first;
    const int n = head.num_edges;
    const int t_step = head.t_step;
    NetInput input;
    input.scalars.resize(3 + n, count);
    input.hist.assign(t_step, Eigen::MatrixXd(n, count));
    Eigen::Index col = 0;
    for (Iter it = first; it != last; ++it, ++col) {
      const Observation& obs = *it;
      if (obs.num_edges != n || obs.t_step != t_step)
        throw std::invalid_argument("observation batch shape mismatch");
      input.scalars(0, col) = obs.task_size_mbits / size_scale;
      input.scalars(1, col) = obs.comp_wait_slots / wait_scale;
      input.scalars(2, col) = obs.tran_wait_slots / wait_scale;
      for (int e = 0; e < n; ++e)
        input.scalars(3 + e, col) = obs.edge_queue_mbits[e] / size_scale;
      for (int t = 0; t < t_step; ++t)
        for (int e = 0; e < n; ++e)
          input.hist[t](e, col) =
              obs.load_history[static_cast<std::size_t>(t) * n + e] / load_scale;
    }
    return input;
  }

  NetInput single(const Observation& obs) const { return batch(&obs, &obs + 1); }
};

// Exploration probability, linear from 1.0 at the first episode down to 0.01
// at the last, clamped below at 0.01.
inline double epsilon_schedule(int episode, int total_episodes) {
  if (episode < 1 || total_episodes < 1 || episode > total_episodes)
    throw std::invalid_argument("epsilon_schedule: episode outside [1, total]");
  if (total_episodes == 1) return 1.0;
  double frac = static_cast<double>(episode - 1) / (total_episodes - 1);
  return std::max(0.01, (1.0 - frac) * 1.0 + frac * 0.01);
}

inline int argmin_index(const Eigen::VectorXd& values) {
  int best = 0;
  for (int i = 1; i < values.size(); ++i)
    if (values(i) < values(best)) best = i;
  return best;
}

// Epsilon-greedy over the N+1 feasible actions; greedy picks the minimum
// Q-value, ties resolved toward the lowest action index.
inline ActionChoice select_action(const NetParams& params, const Observation& obs,
                                  const Normalizer& norm, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("epsilon outside [0,1]");
  if (!obs.has_arrival())
    throw std::invalid_argument("select_action: no arrival in observation");
  int num_actions = ActionChoice::num_actions(obs.num_edges);
  if (rng.uniform01() < epsilon)
    return ActionChoice::from_index(static_cast<int>(rng.uniform_below(num_actions)));
  Eigen::MatrixXd q = forward(params, norm.single(obs));
  return ActionChoice::from_index(argmin_index(q.col(0)));
}

// Per-episode slot bookkeeping for one device: keeps every observation of
// the episode plus the (state, action) stub of each scheduled task, and
// assembles experiences once the delayed costs arrive.
class DeviceAgent {
 public:
  explicit DeviceAgent(int device) : device_(device) {}

  int device() const { return device_; }

  void begin_episode(int horizon_slots) {
    horizon_ = horizon_slots;
    observations_.clear();
    stubs_.clear();
  }

  // Observation of the current slot (or of slot T+1 for the terminal view).
  void record_observation(int slot, Observation obs) {
    observations_[slot] = std::move(obs);
  }

  void record_action(int slot, const ActionChoice& action) {
    if (!observations_.count(slot))
      throw std::logic_error("action recorded before its observation");
    stubs_[slot] = action;
  }

  struct TaggedExperience {
    int birth_slot;
    Experience experience;
  };

  // Turns this slot's cost events into replay experiences, ordered by birth
  // slot. Requires the observation of birth+1 to have been recorded.
  std::vector<TaggedExperience> completion_bookkeeping(
      const std::vector<CostEvent>& events) const {
    std::vector<TaggedExperience> out;
    out.reserve(events.size());
    std::vector<CostEvent> ordered = events;
    std::sort(ordered.begin(), ordered.end(),
              [](const CostEvent& a, const CostEvent& b) { return a.birth_slot < b.birth_slot; });
    for (const CostEvent& ev : ordered) {
      auto stub = stubs_.find(ev.birth_slot);
      auto state = observations_.find(ev.birth_slot);
      auto next = observations_.find(ev.birth_slot + 1);
      if (stub == stubs_.end() || state == observations_.end() || next == observations_.end())
        throw std::logic_error("cost event without a stored state/action stub");
      Experience e;
      e.state = state->second;
      e.action = stub->second;
      e.cost = ev.cost;
      e.next_state = next->second;
      e.terminal = ev.birth_slot == horizon_;
      out.push_back(TaggedExperience{ev.birth_slot, std::move(e)});
    }
    return out;
  }

 private:
  int device_;
  int horizon_ = 0;
  std::map<int, Observation> observations_;  // slot -> state
  std::map<int, ActionChoice> stubs_;        // birth slot -> action taken
};

}  // namespace mecoff
