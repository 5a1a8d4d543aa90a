// Baseline offloading policies.
#pragma once

#include <algorithm>

#include "mecoff/observation.hpp"
#include "mecoff/rng.hpp"
#include "mecoff/task.hpp"

namespace mecoff {

inline ActionChoice policy_no_offload() { return ActionChoice::make_local(); }

// Uniform over the N+1 feasible actions; degenerates to local when N = 0.
inline ActionChoice policy_random(int num_edges, Rng& rng) {
  return ActionChoice::from_index(
      static_cast<int>(rng.uniform_below(ActionChoice::num_actions(num_edges))));
}

struct MyopicRates {
  double local_mbits_per_slot = 1.0;
  double tran_mbits_per_slot = 1.0;
  double edge_mbits_per_slot = 1.0;  // at load one
};

// Estimated-finish-time heuristic: compares the local queue wait plus
// processing slots against, per edge, the transmission wait plus send slots
// plus processing slots at the edge rate scaled down by the most recently
// broadcast load. Ties prefer local, then the lowest edge index.
inline ActionChoice policy_myopic(const Observation& obs, const MyopicRates& rates) {
  long best = obs.comp_wait_slots +
              service_slots(obs.task_size_mbits, rates.local_mbits_per_slot);
  ActionChoice choice = ActionChoice::make_local();
  for (int n = 0; n < obs.num_edges; ++n) {
    double latest_load = obs.load_history.empty()
                             ? 0.0
                             : obs.load_history[static_cast<std::size_t>(obs.t_step - 1) *
                                                    obs.num_edges +
                                                n];
    double share = rates.edge_mbits_per_slot / std::max(1.0, latest_load);
    long est = obs.tran_wait_slots +
               service_slots(obs.task_size_mbits, rates.tran_mbits_per_slot) +
               service_slots(obs.task_size_mbits, share);
    if (est < best) {
      best = est;
      choice = ActionChoice::make_offload(n);
    }
  }
  return choice;
}

}  // namespace mecoff
