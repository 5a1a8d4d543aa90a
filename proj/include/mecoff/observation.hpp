// MDP-facing domain types shared by the environment, agents, and messages.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mecoff {

// Per-device state at the beginning of a slot: the arriving task size (zero
// when none), the waits of the two local queues, the device's own backlog at
// every edge as of the previous slot, and the broadcast load-history matrix.
struct Observation {
  double task_size_mbits = 0.0;
  int comp_wait_slots = 0;
  int tran_wait_slots = 0;
  std::vector<double> edge_queue_mbits;  // length N
  std::vector<double> load_history;      // t_step x N row-major, oldest first
  int t_step = 0;
  int num_edges = 0;

  bool has_arrival() const { return task_size_mbits > 0.0; }
};

// Scheduling decision for one arriving task: local processing, or offload to
// exactly one edge.
struct ActionChoice {
  bool local = true;
  int edge = -1;  // valid only when !local

  static ActionChoice make_local() { return ActionChoice{true, -1}; }
  static ActionChoice make_offload(int edge) {
    if (edge < 0) throw std::invalid_argument("offload edge index must be non-negative");
    return ActionChoice{false, edge};
  }

  // Dense action index: 0 = local, 1 + e = offload to edge e.
  int index() const { return local ? 0 : 1 + edge; }
  static ActionChoice from_index(int idx) {
    if (idx < 0) throw std::invalid_argument("negative action index");
    return idx == 0 ? make_local() : make_offload(idx - 1);
  }
  static int num_actions(int num_edges) { return num_edges + 1; }

  bool operator==(const ActionChoice& o) const {
    return local == o.local && (local || edge == o.edge);
  }
};

// Delayed per-task outcome delivered by the environment when the task leaves
// the system: the delay in slots if it completed, or the drop penalty.
struct CostEvent {
  int birth_slot = 0;
  double cost = 0.0;
  bool dropped = false;
  int delay_slots = 0;  // valid when !dropped
  std::uint64_t task_id = 0;
  int device = -1;
};

}  // namespace mecoff
