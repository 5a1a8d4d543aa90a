// Slotted offloading environment: arrivals, local queue timing, edge queues,
// and delayed per-task cost events.
//
// Slot protocol, driven by the harness in lockstep for all devices:
//   begin_slot() -> observe(m) -> apply_action(m, a) for arrivals ->
//   step_world() -> cost events for everything that resolved this slot.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mecoff/device_queues.hpp"
#include "mecoff/edge_queues.hpp"
#include "mecoff/observation.hpp"
#include "mecoff/rng.hpp"
#include "mecoff/task.hpp"

namespace mecoff {

struct SimParams {
  int num_devices = 1;   // M
  int num_edges = 1;     // N
  int horizon_slots = 100;  // T
  int t_step = 10;       // load-history window
  double slot_seconds = 0.1;
  double arrival_probability = 0.3;
  std::vector<double> size_choices_mbits = {2.0};
  double density_gcycles_per_mbit = 0.297;
  int deadline_slots = 10;
  double drop_penalty = 20.0;  // C
  double device_gcycles_per_slot = 0.25;
  double tran_mbits_per_slot = 1.4;
  double edge_gcycles_per_slot = 4.18;

  void validate() const {
    if (num_devices <= 0) throw std::invalid_argument("num_devices must be positive");
    if (num_edges < 0) throw std::invalid_argument("num_edges must be non-negative");
    if (horizon_slots <= 0) throw std::invalid_argument("horizon_slots must be positive");
    if (t_step <= 0) throw std::invalid_argument("t_step must be positive");
    if (slot_seconds <= 0.0) throw std::invalid_argument("slot_seconds must be positive");
    if (arrival_probability < 0.0 || arrival_probability > 1.0)
      throw std::invalid_argument("arrival_probability outside [0,1]");
    if (size_choices_mbits.empty()) throw std::invalid_argument("empty task size set");
    if (density_gcycles_per_mbit <= 0.0) throw std::invalid_argument("density must be positive");
    if (deadline_slots < 1) throw std::invalid_argument("deadline must be at least one slot");
    if (drop_penalty <= 0.0) throw std::invalid_argument("drop penalty must be positive");
    if (device_gcycles_per_slot <= 0.0 || tran_mbits_per_slot <= 0.0 ||
        edge_gcycles_per_slot <= 0.0)
      throw std::invalid_argument("capacities must be positive");
  }
};

struct TraceEvent {
  int slot;
  int device;
  std::string kind;
  std::uint64_t task_id;
  double cost;
};

struct EpisodeAccounting {
  std::int64_t arrivals = 0;
  std::int64_t completed = 0;
  std::int64_t dropped = 0;
  std::int64_t in_flight_at_end = 0;
  double delay_slots_sum = 0.0;  // completed tasks only
  double cost_sum = 0.0;         // completed + dropped
};

class Environment {
 public:
  explicit Environment(SimParams params) : p_(std::move(params)) {
    p_.validate();
    timelines_.assign(p_.num_devices,
                      DeviceTimeline(p_.device_gcycles_per_slot,
                                     std::vector<double>(p_.num_edges, p_.tran_mbits_per_slot)));
    for (int n = 0; n < p_.num_edges; ++n)
      edges_.emplace_back(p_.num_devices, p_.edge_gcycles_per_slot);
    history_ = LoadHistory(p_.t_step, p_.num_edges);
    episode_reset(0, 1);
  }

  const SimParams& params() const { return p_; }

  // Clears every queue and reseeds the arrival streams from (seed, episode).
  void episode_reset(std::uint64_t master_seed, int episode_index) {
    arrivals_proc_.clear();
    for (int m = 0; m < p_.num_devices; ++m)
      arrivals_proc_.emplace_back(
          p_.arrival_probability, p_.size_choices_mbits,
          substream_seed(master_seed, Stream::arrivals, episode_index, m));
    for (auto& tl : timelines_) tl.clear();
    for (auto& e : edges_) e.clear();
    history_.clear();
    pending_events_.clear();
    deliveries_.clear();
    current_arrivals_.assign(p_.num_devices, std::nullopt);
    action_taken_.assign(p_.num_devices, false);
    acc_ = EpisodeAccounting{};
    slot_ = 0;
    stepped_ = true;
  }

  // Advances to the next slot and draws this slot's arrivals.
  void begin_slot() {
    if (!stepped_) throw std::logic_error("begin_slot before step_world");
    if (slot_ >= p_.horizon_slots) throw std::logic_error("episode horizon exceeded");
    ++slot_;
    stepped_ = false;
    for (int m = 0; m < p_.num_devices; ++m) {
      current_arrivals_[m] = arrivals_proc_[m].draw_arrival(
          m, slot_, p_.density_gcycles_per_mbit, p_.deadline_slots, next_task_id_);
      action_taken_[m] = false;
      if (current_arrivals_[m]) {
        ++acc_.arrivals;
        trace(slot_, m, "arrival", current_arrivals_[m]->id, 0.0);
      }
    }
  }

  int current_slot() const { return slot_; }
  bool has_arrival(int device) const { return current_arrivals_.at(device).has_value(); }
  const Task& arrival(int device) const { return *current_arrivals_.at(device); }

  // State vector of device m for the current slot. Pure read.
  Observation observe(int device) const {
    if (stepped_) throw std::logic_error("observe outside the acting phase");
    return make_observation(device, current_arrivals_.at(device)
                                        ? current_arrivals_[device]->size_mbits
                                        : 0.0,
                            slot_);
  }

  // Observation for the slot after the horizon, for terminal bookkeeping.
  Observation final_observation(int device) const {
    if (slot_ != p_.horizon_slots || !stepped_)
      throw std::logic_error("final_observation before the last step");
    return make_observation(device, 0.0, slot_ + 1);
  }

  // Schedules this slot's arrival of device m per the chosen action.
  void apply_action(int device, const ActionChoice& action) {
    if (stepped_) throw std::logic_error("apply_action outside the acting phase");
    if (!current_arrivals_.at(device))
      throw std::invalid_argument("apply_action: device has no arrival this slot");
    if (action_taken_[device])
      throw std::invalid_argument("apply_action: action already applied this slot");
    if (!action.local && (action.edge < 0 || action.edge >= p_.num_edges))
      throw std::invalid_argument("apply_action: edge choice out of range");
    if (action.local && action.edge >= 0)
      throw std::invalid_argument("apply_action: local action cannot carry an edge");

    const Task& task = *current_arrivals_[device];
    DeviceTimeline& tl = timelines_[device];
    if (action.local) {
      int delta = tl.comp_wait(slot_);
      int finish = tl.comp_finish(task, delta);
      int unclamped = unclamped_finish(
          task, delta, tl.device_gcycles_per_slot() / task.density_gcycles_per_mbit);
      push_event(finish, make_event(task, finish, /*dropped=*/unclamped > task.deadline_slot()));
      trace(slot_, device, "to_comp", task.id, 0.0);
    } else {
      int delta = tl.tran_wait(slot_);
      int finish = tl.tran_finish(task, delta, action.edge);
      int unclamped = unclamped_finish(task, delta, p_.tran_mbits_per_slot);
      // The send must complete no later than deadline-1 so the edge can
      // receive the task in the next slot while it is still alive.
      if (unclamped <= task.deadline_slot() - 1) {
        deliveries_[finish + 1].emplace_back(task, action.edge);
      } else {
        push_event(task.deadline_slot(), make_event(task, task.deadline_slot(), true));
      }
      trace(slot_, device, "to_tran", task.id, 0.0);
    }
    action_taken_[device] = true;
  }

  // Advances all queues one slot; returns the per-device cost events of every
  // task that resolved in this slot.
  std::vector<std::vector<CostEvent>> step_world() {
    if (stepped_) throw std::logic_error("step_world called twice in one slot");
    for (int m = 0; m < p_.num_devices; ++m)
      if (current_arrivals_[m] && !action_taken_[m])
        throw std::logic_error("step_world: an arrival has no action applied");

    std::vector<std::vector<CostEvent>> events(p_.num_devices);

    // Deliveries of sends that completed in the previous slot.
    if (auto it = deliveries_.find(slot_); it != deliveries_.end()) {
      for (auto& [task, edge] : it->second) {
        edges_[edge].deliver(task, slot_);
        trace(slot_, task.device, "delivered", task.id, 0.0);
      }
      deliveries_.erase(it);
    }

    // Edge processing and the end-of-slot load broadcast.
    std::vector<int> loads(p_.num_edges, 0);
    for (int n = 0; n < p_.num_edges; ++n) {
      EdgeStepResult r = edges_[n].step(slot_);
      loads[n] = r.active_count;
      for (int m = 0; m < p_.num_devices; ++m) {
        for (auto& [task, done_slot] : r.devices[m].completed)
          events[m].push_back(make_event(task, done_slot, false));
        for (auto& [task, remaining] : r.devices[m].dropped)
          events[m].push_back(make_event(task, slot_, true));
      }
    }
    history_.record(loads);

    // Closed-form device-queue resolutions scheduled for this slot.
    if (auto it = pending_events_.find(slot_); it != pending_events_.end()) {
      for (const CostEvent& ev : it->second) events[ev.device].push_back(ev);
      pending_events_.erase(it);
    }

    for (int m = 0; m < p_.num_devices; ++m) {
      std::sort(events[m].begin(), events[m].end(),
                [](const CostEvent& a, const CostEvent& b) { return a.birth_slot < b.birth_slot; });
      for (const CostEvent& ev : events[m]) {
        acc_.cost_sum += ev.cost;
        if (ev.dropped) {
          ++acc_.dropped;
          trace(slot_, m, "dropped", ev.task_id, ev.cost);
        } else {
          ++acc_.completed;
          acc_.delay_slots_sum += ev.delay_slots;
          trace(slot_, m, "completed", ev.task_id, ev.cost);
        }
      }
    }

    stepped_ = true;
    return events;
  }

  // End-of-episode accounting. Counts the tasks still physically in the
  // system and checks them against the arrival/completion/drop counters.
  EpisodeAccounting finish_episode() {
    if (slot_ != p_.horizon_slots || !stepped_)
      throw std::logic_error("finish_episode before the horizon");
    std::int64_t in_flight = 0;
    for (const auto& [slot, evs] : pending_events_) in_flight += evs.size();
    for (const auto& [slot, dels] : deliveries_) in_flight += dels.size();
    for (const auto& e : edges_) in_flight += e.unresolved_count();
    acc_.in_flight_at_end = in_flight;
    if (acc_.arrivals != acc_.completed + acc_.dropped + acc_.in_flight_at_end)
      throw std::logic_error("task accounting identity violated");
    return acc_;
  }

  const LoadHistory& load_history() const { return history_; }
  const DeviceTimeline& timeline(int device) const { return timelines_.at(device); }
  const EdgeQueue& edge(int n) const { return edges_.at(n); }

  void set_trace_sink(std::function<void(const TraceEvent&)> sink) { trace_ = std::move(sink); }

 private:
  Observation make_observation(int device, double size_mbits, int slot) const {
    Observation obs;
    obs.task_size_mbits = size_mbits;
    obs.comp_wait_slots = timelines_[device].comp_wait(slot);
    obs.tran_wait_slots = timelines_[device].tran_wait(slot);
    obs.edge_queue_mbits.resize(p_.num_edges);
    for (int n = 0; n < p_.num_edges; ++n)
      obs.edge_queue_mbits[n] = edges_[n].queue_mbits(device);
    obs.load_history = history_.matrix();
    obs.t_step = p_.t_step;
    obs.num_edges = p_.num_edges;
    return obs;
  }

  static int unclamped_finish(const Task& task, int delta, double rate) {
    return task.birth_slot + delta + service_slots(task.size_mbits, rate) - 1;
  }

  CostEvent make_event(const Task& task, int slot, bool dropped) const {
    CostEvent ev;
    ev.birth_slot = task.birth_slot;
    ev.dropped = dropped;
    ev.delay_slots = dropped ? 0 : slot - task.birth_slot + 1;
    ev.cost = dropped ? p_.drop_penalty : static_cast<double>(ev.delay_slots);
    ev.task_id = task.id;
    ev.device = task.device;
    return ev;
  }

  void push_event(int slot, CostEvent ev) { pending_events_[slot].push_back(std::move(ev)); }

  void trace(int slot, int device, const char* kind, std::uint64_t id, double cost) {
    if (trace_) trace_(TraceEvent{slot, device, kind, id, cost});
  }

  SimParams p_;
  std::vector<ArrivalProcess> arrivals_proc_;
  std::vector<DeviceTimeline> timelines_;
  std::vector<EdgeQueue> edges_;
  LoadHistory history_;
  std::map<int, std::vector<CostEvent>> pending_events_;       // slot -> events
  std::map<int, std::vector<std::pair<Task, int>>> deliveries_;  // slot -> (task, edge)
  std::vector<std::optional<Task>> current_arrivals_;
  std::vector<bool> action_taken_;
  EpisodeAccounting acc_;
  std::uint64_t next_task_id_ = 1;
  int slot_ = 0;
  bool stepped_ = true;
  std::function<void(const TraceEvent&)> trace_;
};

}  // namespace mecoff
