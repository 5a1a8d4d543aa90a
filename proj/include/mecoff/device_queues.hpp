// Per-device computation and transmission queue timing.
//
// Both queues are serial: when the head task finishes (or is dropped) in a
// slot, the next task starts at the beginning of the next slot. Finish slots
// are therefore known in closed form at scheduling time; the timeline only
// records them.
#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "mecoff/task.hpp"

namespace mecoff {

class DeviceTimeline {
 public:
  DeviceTimeline() = default;
  DeviceTimeline(double device_gcycles_per_slot, std::vector<double> tran_mbits_per_slot)
      : device_gcycles_per_slot_(device_gcycles_per_slot),
        tran_mbits_per_slot_(std::move(tran_mbits_per_slot)) {
    if (device_gcycles_per_slot_ <= 0.0)
      throw std::invalid_argument("device capacity must be positive");
    for (double c : tran_mbits_per_slot_)
      if (c <= 0.0) throw std::invalid_argument("transmission capacity must be positive");
  }

  // Slots a task arriving at `slot` waits before local processing starts.
  int comp_wait(int slot) const { return wait_from(max_comp_finish_, slot); }

  // Slots a task arriving at `slot` waits before its transmission starts.
  int tran_wait(int slot) const { return wait_from(max_tran_finish_, slot); }

  // Schedules the task in the computation queue; returns and records the
  // slot in which it finishes processing or is dropped at its deadline.
  int comp_finish(const Task& task, int delta_comp) {
    double rate = device_gcycles_per_slot_ / task.density_gcycles_per_mbit;
    int finish = task.birth_slot + delta_comp + service_slots(task.size_mbits, rate) - 1;
    int slot = std::min(finish, task.deadline_slot());
    record(comp_finish_slots_, max_comp_finish_, task.birth_slot, slot);
    return slot;
  }

  // Schedules the task in the transmission queue toward `edge`; returns and
  // records the slot in which it is fully sent or dropped at its deadline.
  int tran_finish(const Task& task, int delta_tran, int edge) {
    if (edge < 0 || edge >= static_cast<int>(tran_mbits_per_slot_.size()))
      throw std::invalid_argument("tran_finish: edge index out of range");
    double rate = tran_mbits_per_slot_[edge];
    int finish = task.birth_slot + delta_tran + service_slots(task.size_mbits, rate) - 1;
    int slot = std::min(finish, task.deadline_slot());
    record(tran_finish_slots_, max_tran_finish_, task.birth_slot, slot);
    return slot;
  }

  void clear() {
    comp_finish_slots_.clear();
    tran_finish_slots_.clear();
    max_comp_finish_ = 0;
    max_tran_finish_ = 0;
  }

  double device_gcycles_per_slot() const { return device_gcycles_per_slot_; }
  const std::vector<double>& tran_mbits_per_slot() const { return tran_mbits_per_slot_; }
  const std::map<int, int>& comp_finish_slots() const { return comp_finish_slots_; }
  const std::map<int, int>& tran_finish_slots() const { return tran_finish_slots_; }

 private:
  static int wait_from(int max_finish, int slot) {
    return std::max(0, max_finish - slot + 1);
  }

  static void record(std::map<int, int>& slots, int& max_finish, int birth, int finish) {
    if (!slots.empty() && birth <= slots.rbegin()->first)
      throw std::logic_error("device queue: tasks must be scheduled in birth order");
    slots.emplace(birth, finish);
    max_finish = std::max(max_finish, finish);
  }

  double device_gcycles_per_slot_ = 1.0;
  std::vector<double> tran_mbits_per_slot_;
  std::map<int, int> comp_finish_slots_;  // birth slot -> finish slot
  std::map<int, int> tran_finish_slots_;
  int max_comp_finish_ = 0;
  int max_tran_finish_ = 0;
};

}  // namespace mecoff
