// Task model and arrival process for the slotted offloading simulator.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mecoff/rng.hpp"

namespace mecoff {

// Service completion tolerance, in Mbit. Guards the per-slot bit accounting
// (and the matching closed-form ceilings) against float noise flipping a
// completion across a slot boundary, e.g. 3 * 1.4 vs 4.2.
inline constexpr double kServiceTolMbits = 1e-6;

// One computational job. Sizes are in Mbit, densities in Gcycle/Mbit,
// deadlines in slots relative to the birth slot.
struct Task {
  std::uint64_t id = 0;  // unique per run; 0 means "no task"
  int device = -1;
  int birth_slot = 0;
  double size_mbits = 0.0;
  double density_gcycles_per_mbit = 0.0;
  int deadline_slots = 1;  // tau

  // Last slot in which the task may finish before it is dropped.
  int deadline_slot() const { return birth_slot + deadline_slots - 1; }
};

// Number of whole slots a queue head needs at a fixed per-slot rate.
inline int service_slots(double size_mbits, double mbits_per_slot) {
  if (mbits_per_slot <= 0.0)
    throw std::invalid_argument("service_slots: non-positive rate");
  int n = static_cast<int>(std::ceil((size_mbits - kServiceTolMbits) / mbits_per_slot));
  return n < 1 ? 1 : n;
}

// Bernoulli arrival per slot with sizes drawn uniformly from a discrete set.
// A fixed stream seed reproduces the exact arrival sequence.
class ArrivalProcess {
 public:
  ArrivalProcess(double arrival_probability, std::vector<double> size_choices_mbits,
                 std::uint64_t stream_seed)
      : probability_(arrival_probability),
        sizes_(std::move(size_choices_mbits)),
        rng_(stream_seed) {
    if (probability_ < 0.0 || probability_ > 1.0)
      throw std::invalid_argument("arrival_probability outside [0,1]");
    if (sizes_.empty())
      throw std::invalid_argument("size choice set is empty");
    for (double s : sizes_)
      if (s <= 0.0) throw std::invalid_argument("non-positive task size");
  }

  // Draws the slot's arrival for device m. next_id supplies unique task ids.
  std::optional<Task> draw_arrival(int device, int slot, double density_gcycles_per_mbit,
                                   int deadline_slots, std::uint64_t& next_id) {
    if (rng_.uniform01() >= probability_) return std::nullopt;
    Task task;
    task.id = next_id++;
    task.device = device;
    task.birth_slot = slot;
    task.size_mbits = sizes_[rng_.uniform_below(sizes_.size())];
    task.density_gcycles_per_mbit = density_gcycles_per_mbit;
    task.deadline_slots = deadline_slots;
    return task;
  }

  double arrival_probability() const { return probability_; }
  const std::vector<double>& size_choices() const { return sizes_; }

 private:
  double probability_;
  std::vector<double> sizes_;
  Rng rng_;
};

}  // namespace mecoff
