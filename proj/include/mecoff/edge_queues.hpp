// Edge-node queues with equal-share processor sharing across active queues.
//
// Each edge keeps one queue per device. Within a slot every active queue
// receives the same share of the edge capacity; the share serves the queue's
// head task only, and a task that completes or is dropped hands the queue to
// its successor at the beginning of the next slot. Unfinished tasks are
// dropped at the end of their deadline slot regardless of queue position.
#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mecoff/task.hpp"

namespace mecoff {

struct EdgeStepResult {
  struct PerDevice {
    double processed_mbits = 0.0;
    std::vector<std::pair<Task, int>> completed;   // (task, completion slot)
    std::vector<std::pair<Task, double>> dropped;  // (task, remaining bits)
  };
  std::vector<PerDevice> devices;
  int active_count = 0;  // B_n(t)
};

class EdgeQueue {
 public:
  EdgeQueue() = default;
  EdgeQueue(int num_devices, double edge_gcycles_per_slot)
      : edge_gcycles_per_slot_(edge_gcycles_per_slot), queues_(num_devices) {
    if (num_devices <= 0) throw std::invalid_argument("edge queue needs at least one device");
    if (edge_gcycles_per_slot_ <= 0.0)
      throw std::invalid_argument("edge capacity must be positive");
  }

  // Places a task that finished transmission in slot-1 into its queue.
  void deliver(const Task& task, int slot) {
    (void)slot;
    if (!seen_ids_.insert(task.id).second)
      throw std::invalid_argument("duplicate delivery of task id");
    auto& q = queues_.at(task.device);
    q.inflight.push_back(Inflight{task, task.size_mbits});
    q.arrived_mbits += task.size_mbits;
    q.tracked_mbits += task.size_mbits;
  }

  // Active queues for the current slot: arrival now or backlog from slot-1.
  std::vector<int> active_set() const {
    std::vector<int> active;
    for (int m = 0; m < static_cast<int>(queues_.size()); ++m) {
      const auto& q = queues_[m];
      if (q.arrived_mbits > 0.0 || q.prev_queue_mbits > 0.0) active.push_back(m);
    }
    return active;
  }

  // Advances the edge one slot: serves every active queue its equal share,
  // collects completions, then drops deadline-expired tasks. Serving only the
  // head once per slot makes a successor start in the following slot.
  EdgeStepResult step(int slot) {
    EdgeStepResult result;
    result.devices.resize(queues_.size());
    std::vector<int> active = active_set();
    result.active_count = static_cast<int>(active.size());

    for (int m : active) {
      auto& q = queues_[m];
      auto& out = result.devices[m];
      if (q.inflight.empty()) continue;
      Inflight& head = q.inflight.front();
      double share = edge_gcycles_per_slot_ /
                     (head.task.density_gcycles_per_mbit * result.active_count);
      double served = std::min(share, head.remaining_mbits);
      head.remaining_mbits -= served;
      out.processed_mbits = served;
      q.tracked_mbits -= served;
      if (head.remaining_mbits <= kServiceTolMbits) {
        q.tracked_mbits -= head.remaining_mbits;
        out.completed.emplace_back(head.task, slot);
        q.inflight.pop_front();
      }
    }

    // Deadline drops at end of slot, any queue position.
    for (int m = 0; m < static_cast<int>(queues_.size()); ++m) {
      auto& q = queues_[m];
      auto& out = result.devices[m];
      for (auto it = q.inflight.begin(); it != q.inflight.end();) {
        if (it->task.deadline_slot() <= slot) {
          out.dropped.emplace_back(it->task, it->remaining_mbits);
          q.tracked_mbits -= it->remaining_mbits;
          it = q.inflight.erase(it);
        } else {
          ++it;
        }
      }
      q.arrived_mbits = 0.0;
      q.prev_queue_mbits = queue_mbits(m);
      check_bookkeeping(q);
    }
    return result;
  }

  // Exact backlog: sum of remaining bits over the in-flight tasks.
  double queue_mbits(int device) const {
    double total = 0.0;
    for (const auto& f : queues_.at(device).inflight) total += f.remaining_mbits;
    return total;
  }

  int inflight_count(int device) const {
    return static_cast<int>(queues_.at(device).inflight.size());
  }

  int unresolved_count() const {
    int n = 0;
    for (const auto& q : queues_) n += static_cast<int>(q.inflight.size());
    return n;
  }

  void clear() {
    for (auto& q : queues_) {
      q.inflight.clear();
      q.arrived_mbits = 0.0;
      q.prev_queue_mbits = 0.0;
      q.tracked_mbits = 0.0;
    }
    seen_ids_.clear();
  }

  double edge_gcycles_per_slot() const { return edge_gcycles_per_slot_; }
  int num_devices() const { return static_cast<int>(queues_.size()); }

 private:
  struct Inflight {
    Task task;
    double remaining_mbits;
  };
  struct DeviceQueue {
    std::deque<Inflight> inflight;
    double arrived_mbits = 0.0;     // lambda_edge of the current slot
    double prev_queue_mbits = 0.0;  // backlog at the end of the previous slot
    double tracked_mbits = 0.0;     // running queue-length update
  };

  // The running queue update must never go negative and must agree with the
  // exact remaining-bit sum to 1e-9 relative.
  static void check_bookkeeping(DeviceQueue& q) {
    double exact = 0.0;
    for (const auto& f : q.inflight) exact += f.remaining_mbits;
    double tol = 1e-9 * std::max(1.0, exact);
    if (q.tracked_mbits < -tol || std::abs(q.tracked_mbits - exact) > tol)
      throw std::logic_error("edge queue bookkeeping drifted from task remainders");
    q.tracked_mbits = exact;
  }

  double edge_gcycles_per_slot_ = 1.0;
  std::vector<DeviceQueue> queues_;
  std::unordered_set<std::uint64_t> seen_ids_;
};

// Ring buffer of per-edge active-queue counts, newest last. Slots before the
// episode start read as zero when assembled into the observation matrix.
class LoadHistory {
 public:
  LoadHistory() = default;
  LoadHistory(int window_slots, int num_edges)
      : window_(window_slots), num_edges_(num_edges) {
    if (window_ <= 0) throw std::invalid_argument("load history window must be positive");
    if (num_edges_ < 0) throw std::invalid_argument("negative edge count");
  }

  void record(const std::vector<int>& per_edge_counts) {
    if (static_cast<int>(per_edge_counts.size()) != num_edges_)
      throw std::invalid_argument("load record has wrong edge count");
    counts_.push_back(per_edge_counts);
    if (static_cast<int>(counts_.size()) > window_) counts_.pop_front();
  }

  // window x num_edges matrix, row-major, oldest row first, zero padded.
  std::vector<double> matrix() const {
    std::vector<double> h(static_cast<std::size_t>(window_) * num_edges_, 0.0);
    int pad = window_ - static_cast<int>(counts_.size());
    for (int i = 0; i < static_cast<int>(counts_.size()); ++i)
      for (int j = 0; j < num_edges_; ++j)
        h[static_cast<std::size_t>(pad + i) * num_edges_ + j] = counts_[i][j];
    return h;
  }

  // Most recent counts; zeros before the first record.
  std::vector<int> newest() const {
    if (counts_.empty()) return std::vector<int>(num_edges_, 0);
    return counts_.back();
  }

  int size() const { return static_cast<int>(counts_.size()); }
  int window() const { return window_; }
  int num_edges() const { return num_edges_; }

  void clear() { counts_.clear(); }

 private:
  int window_ = 1;
  int num_edges_ = 0;
  std::deque<std::vector<int>> counts_;
};

}  // namespace mecoff
