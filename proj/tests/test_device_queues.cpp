#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "mecoff/device_queues.hpp"
#include "mecoff/rng.hpp"
#include "mecoff/task.hpp"

using namespace mecoff;

namespace {

Task make_task(std::uint64_t id, int birth, double size, double density = 0.297,
               int deadline = 10) {
  Task t;
  t.id = id;
  t.device = 0;
  t.birth_slot = birth;
  t.size_mbits = size;
  t.density_gcycles_per_mbit = density;
  t.deadline_slots = deadline;
  return t;
}

// Minimal slot-by-slot serial queue: the head drains at a fixed rate, a
// finished or dropped head hands over at the next slot, deadline drops at end
// of slot. Independent of the closed-form path under test.
std::map<std::uint64_t, int> slot_sim(const std::vector<Task>& tasks, double rate) {
  std::map<int, std::vector<Task>> by_slot;
  int last = 0;
  for (const Task& t : tasks) {
    by_slot[t.birth_slot].push_back(t);
    last = std::max(last, t.deadline_slot());
  }
  std::map<std::uint64_t, int> out;
  std::deque<std::pair<Task, double>> queue;
  for (int slot = 1; slot <= last; ++slot) {
    if (auto it = by_slot.find(slot); it != by_slot.end())
      for (const Task& t : it->second) queue.emplace_back(t, t.size_mbits);
    if (!queue.empty()) {
      auto& [task, remaining] = queue.front();
      remaining -= rate;
      if (remaining <= kServiceTolMbits) {
        out[task.id] = slot;
        queue.pop_front();
      }
    }
    for (auto it = queue.begin(); it != queue.end();) {
      if (it->first.deadline_slot() <= slot) {
        out[it->first.id] = slot;
        it = queue.erase(it);
      } else {
        ++it;
      }
    }
  }
  return out;
}

}  // namespace

// ============================================================================
// Arrival process
// ============================================================================

TEST_CASE("zero arrival probability never produces a task", "[device]") {
  ArrivalProcess proc(0.0, {2.0}, 42);
  std::uint64_t next_id = 1;
  for (int t = 1; t <= 200; ++t)
    REQUIRE_FALSE(proc.draw_arrival(0, t, 0.297, 10, next_id).has_value());
}

TEST_CASE("unit arrival probability with one size fires every slot", "[device]") {
  ArrivalProcess proc(1.0, {2.0}, 7);
  std::uint64_t next_id = 1;
  for (int t = 1; t <= 50; ++t) {
    auto task = proc.draw_arrival(3, t, 0.297, 10, next_id);
    REQUIRE(task.has_value());
    CHECK(task->size_mbits == 2.0);
    CHECK(task->device == 3);
    CHECK(task->birth_slot == t);
  }
  CHECK(next_id == 51);
}

TEST_CASE("identical stream seeds reproduce the arrival sequence", "[device]") {
  auto draw_all = [](std::uint64_t seed) {
    ArrivalProcess proc(0.4, {2.0, 3.0, 4.0, 5.0}, seed);
    std::uint64_t next_id = 1;
    std::vector<std::pair<int, double>> seq;
    for (int t = 1; t <= 300; ++t)
      if (auto task = proc.draw_arrival(0, t, 0.297, 10, next_id))
        seq.emplace_back(t, task->size_mbits);
    return seq;
  };
  CHECK(draw_all(99) == draw_all(99));
  CHECK(draw_all(99) != draw_all(100));
}

TEST_CASE("arrival process validates its parameters", "[device]") {
  CHECK_THROWS_AS(ArrivalProcess(1.5, {2.0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalProcess(0.3, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(ArrivalProcess(0.3, {0.0}, 1), std::invalid_argument);
}

// ============================================================================
// Queue waits
// ============================================================================

TEST_CASE("computation wait counts slots until the queue clears", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  // Task born in slot 1 occupies the queue through slot 5.
  Task big = make_task(1, 1, 3.8);  // ceil(3.8 / 0.8418) = 5 slots
  REQUIRE(tl.comp_finish(big, 0) == 5);
  CHECK(tl.comp_wait(3) == 3);
  CHECK(tl.comp_wait(5) == 1);
  CHECK(tl.comp_wait(6) == 0);
}

TEST_CASE("waits are zero on an empty history and clamp at zero", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  CHECK(tl.comp_wait(1) == 0);
  CHECK(tl.tran_wait(1) == 0);
  Task t = make_task(1, 1, 2.0);
  REQUIRE(tl.tran_finish(t, 0, 0) == 2);  // ceil(2.0/1.4) = 2
  CHECK(tl.tran_wait(4) == 0);            // max finish = 3 < 4
  CHECK(tl.tran_wait(3) == 0);            // exactly cleared
}

TEST_CASE("transmission wait mirrors the computation rule", "[device]") {
  DeviceTimeline tl(0.25, {1.0});
  Task t = make_task(1, 1, 6.0, 0.297, 10);  // 6 slots at 1.0 Mbit/slot
  REQUIRE(tl.tran_finish(t, 0, 0) == 6);
  CHECK(tl.tran_wait(4) == 3);
}

// ============================================================================
// Finish slots (closed form)
// ============================================================================

TEST_CASE("local finish uses the per-slot cycle budget", "[device]") {
  DeviceTimeline tl(0.25, {1.4});  // 2.5 GHz x 0.1 s
  // 3.0 Mbit at 0.297 Gcyc/Mbit: 0.8418 Mbit/slot -> 4 slots.
  CHECK(tl.comp_finish(make_task(1, 1, 3.0), 0) == 4);
  // 2.0 Mbit -> 3 slots.
  CHECK(tl.comp_finish(make_task(2, 5, 2.0), 0) == 7);
}

TEST_CASE("deadline dominates when the wait already equals it", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  Task t = make_task(1, 4, 2.0);
  CHECK(tl.comp_finish(t, t.deadline_slots) == t.deadline_slot());
}

TEST_CASE("transmission finish uses the per-slot bit budget", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  // 3.0 Mbit at 1.4 Mbit/slot -> 3 slots.
  CHECK(tl.tran_finish(make_task(1, 1, 3.0), 0, 0) == 3);
  // One-slot send when the size fits the per-slot budget.
  CHECK(tl.tran_finish(make_task(2, 6, 1.2), 0, 0) == 6);
}

TEST_CASE("transmission drop when the wait alone eats the deadline", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  Task t = make_task(1, 2, 3.0);
  CHECK(tl.tran_finish(t, t.deadline_slots, 0) == t.deadline_slot());
}

TEST_CASE("capacities and edge indices are validated", "[device]") {
  CHECK_THROWS_AS(DeviceTimeline(0.0, {1.4}), std::invalid_argument);
  CHECK_THROWS_AS(DeviceTimeline(0.25, {0.0}), std::invalid_argument);
  DeviceTimeline tl(0.25, {1.4, 1.4});
  CHECK_THROWS_AS(tl.tran_finish(make_task(1, 1, 2.0), 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(tl.tran_finish(make_task(1, 1, 2.0), 0, -1), std::invalid_argument);
}

// ============================================================================
// Properties against the slot-by-slot reference
// ============================================================================

TEST_CASE("closed-form finish slots match the slot-by-slot queue", "[device]") {
  Rng rng(substream_seed(2024, Stream::instance));
  for (int rep = 0; rep < 300; ++rep) {
    double capacity = 0.05 + rng.uniform01();           // Gcyc per slot
    double density = 0.05 + rng.uniform01() * 0.5;      // Gcyc per Mbit
    double tran_rate = 0.2 + rng.uniform01() * 3.0;     // Mbit per slot
    int deadline = 1 + static_cast<int>(rng.uniform_below(12));
    DeviceTimeline tl(capacity, {tran_rate});

    std::vector<Task> comp_tasks, tran_tasks;
    std::map<std::uint64_t, int> comp_closed, tran_closed;
    std::uint64_t id = 1;
    for (int t = 1; t <= 25; ++t) {
      if (rng.uniform01() < 0.5) {
        Task task = make_task(id++, t, 0.2 + rng.uniform01() * 5.0, density, deadline);
        if (rng.uniform01() < 0.5) {
          comp_tasks.push_back(task);
          comp_closed[task.id] = tl.comp_finish(task, tl.comp_wait(t));
        } else {
          tran_tasks.push_back(task);
          tran_closed[task.id] = tl.tran_finish(task, tl.tran_wait(t), 0);
        }
      }
    }

    auto comp_ref = slot_sim(comp_tasks, capacity / density);
    auto tran_ref = slot_sim(tran_tasks, tran_rate);
    REQUIRE(comp_closed == comp_ref);
    REQUIRE(tran_closed == tran_ref);
  }
}

TEST_CASE("serial discipline: recorded busy intervals never overlap", "[device]") {
  Rng rng(substream_seed(77, Stream::instance));
  for (int rep = 0; rep < 100; ++rep) {
    DeviceTimeline tl(0.1 + rng.uniform01(), {1.4});
    int deadline = 2 + static_cast<int>(rng.uniform_below(10));
    int prev_finish = 0;
    std::uint64_t id = 1;
    for (int t = 1; t <= 30; ++t) {
      if (rng.uniform01() < 0.6) {
        Task task = make_task(id++, t, 0.2 + rng.uniform01() * 4.0, 0.3, deadline);
        int wait = tl.comp_wait(t);
        int start = t + wait;
        int finish = tl.comp_finish(task, wait);
        // Task starts strictly after everything scheduled before it ended.
        CHECK(start > prev_finish);
        CHECK(finish <= task.deadline_slot());
        CHECK(finish >= t);
        prev_finish = std::max(prev_finish, finish);
      }
    }
  }
}

TEST_CASE("timeline rejects out-of-order scheduling", "[device]") {
  DeviceTimeline tl(0.25, {1.4});
  REQUIRE(tl.comp_finish(make_task(1, 5, 2.0), 0) > 0);
  CHECK_THROWS_AS(tl.comp_finish(make_task(2, 5, 2.0), 0), std::logic_error);
  CHECK_THROWS_AS(tl.comp_finish(make_task(3, 4, 2.0), 0), std::logic_error);
}
