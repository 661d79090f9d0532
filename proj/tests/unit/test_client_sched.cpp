#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "offload/client_sched/dual_buffer.hpp"
#include "offload/core/error.hpp"

using namespace offload;

namespace {

TaskInstanceId tid(std::uint64_t n) { return {TaskClassId("t", "T"), n}; }

const FleetInfo kMixed{true, true};
const FleetInfo kAllC{false, true};
const FleetInfo kAllH{true, false};

std::vector<TaskInstanceId> ids(const std::vector<StolenTask>& v) {
  std::vector<TaskInstanceId> out;
  for (const auto& s : v) out.push_back(s.id);
  return out;
}

// Reference model: plain lists with explicit enqueue ages.
struct Model {
  struct E {
    TaskInstanceId id;
    std::uint64_t age;
  };
  std::vector<E> h, l;
  std::uint64_t age = 0;

  std::vector<TaskInstanceId> steal(PerfClass cls, FleetInfo fleet, std::uint32_t cap,
                                    const std::function<bool(const TaskInstanceId&)>& ok) {
    std::vector<TaskInstanceId> out;
    auto take_from = [&](std::vector<E>& q) {
      for (auto it = q.begin(); it != q.end() && out.size() < cap;) {
        if (ok(it->id)) {
          out.push_back(it->id);
          it = q.erase(it);
        } else {
          ++it;
        }
      }
    };
    if (fleet.mixed() && cls != PerfClass::unclassified) {
      take_from(cls == PerfClass::H ? h : l);
      take_from(cls == PerfClass::H ? l : h);
      return out;
    }
    while (out.size() < cap) {
      std::vector<E>* best = nullptr;
      std::vector<E>::iterator best_it;
      for (auto* q : {&h, &l}) {
        auto it = std::find_if(q->begin(), q->end(), [&](const E& e) { return ok(e.id); });
        if (it != q->end() && (!best || it->age < best_it->age)) {
          best = q;
          best_it = it;
        }
      }
      if (!best) break;
      out.push_back(best_it->id);
      best->erase(best_it);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("EDP threshold places tasks, ties go to H") {
  DualBuffer b(10.0);
  CHECK(b.enqueue(tid(1), 12.0) == BufferId::H);
  CHECK(b.enqueue(tid(2), 9.99) == BufferId::L);
  CHECK(b.enqueue(tid(3), 10.0) == BufferId::H);
  try {
    b.enqueue(tid(1), 1.0);
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateTask);
  }
}

TEST_CASE("H server in a mixed fleet drains H then L") {
  DualBuffer b(10.0);
  b.enqueue(tid(1), 20);
  b.enqueue(tid(3), 1);
  b.enqueue(tid(2), 20);
  const auto got = b.service_steal({"laptop", PerfClass::H, 3}, kMixed);
  CHECK(ids(got) == std::vector{tid(1), tid(2), tid(3)});
  CHECK(got[2].from == BufferId::L);
}

TEST_CASE("C server in a mixed fleet takes H only when L is empty") {
  DualBuffer b(10.0);
  b.enqueue(tid(1), 20);
  CHECK(ids(b.service_steal({"phone", PerfClass::C, 1}, kMixed)) == std::vector{tid(1)});

  DualBuffer c(10.0);
  c.enqueue(tid(1), 20);
  c.enqueue(tid(2), 1);
  CHECK(ids(c.service_steal({"phone", PerfClass::C, 1}, kMixed)) == std::vector{tid(2)});
}

TEST_CASE("single-class fleet takes from both buffers oldest first") {
  DualBuffer b(10.0);
  b.enqueue(tid(1), 20);
  b.enqueue(tid(2), 1);
  CHECK(ids(b.service_steal({"phone", PerfClass::C, 2}, kAllC)) == std::vector{tid(1), tid(2)});
  DualBuffer c(10.0);
  c.enqueue(tid(5), 1);
  c.enqueue(tid(6), 20);
  c.enqueue(tid(7), 1);
  CHECK(ids(c.service_steal({"laptop", PerfClass::H, 3}, kAllH)) == std::vector{tid(5), tid(6), tid(7)});
}

TEST_CASE("empty buffers yield nothing") {
  DualBuffer b(1.0);
  CHECK(b.service_steal({"x", PerfClass::H, 4}, kMixed).empty());
}

TEST_CASE("requeue restores an aborted steal to the head of its buffer") {
  DualBuffer b(10.0);
  b.enqueue(tid(1), 20);
  b.enqueue(tid(2), 20);
  const auto got = b.service_steal({"laptop", PerfClass::H, 1}, kMixed);
  REQUIRE(ids(got) == std::vector{tid(1)});
  CHECK(!b.contains(tid(1)));
  b.requeue_failed(tid(1));
  CHECK(b.snapshot(BufferId::H) == std::vector{tid(1), tid(2)});
  CHECK_THROWS_AS(b.requeue_failed(tid(1)), Error);

  b.service_steal({"laptop", PerfClass::H, 1}, kMixed);
  b.confirm_transferred(tid(1));
  try {
    b.requeue_failed(tid(1));
    FAIL("requeue after transfer accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
}

TEST_CASE("ineligible tasks are skipped and stay queued") {
  DualBuffer b(10.0);
  b.enqueue(tid(1), 20);
  b.enqueue(tid(2), 20);
  const auto got = b.service_steal({"laptop", PerfClass::H, 2}, kMixed, [](const TaskInstanceId& id) {
    return id.sequence != 1;
  });
  CHECK(ids(got) == std::vector{tid(2)});
  CHECK(b.contains(tid(1)));
  CHECK(b.count_eligible(BufferId::H, [](const TaskInstanceId&) { return true; }) == 1);
}

TEST_CASE("random operation sequences match the reference model") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    DualBuffer b(5.0);
    Model m;
    std::uint64_t next = 1;
    std::set<TaskInstanceId> out_there;
    std::size_t stolen = 0, enqueued = 0;
    for (int step = 0; step < 60; ++step) {
      const auto op = rng() % 3;
      if (op < 2) {
        const double edp = static_cast<double>(rng() % 100) / 10.0;
        const auto id = tid(next++);
        const auto where = b.enqueue(id, edp);
        ++enqueued;
        CHECK(where == (edp >= 5.0 ? BufferId::H : BufferId::L));
        (edp >= 5.0 ? m.h : m.l).push_back({id, m.age++});
      } else {
        const PerfClass cls = rng() % 2 ? PerfClass::H : PerfClass::C;
        const FleetInfo fleet{static_cast<bool>(rng() % 2), static_cast<bool>(rng() % 2)};
        const auto cap = static_cast<std::uint32_t>(1 + rng() % 3);
        const auto parity = rng() % 3;
        const auto ok = [parity](const TaskInstanceId& id) { return parity == 2 || id.sequence % 2 == parity; };
        const auto got = ids(b.service_steal({"s", cls, cap}, fleet, ok));
        CHECK(got == m.steal(cls, fleet, cap, ok));
        for (const auto& id : got) {
          CHECK(out_there.insert(id).second);
          b.confirm_transferred(id);
        }
        stolen += got.size();
      }
      CHECK(b.size(BufferId::H) == m.h.size());
      CHECK(b.size(BufferId::L) == m.l.size());
    }
    CHECK(stolen + b.size(BufferId::H) + b.size(BufferId::L) == enqueued);
  }
}
