#include <doctest.h>

#include <random>

#include "offload/core/error.hpp"
#include "offload/server_sched/hrrn.hpp"

using namespace offload;

namespace {

TaskInstanceId tid(std::uint64_t n) { return {TaskClassId("t", "T"), n}; }

HrrnEntry entry(std::uint64_t n, double arrival, double est) { return {tid(n), arrival, est}; }

}  // namespace

TEST_CASE("priority examples") {
  CHECK(hrrn_priority(entry(1, 10, 4), 10) == doctest::Approx(1.0));
  CHECK(hrrn_priority(entry(1, 10, 4), 14) == doctest::Approx(2.0));
  CHECK(hrrn_priority(entry(1, 0, 3), 9) == doctest::Approx(4.0));
  CHECK_THROWS_AS(hrrn_priority(entry(1, 0, 0), 1), Error);
  CHECK_THROWS_AS(hrrn_priority(entry(1, 0, -1), 1), Error);
}

TEST_CASE("pick_next examples") {
  ServerQueueState s;
  s.push(entry(1, 0, 8));
  s.push(entry(2, 0, 2));
  CHECK(pick_next(s, 1.0)->instance == tid(2));

  // Against a fresh 2 s job: (w + 8) / 8 > (0 + 2) / 2 exactly when w > 0.
  for (double w : {0.001, 0.5, 3.0}) {
    ServerQueueState q;
    q.push(entry(1, 0, 8));
    q.push(entry(2, w, 2));
    CHECK(pick_next(q, w)->instance == tid(1));
  }
  // Against a 2 s job that has waited 2 s: (w + 8) / 8 > (2 + 2) / 2 exactly when w > 8.
  for (double w : {7.9, 8.0, 8.1}) {
    ServerQueueState q;
    q.push(entry(1, 0, 8));
    q.push(entry(2, w - 2, 2));
    const auto picked = pick_next(q, w)->instance;
    if (w > 8.0) {
      CHECK(picked == tid(1));
    } else if (w < 8.0) {
      CHECK(picked == tid(2));
    } else {
      // Equal ratios: the earlier arrival wins.
      CHECK(picked == tid(1));
    }
  }
  ServerQueueState empty;
  CHECK(!pick_next(empty, 0.0));
}

TEST_CASE("pick_next equals brute-force argmax on all small queues of a seeded grid") {
  const std::vector<double> waits{0.0, 0.5, 1.0, 3.0, 8.0};
  const std::vector<double> ests{0.5, 1.0, 2.0, 8.0};
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto n = 1 + rng() % 6;
    const double now = 10.0;
    ServerQueueState s;
    std::vector<HrrnEntry> entries;
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto e = entry(100 - i, now - waits[rng() % waits.size()], ests[rng() % ests.size()]);
      entries.push_back(e);
      s.push(e);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const auto& a = entries[i];
      const auto& b = entries[best];
      const double pa = (now - a.arrival_s + a.est_run_s) / a.est_run_s;
      const double pb = (now - b.arrival_s + b.est_run_s) / b.est_run_s;
      if (pa > pb || (pa == pb && (a.arrival_s < b.arrival_s ||
                                   (a.arrival_s == b.arrival_s && a.instance < b.instance)))) {
        best = i;
      }
    }
    CHECK(pick_next(s, now)->instance == entries[best].instance);
    CHECK(s.queue.size() == n - 1);
  }
}

TEST_CASE("should_steal compares load with the watermark") {
  ServerQueueState s;
  s.low_watermark = 1;
  CHECK(should_steal(s));
  s.running = tid(1);
  s.push(entry(2, 0, 1));
  CHECK(!should_steal(s));
  ServerQueueState z;
  z.low_watermark = 0;
  CHECK(should_steal(z));
  z.push(entry(3, 0, 1));
  CHECK(!should_steal(z));
}

TEST_CASE("adding work never turns should_steal from false to true") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    ServerQueueState s;
    s.low_watermark = static_cast<std::uint32_t>(rng() % 4);
    bool was = should_steal(s);
    for (std::uint64_t i = 0; i < 8; ++i) {
      if (i == 0 && rng() % 2) {
        s.running = tid(1000);
      } else {
        s.push(entry(i, 0, 1));
      }
      const bool now = should_steal(s);
      CHECK(!(now && !was));
      was = now;
    }
  }
}

TEST_CASE("duplicate push is rejected") {
  ServerQueueState s;
  s.push(entry(1, 0, 1));
  CHECK_THROWS_AS(s.push(entry(1, 0, 2)), Error);
  s.running = tid(2);
  CHECK_THROWS_AS(s.push(entry(2, 0, 2)), Error);
}
