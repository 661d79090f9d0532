#include <doctest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <random>

#include "offload/core/error.hpp"
#include "offload/tasklib/demo_tasks.hpp"
#include "offload/tasklib/task.hpp"

using namespace offload;
using namespace offload::demo;

namespace {

// Shortest distance by enumerating every simple path.
struct BruteRoute {
  double distance = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::uint32_t>> best_paths;
};

BruteRoute all_paths_oracle(const Graph& g, std::uint32_t s, std::uint32_t t) {
  BruteRoute out;
  std::vector<bool> seen(g.node_count, false);
  std::vector<std::uint32_t> path{s};
  seen[s] = true;
  std::function<void(std::uint32_t, double)> walk = [&](std::uint32_t u, double d) {
    if (u == t) {
      if (d < out.distance - 1e-12) {
        out.distance = d;
        out.best_paths = {path};
      } else if (std::abs(d - out.distance) <= 1e-12) {
        out.best_paths.push_back(path);
      }
      return;
    }
    for (const auto& e : g.edges) {
      if (e.from != u || seen[e.to]) continue;
      seen[e.to] = true;
      path.push_back(e.to);
      walk(e.to, d + e.weight);
      path.pop_back();
      seen[e.to] = false;
    }
  };
  walk(s, 0.0);
  return out;
}

double path_length(const Graph& g, const std::vector<std::uint32_t>& path) {
  double d = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : g.edges) {
      if (e.from == path[i - 1] && e.to == path[i]) best = std::min(best, e.weight);
    }
    d += best;
  }
  return d;
}

TaskInstance route_instance(const Graph& g, std::uint32_t s, std::uint32_t t, std::uint64_t seq = 1) {
  FindRouteState st;
  st.work_s = 0.1;
  st.source = s;
  st.target = t;
  return TaskInstance{{kFindRoute, seq}, encode_find_route(st), encode_graph(g)};
}

RemotableTaskSpec simple_spec(const std::string& name) {
  RemotableTaskSpec spec;
  spec.class_id = TaskClassId("test", name);
  return spec;
}

}  // namespace

TEST_CASE("registry accepts demo classes and rejects duplicates") {
  TaskRegistry reg;
  register_demo_tasks(reg);
  CHECK(reg.contains(kFindRoute));
  const auto inst = reg.instantiate(kFindRoute, InstanceParams{1, 2048, 0.5, 3});
  CHECK(inst.id.str() == "demo/FindRoute#0001");
  CHECK(!inst.client_data.empty());
  try {
    reg.register_task_class(reg.get(kFindRoute));
    FAIL("duplicate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateClass);
  }
  try {
    reg.get(TaskClassId("demo", "Missing"));
    FAIL("unknown class accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownClass);
  }
}

TEST_CASE("UpdateInfo has no data hooks and runs its pre/exec/post steps") {
  TaskRegistry reg;
  register_demo_tasks(reg);
  const auto& spec = reg.get(kUpdateInfo);
  CHECK(!spec.hooks.load_data);
  CHECK(!spec.hooks.update_data);
  const auto inst = reg.instantiate(kUpdateInfo, InstanceParams{4, 0, 0.0, 2});
  ClientDataStore store;
  const auto blob = run_lifecycle_local(reg, inst, store);
  REQUIRE(blob.status == ResultStatus::finish);
  const auto s = decode_update_info(blob.payload);
  REQUIRE(s.log.size() == 4);
  CHECK(s.log[0] == "open database connection");
  CHECK(s.log[1] == "insert user info user4");
  CHECK(s.log[2] == "close database connection");
  CHECK(s.log[3] == "send notification to user");
}

TEST_CASE("FindRoute on a 5-node graph matches the all-paths oracle") {
  // 0->1 (1), 1->2 (1), 2->4 (1), 0->3 (2.5), 3->4 (0.2), 0->4 (10)
  Graph g{5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 4, 1.0}, {0, 3, 2.5}, {3, 4, 0.2}, {0, 4, 10.0}}};
  const auto oracle = all_paths_oracle(g, 0, 4);
  REQUIRE(oracle.best_paths.size() == 1);
  CHECK(oracle.distance == doctest::Approx(2.7));

  TaskRegistry reg;
  register_demo_tasks(reg);
  const auto inst = route_instance(g, 0, 4);
  ClientDataStore store;
  store.put(inst.id, inst.client_data);
  const auto blob = run_lifecycle_local(reg, inst, store);
  REQUIRE(blob.status == ResultStatus::finish);
  const auto s = decode_find_route(blob.payload);
  REQUIRE(s.route);
  CHECK(s.route->reachable);
  CHECK(s.route->distance == doctest::Approx(oracle.distance));
  CHECK(s.route->path == oracle.best_paths.front());
  CHECK(!s.graph);
}

TEST_CASE("dijkstra agrees with path enumeration on random small graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const auto n = static_cast<std::uint32_t>(2 + rng() % 6);
    Graph g{n, {}};
    const auto edges = rng() % (n * 3);
    for (std::uint64_t k = 0; k < edges; ++k) {
      const auto a = static_cast<std::uint32_t>(rng() % n), b = static_cast<std::uint32_t>(rng() % n);
      if (a != b) g.edges.push_back({a, b, 1.0 + static_cast<double>(rng() % 90) / 10.0});
    }
    const auto s = static_cast<std::uint32_t>(rng() % n), t = static_cast<std::uint32_t>(rng() % n);
    const auto oracle = all_paths_oracle(g, s, t);
    const auto r = dijkstra(g, s, t);
    if (oracle.best_paths.empty()) {
      CHECK(!r.reachable);
      continue;
    }
    REQUIRE(r.reachable);
    CHECK(r.distance == doctest::Approx(oracle.distance));
    CHECK(r.path.front() == s);
    CHECK(r.path.back() == t);
    CHECK(path_length(g, r.path) == doctest::Approx(oracle.distance));
  }
}

TEST_CASE("random demo graphs are connected") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = make_random_graph(12, 10, seed);
    for (std::uint32_t t = 1; t < 12; ++t) CHECK(dijkstra(g, 0, t).reachable);
    CHECK(decode_graph(encode_graph(g)).edges.size() == g.edges.size());
  }
}

TEST_CASE("a throwing execution hook yields fail") {
  TaskRegistry reg;
  auto spec = simple_spec("Boom");
  spec.hooks.execution = [](Bytes&) { throw std::runtime_error("boom"); };
  reg.register_task_class(spec);
  ClientDataStore store;
  const auto blob = run_lifecycle_local(reg, TaskInstance{{spec.class_id, 1}, {1, 2}, {}}, store);
  CHECK(blob.status == ResultStatus::fail);
}

TEST_CASE("a no-op task finishes and notifies once") {
  TaskRegistry reg;
  reg.register_task_class(simple_spec("Noop"));
  ClientDataStore store;
  int calls = 0;
  Transcript tr;
  const auto blob = run_lifecycle_local(
      reg, TaskInstance{{TaskClassId("test", "Noop"), 1}, {9}, {}}, store,
      [&](const TaskInstanceId&, const TaskStateBlob& b) {
        ++calls;
        CHECK(b.status == ResultStatus::finish);
      },
      &tr);
  CHECK(blob.status == ResultStatus::finish);
  CHECK(blob.payload == Bytes{9});
  CHECK(calls == 1);
  CHECK(tr == Transcript{"pre_execution", "load_data", "execution", "update_data", "post_execution"});
}

TEST_CASE("split lifecycle moves 1 KB of data in and results back out") {
  TaskRegistry reg;
  register_demo_tasks(reg);
  const auto inst = reg.instantiate(kFaceDetect, InstanceParams{1, 1024, 0.2, 5});
  CHECK(inst.client_data.size() == 1024);
  ClientDataStore store;
  store.put(inst.id, inst.client_data);
  Transcript tr;
  const auto blob = run_lifecycle_split(reg, inst, store, {}, &tr);
  CHECK(blob.status == ResultStatus::finish);
  const auto pos = [&](const std::string& s) {
    return std::distance(tr.begin(), std::find(tr.begin(), tr.end(), s));
  };
  CHECK(std::count(tr.begin(), tr.end(), "transfer:client->server:data") == 1);
  CHECK(std::count(tr.begin(), tr.end(), "transfer:server->client:data") == 1);
  CHECK(pos("transfer:client->server:data") < pos("execution"));
  CHECK(pos("execution") < pos("transfer:server->client:data"));
}

TEST_CASE("empty load_data causes no data transfer") {
  TaskRegistry reg;
  register_demo_tasks(reg);
  const auto inst = reg.instantiate(kUpdateInfo, InstanceParams{2, 0, 0.0, 1});
  ClientDataStore store;
  Transcript tr;
  run_lifecycle_split(reg, inst, store, {}, &tr);
  for (const auto& e : tr) CHECK(e.find(":data") == std::string::npos);
  CHECK(std::count(tr.begin(), tr.end(), "transfer:client->server:task") == 1);
}

TEST_CASE("remote body failure skips the remote epilogue and re-runs locally") {
  TaskRegistry reg;
  auto spec = simple_spec("Flaky");
  spec.hooks.load_data = [](Bytes& state, std::span<const std::uint8_t> data) {
    if (!data.empty() && data[0] == 0xFF) throw std::runtime_error("corrupt");
    state.push_back(1);
  };
  reg.register_task_class(spec);
  const auto lifecycle = split_lifecycle_remote(reg, spec.class_id);
  const Bytes bad{0xFF};
  Transcript tr;
  const auto body = lifecycle.remote_body({}, bad, &tr);
  CHECK(body.blob.status == ResultStatus::fail);
  CHECK(std::find(tr.begin(), tr.end(), "post_execution") == tr.end());
}

TEST_CASE("hook order holds and results match across local and split runs") {
  TaskRegistry reg;
  register_demo_tasks(reg);
  for (const auto& cls : {kFindRoute, kFaceDetect, kUpdateInfo}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = reg.instantiate(cls, InstanceParams{seed + 1, 4096, 0.3, seed});
      ClientDataStore a, b;
      a.put(inst.id, inst.client_data);
      b.put(inst.id, inst.client_data);
      Transcript ta, tb;
      int la = 0, lb = 0;
      const auto local = run_lifecycle_local(reg, inst, a, [&](auto&, auto&) { ++la; }, &ta);
      const auto split = run_lifecycle_split(reg, inst, b, [&](auto&, auto&) { ++lb; }, &tb);
      CHECK(local == split);
      CHECK(a.read(inst.id) == b.read(inst.id));
      CHECK(la == 1);
      CHECK(lb == 1);
      const std::vector<std::string> order{"pre_execution", "load_data", "execution", "update_data", "post_execution"};
      for (const auto* t : {&ta, &tb}) {
        std::vector<std::string> hooks;
        for (const auto& e : *t) {
          if (e.rfind("transfer", 0) != 0) hooks.push_back(e);
        }
        CHECK(hooks == order);
      }
    }
  }
}

TEST_CASE("blob encoding round-trips and rejects bad input") {
  const TaskStateBlob blob{{1, 2, 3}, ResultStatus::fail};
  const auto wire = encode_blob(blob);
  CHECK(wire.size() == 8);
  CHECK(wire[3] == 3);
  CHECK(wire[4] == 2);
  CHECK(decode_blob(wire) == blob);
  auto bad = wire;
  bad[4] = 7;
  CHECK_THROWS_AS(decode_blob(bad), Error);
  bad = wire;
  bad.pop_back();
  CHECK_THROWS_AS(decode_blob(bad), Error);
}
