#include "offload/tasklib/demo_tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <random>

#include "offload/core/bytes.hpp"
#include "offload/core/error.hpp"

namespace offload::demo {

namespace {

constexpr std::size_t kEdgeBytes = 16;

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_graph(ByteWriter& w, const Graph& g) {
  w.u32(g.node_count);
  w.u32(static_cast<std::uint32_t>(g.edges.size()));
  for (const auto& e : g.edges) {
    w.u32(e.from);
    w.u32(e.to);
    w.f64(e.weight);
  }
}

Graph read_graph(ByteReader& r) {
  Graph g;
  g.node_count = r.u32();
  const auto m = r.u32();
  if (static_cast<std::size_t>(m) * 12 > r.remaining()) {
    throw Error(ErrorCode::ProtocolError, "graph edge count exceeds data");
  }
  g.edges.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    Edge e;
    e.from = r.u32();
    e.to = r.u32();
    e.weight = r.f64();
    if (e.from >= g.node_count || e.to >= g.node_count) {
      throw Error(ErrorCode::ProtocolError, "graph edge references unknown node");
    }
    g.edges.push_back(e);
  }
  return g;
}

}  // namespace

Bytes encode_graph(const Graph& graph) {
  ByteWriter w;
  write_graph(w, graph);
  return std::move(w).take();
}

Graph decode_graph(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  auto g = read_graph(r);
  r.expect_done();
  return g;
}

Graph make_random_graph(std::uint32_t node_count, std::uint32_t extra_edges, std::uint64_t seed) {
  if (node_count < 2) throw Error(ErrorCode::InvalidParameter, "graph needs at least 2 nodes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(1.0, 10.0);
  std::uniform_int_distribution<std::uint32_t> node(0, node_count - 1);

  std::vector<std::uint32_t> order(node_count);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  Graph g;
  g.node_count = node_count;
  auto add_undirected = [&](std::uint32_t a, std::uint32_t b) {
    const double w = weight(rng);
    g.edges.push_back({a, b, w});
    g.edges.push_back({b, a, w});
  };
  for (std::uint32_t i = 1; i < node_count; ++i) add_undirected(order[i - 1], order[i]);
  for (std::uint32_t i = 0; i < extra_edges; ++i) {
    const auto a = node(rng);
    const auto b = node(rng);
    if (a != b) add_undirected(a, b);
  }
  return g;
}

Route dijkstra(const Graph& graph, std::uint32_t source, std::uint32_t target) {
  const auto n = graph.node_count;
  if (source >= n || target >= n) throw Error(ErrorCode::InvalidParameter, "route endpoint out of range");

  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
  for (const auto& e : graph.edges) {
    if (e.weight < 0.0) throw Error(ErrorCode::InvalidParameter, "negative edge weight");
    adj[e.from].emplace_back(e.to, e.weight);
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr auto none = std::numeric_limits<std::uint32_t>::max();
  std::vector<double> dist(n, inf);
  std::vector<std::uint32_t> prev(n, none);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
  dist[source] = 0.0;
  frontier.emplace(0.0, source);
  while (!frontier.empty()) {
    auto [d, u] = frontier.top();
    frontier.pop();
    if (d > dist[u]) continue;
    if (u == target) break;
    for (auto [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        prev[v] = u;
        frontier.emplace(dist[v], v);
      }
    }
  }

  Route route;
  if (dist[target] == inf) return route;
  route.reachable = true;
  route.distance = dist[target];
  for (auto v = target; v != none; v = prev[v]) route.path.push_back(v);
  std::reverse(route.path.begin(), route.path.end());
  return route;
}

Bytes encode_find_route(const FindRouteState& s) {
  ByteWriter w;
  w.f64(s.work_s);
  w.u32(s.source);
  w.u32(s.target);
  w.u8(s.graph ? 1 : 0);
  if (s.graph) write_graph(w, *s.graph);
  w.u8(s.route ? 1 : 0);
  if (s.route) {
    w.u8(s.route->reachable ? 1 : 0);
    w.f64(s.route->distance);
    w.u32(static_cast<std::uint32_t>(s.route->path.size()));
    for (auto v : s.route->path) w.u32(v);
  }
  return std::move(w).take();
}

FindRouteState decode_find_route(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  FindRouteState s;
  s.work_s = r.f64();
  s.source = r.u32();
  s.target = r.u32();
  if (r.u8()) s.graph = read_graph(r);
  if (r.u8()) {
    Route route;
    route.reachable = r.u8() != 0;
    route.distance = r.f64();
    const auto len = r.u32();
    if (static_cast<std::size_t>(len) * 4 > r.remaining()) {
      throw Error(ErrorCode::ProtocolError, "route length exceeds data");
    }
    for (std::uint32_t i = 0; i < len; ++i) route.path.push_back(r.u32());
    s.route = std::move(route);
  }
  r.expect_done();
  return s;
}

Bytes encode_face_detect(const FaceDetectState& s) {
  ByteWriter w;
  w.f64(s.work_s);
  w.u8(s.picture_digest ? 1 : 0);
  if (s.picture_digest) w.u64(*s.picture_digest);
  w.u8(s.faces ? 1 : 0);
  if (s.faces) {
    w.u32(static_cast<std::uint32_t>(s.faces->size()));
    for (const auto& f : *s.faces) {
      w.u32(f.x);
      w.u32(f.y);
      w.u32(f.w);
      w.u32(f.h);
    }
  }
  return std::move(w).take();
}

FaceDetectState decode_face_detect(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  FaceDetectState s;
  s.work_s = r.f64();
  if (r.u8()) s.picture_digest = r.u64();
  if (r.u8()) {
    const auto n = r.u32();
    if (static_cast<std::size_t>(n) * 16 > r.remaining()) {
      throw Error(ErrorCode::ProtocolError, "face count exceeds data");
    }
    std::vector<FaceBox> faces(n);
    for (auto& f : faces) {
      f.x = r.u32();
      f.y = r.u32();
      f.w = r.u32();
      f.h = r.u32();
    }
    s.faces = std::move(faces);
  }
  r.expect_done();
  return s;
}

std::vector<FaceBox> detect_faces(std::uint64_t picture_digest, double work_s) {
  // 1000 mixing rounds per reference second of work.
  const auto rounds = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(work_s * 1000.0)));
  std::uint64_t x = picture_digest;
  std::uint64_t acc = 0;
  for (std::uint64_t i = 0; i < rounds; ++i) acc ^= splitmix64(x);
  std::vector<FaceBox> faces(acc % 5);
  for (auto& f : faces) {
    const auto r = splitmix64(x);
    f.x = static_cast<std::uint32_t>(r % 1024);
    f.y = static_cast<std::uint32_t>((r >> 16) % 768);
    f.w = 16 + static_cast<std::uint32_t>((r >> 32) % 128);
    f.h = f.w;
  }
  return faces;
}

Bytes encode_update_info(const UpdateInfoState& s) {
  ByteWriter w;
  w.str(s.user);
  w.u8(s.new_user ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(s.log.size()));
  for (const auto& line : s.log) w.str(line);
  return std::move(w).take();
}

UpdateInfoState decode_update_info(std::span<const std::uint8_t> data) {
  ByteReader r(data);
  UpdateInfoState s;
  s.user = r.str();
  s.new_user = r.u8() != 0;
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) s.log.push_back(r.str());
  r.expect_done();
  return s;
}

RemotableTaskSpec find_route_spec() {
  RemotableTaskSpec spec;
  spec.class_id = kFindRoute;
  spec.target = TaskTarget::generic;
  spec.hooks.load_data = [](Bytes& state, std::span<const std::uint8_t> map) {
    auto s = decode_find_route(state);
    s.graph = decode_graph(map);
    state = encode_find_route(s);
  };
  spec.hooks.execution = [](Bytes& state) {
    auto s = decode_find_route(state);
    if (!s.graph) throw Error(ErrorCode::InvalidParameter, "FindRoute executed without a map");
    s.route = dijkstra(*s.graph, s.source, s.target);
    s.graph.reset();
    state = encode_find_route(s);
  };
  spec.work_s = [](const Bytes& state) { return decode_find_route(state).work_s; };
  spec.make_instance = [](const InstanceParams& p) {
    // About 128 bytes of map per node (4 undirected edges each).
    const auto nodes = static_cast<std::uint32_t>(std::max<std::uint64_t>(5, p.payload_bytes / 128));
    auto graph = make_random_graph(nodes, nodes * 3, p.seed);
    FindRouteState s;
    s.work_s = p.work_s;
    s.source = 0;
    s.target = nodes - 1;
    return TaskInstance{{kFindRoute, p.sequence}, encode_find_route(s), encode_graph(graph)};
  };
  return spec;
}

RemotableTaskSpec face_detect_spec() {
  RemotableTaskSpec spec;
  spec.class_id = kFaceDetect;
  spec.target = TaskTarget::generic;
  spec.hooks.load_data = [](Bytes& state, std::span<const std::uint8_t> picture) {
    auto s = decode_face_detect(state);
    s.picture_digest = fnv1a(picture);
    state = encode_face_detect(s);
  };
  spec.hooks.execution = [](Bytes& state) {
    auto s = decode_face_detect(state);
    if (!s.picture_digest) throw Error(ErrorCode::InvalidParameter, "FaceDetect executed without a picture");
    s.faces = detect_faces(*s.picture_digest, s.work_s);
    state = encode_face_detect(s);
  };
  spec.hooks.update_data = [](const Bytes& state) {
    // Annotation written next to the picture: the highlighted rectangles.
    const auto s = decode_face_detect(state);
    ByteWriter w;
    for (const auto& f : s.faces.value_or(std::vector<FaceBox>{})) {
      w.u32(f.x);
      w.u32(f.y);
      w.u32(f.w);
      w.u32(f.h);
    }
    return std::move(w).take();
  };
  spec.work_s = [](const Bytes& state) { return decode_face_detect(state).work_s; };
  spec.make_instance = [](const InstanceParams& p) {
    std::mt19937_64 rng(p.seed);
    Bytes picture(p.payload_bytes);
    for (auto& b : picture) b = static_cast<std::uint8_t>(rng());
    FaceDetectState s;
    s.work_s = p.work_s;
    return TaskInstance{{kFaceDetect, p.sequence}, encode_face_detect(s), std::move(picture)};
  };
  return spec;
}

RemotableTaskSpec update_info_spec() {
  RemotableTaskSpec spec;
  spec.class_id = kUpdateInfo;
  spec.target = TaskTarget::generic;
  spec.hooks.pre_execution = [](Bytes& state) {
    auto s = decode_update_info(state);
    s.log.push_back("open database connection");
    state = encode_update_info(s);
  };
  // No client data: load_data and update_data stay empty.
  spec.hooks.execution = [](Bytes& state) {
    auto s = decode_update_info(state);
    s.log.push_back(s.new_user ? "insert user info " + s.user : "update user info " + s.user);
    s.new_user = false;
    state = encode_update_info(s);
  };
  spec.hooks.post_execution = [](Bytes& state) {
    auto s = decode_update_info(state);
    s.log.push_back("close database connection");
    s.log.push_back("send notification to user");
    state = encode_update_info(s);
  };
  spec.work_s = [](const Bytes&) { return 0.05; };
  spec.make_instance = [](const InstanceParams& p) {
    UpdateInfoState s;
    s.user = "user" + std::to_string(p.sequence);
    s.new_user = p.seed % 2 == 0;
    return TaskInstance{{kUpdateInfo, p.sequence}, encode_update_info(s), {}};
  };
  return spec;
}

void register_demo_tasks(TaskRegistry& registry) {
  registry.register_task_class(find_route_spec());
  registry.register_task_class(face_detect_spec());
  registry.register_task_class(update_info_spec());
}

}  // namespace offload::demo
