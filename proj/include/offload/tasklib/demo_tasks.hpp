#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offload/core/types.hpp"
#include "offload/tasklib/task.hpp"

namespace offload::demo {

inline const TaskClassId kFindRoute{"demo", "FindRoute"};
inline const TaskClassId kFaceDetect{"demo", "FaceDetect"};
inline const TaskClassId kUpdateInfo{"demo", "UpdateInfo"};

struct Edge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  double weight = 0.0;
};

// Directed weighted graph.
struct Graph {
  std::uint32_t node_count = 0;
  std::vector<Edge> edges;
};

Bytes encode_graph(const Graph& graph);
Graph decode_graph(std::span<const std::uint8_t> data);

// Connected graph: a random spanning path plus extra random edges, all undirected.
Graph make_random_graph(std::uint32_t node_count, std::uint32_t extra_edges, std::uint64_t seed);

struct Route {
  bool reachable = false;
  double distance = 0.0;
  std::vector<std::uint32_t> path;

  bool operator==(const Route&) const = default;
};

Route dijkstra(const Graph& graph, std::uint32_t source, std::uint32_t target);

struct FindRouteState {
  double work_s = 0.0;
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  std::optional<Graph> graph;  // present between load_data and execution
  std::optional<Route> route;  // present after execution
};

Bytes encode_find_route(const FindRouteState& state);
FindRouteState decode_find_route(std::span<const std::uint8_t> data);

struct FaceBox {
  std::uint32_t x = 0, y = 0, w = 0, h = 0;
  bool operator==(const FaceBox&) const = default;
};

struct FaceDetectState {
  double work_s = 0.0;
  std::optional<std::uint64_t> picture_digest;  // set by load_data
  std::optional<std::vector<FaceBox>> faces;    // set by execution
};

Bytes encode_face_detect(const FaceDetectState& state);
FaceDetectState decode_face_detect(std::span<const std::uint8_t> data);

// Synthetic stand-in for face detection: a fixed-iteration mixing kernel over the picture digest.
std::vector<FaceBox> detect_faces(std::uint64_t picture_digest, double work_s);

struct UpdateInfoState {
  std::string user;
  bool new_user = true;
  std::vector<std::string> log;
};

Bytes encode_update_info(const UpdateInfoState& state);
UpdateInfoState decode_update_info(std::span<const std::uint8_t> data);

RemotableTaskSpec find_route_spec();
RemotableTaskSpec face_detect_spec();
RemotableTaskSpec update_info_spec();

// Registers FindRoute, FaceDetect and UpdateInfo.
void register_demo_tasks(TaskRegistry& registry);

}  // namespace offload::demo
