#pragma once

#include <cstddef>
#include <string>

namespace offload::sim {

struct LiveOptions {
  std::string role;
  std::string listen = "127.0.0.1:7000";
  std::string connect = "127.0.0.1:7000";
  std::string device_id;
  double cpu_score = 1.0;
  std::string kind = "generic_server";
  std::string preset = "fd50";
  std::size_t task_limit = 0;  // 0 = whole preset
  std::size_t expect_servers = 1;
  std::string trace_path;
  // Stretch each computation to its modelled duration (reference work / cpu_score).
  bool pace = true;
};

// Runs a live endpoint until its work is done (client) or the client goes away (server).
int run_live(const LiveOptions& options);

}  // namespace offload::sim
