#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace offload::sim {

struct AuditReport {
  std::vector<std::string> violations;
  std::size_t checked = 0;  // events examined by the specific rule

  bool ok() const { return violations.empty(); }
};

// Replays buffer contents from enqueue/steal/requeue/fallback events and checks
// each serviced steal: taken tasks were queued in the claimed buffer and in
// FIFO order; the grant is work-conserving up to capacity; in a mixed fleet an
// H server drains H before L and a C server L before H; otherwise tasks leave
// oldest first across both buffers.
AuditReport audit_steal_policy(const std::vector<std::string>& trace_lines);

// Every arrived task completes exactly once; every enqueued task leaves the
// buffers exactly once (net of requeues); buffers end empty.
AuditReport audit_conservation(const std::vector<std::string>& trace_lines);

// Trace timestamps never decrease; a server starts a task only after the
// client offloaded it there; the client accepts a result only after that
// server finished the task.
AuditReport audit_causality(const std::vector<std::string>& trace_lines);

}  // namespace offload::sim
