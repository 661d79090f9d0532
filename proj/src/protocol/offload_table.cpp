#include "offload/protocol/offload_table.hpp"

#include <cstdio>

#include "offload/core/error.hpp"

namespace offload {

std::string format_row(const OffloadRecord& r) {
  char seq[32];
  std::snprintf(seq, sizeof(seq), "%04llu", static_cast<unsigned long long>(r.id.sequence));
  const auto flag = [](bool b) { return b ? "true" : "false"; };
  std::string result = r.result == ResultStatus::pending ? "" : to_string(r.result);
  return std::string(seq) + "\t" + flag(r.offloaded) + "\t" + r.server + "\t" + flag(r.returned) + "\t" + result;
}

OffloadTable::OffloadTable(std::filesystem::path log_file)
    : log_(std::make_unique<std::ofstream>(log_file, std::ios::app)) {
  if (!*log_) throw Error(ErrorCode::IoError, "cannot open offload log " + log_file.string());
}

const OffloadRecord& OffloadTable::record_offload(const TaskInstanceId& id, const std::string& server) {
  if (rows_.contains(id)) throw Error(ErrorCode::DuplicateTask, id.str() + " already in offload table");
  auto [it, _] = rows_.emplace(id, OffloadRecord{id, true, server, false, ResultStatus::pending, std::nullopt});
  log("offload", it->second);
  return it->second;
}

void OffloadTable::erase(const TaskInstanceId& id) {
  auto it = rows_.find(id);
  if (it == rows_.end()) return;
  log("erase", it->second);
  rows_.erase(it);
}

void OffloadTable::mark_returned(const TaskInstanceId& id, ResultStatus result) {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(ErrorCode::NotFound, id.str() + " not in offload table");
  it->second.returned = true;
  it->second.result = result;
  log("return", it->second);
}

void OffloadTable::set_local_result(const TaskInstanceId& id, ResultStatus result) {
  auto it = rows_.find(id);
  if (it == rows_.end()) throw Error(ErrorCode::NotFound, id.str() + " not in offload table");
  it->second.local_result = result;
  log("local", it->second);
}

const OffloadRecord* OffloadTable::find(const TaskInstanceId& id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? nullptr : &it->second;
}

std::vector<OffloadRecord> OffloadTable::rows() const {
  std::vector<OffloadRecord> out;
  for (const auto& [_, r] : rows_) out.push_back(r);
  return out;
}

bool OffloadTable::consistent() const {
  for (const auto& [_, r] : rows_) {
    if (r.returned && !r.offloaded) return false;
    if (r.result != ResultStatus::pending && !r.returned) return false;
  }
  return true;
}

void OffloadTable::log(const char* action, const OffloadRecord& record) {
  if (!log_) return;
  *log_ << action << '\t' << record.id.class_id.str() << '\t' << format_row(record);
  if (record.local_result) *log_ << "\tlocal=" << to_string(*record.local_result);
  *log_ << '\n';
  log_->flush();
}

std::string to_string(RemoteState state) {
  switch (state) {
    case RemoteState::transferring: return "transferring";
    case RemoteState::executing: return "executing";
    case RemoteState::returning: return "returning";
    case RemoteState::done: return "done";
    case RemoteState::failed_remote: return "failed_remote";
    case RemoteState::link_lost: return "link_lost";
  }
  return "unknown";
}

bool legal_transition(RemoteState from, RemoteState to) {
  switch (from) {
    case RemoteState::transferring:
      return to == RemoteState::executing || to == RemoteState::link_lost;
    case RemoteState::executing:
      return to == RemoteState::returning || to == RemoteState::failed_remote || to == RemoteState::link_lost;
    case RemoteState::returning:
      return to == RemoteState::done || to == RemoteState::link_lost;
    default:
      return false;
  }
}

bool RemoteExecution::terminal() const {
  return state_ == RemoteState::done || state_ == RemoteState::failed_remote || state_ == RemoteState::link_lost;
}

void RemoteExecution::advance(RemoteState next) {
  if (!legal_transition(state_, next)) {
    throw Error(ErrorCode::ProtocolError, id_.str() + ": illegal transition " + to_string(state_) + " -> " +
                                              to_string(next));
  }
  state_ = next;
}

}  // namespace offload
