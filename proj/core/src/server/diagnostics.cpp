#include "hdb/server/diagnostics.hpp"

namespace hdb::server {

void DiagnosticStore::push(std::string_view session_id, std::string message, TimePoint now) {
  std::lock_guard lock(mu_);
  auto it = queues_.find(session_id);
  if (it == queues_.end()) it = queues_.emplace(std::string(session_id), std::vector<Diagnostic>{}).first;
  it->second.push_back(Diagnostic{std::string(session_id), std::move(message), now});
}

void DiagnosticStore::push_all(std::string_view session_id,
                               const std::vector<std::string>& messages, TimePoint now) {
  for (const auto& m : messages) push(session_id, m, now);
}

std::vector<std::string> DiagnosticStore::drain(std::string_view session_id) {
  std::vector<Diagnostic> taken;
  {
    std::lock_guard lock(mu_);
    auto it = queues_.find(session_id);
    if (it == queues_.end()) return {};
    taken = std::move(it->second);
    queues_.erase(it);
  }
  std::vector<std::string> out;
  out.reserve(taken.size());
  for (auto& d : taken) out.push_back(std::move(d.message));
  return out;
}

std::size_t DiagnosticStore::pending(std::string_view session_id) const {
  std::lock_guard lock(mu_);
  auto it = queues_.find(session_id);
  return it == queues_.end() ? 0 : it->second.size();
}

void DiagnosticStore::forget(std::string_view session_id) {
  std::lock_guard lock(mu_);
  auto it = queues_.find(session_id);
  if (it != queues_.end()) queues_.erase(it);
}

}  // namespace hdb::server
