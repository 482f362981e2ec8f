#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hdb/common.hpp"

namespace hdb::server {

struct Diagnostic {
  std::string session;
  std::string message;
  TimePoint created;
};

/// Per-session queues of messages shown once, at the top of the next page.
class DiagnosticStore {
 public:
  void push(std::string_view session_id, std::string message, TimePoint now);
  void push_all(std::string_view session_id, const std::vector<std::string>& messages,
                TimePoint now);
  /// Pending messages in push order; they are removed.
  std::vector<std::string> drain(std::string_view session_id);
  std::size_t pending(std::string_view session_id) const;
  void forget(std::string_view session_id);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<Diagnostic>, std::less<>> queues_;
};

}  // namespace hdb::server
