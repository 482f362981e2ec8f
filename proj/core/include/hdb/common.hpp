#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hdb {

/// Every failure the library reports carries one of these codes.
enum class Errc {
  kInvalidTag,
  kInvalidAttribute,
  kVoidElementWithChildren,
  kDuplicateAttribute,
  kDataSourceUnavailable,
  kConnectionLost,
  kNoSuchTable,
  kEngineError,
  kEmptyIdentifier,
  kReadOnlyTable,
  kUnknownColumn,
  kAssignedAutoIncrement,
  kMissingRequired,
  kEmptyFilterForbidden,
  kInvalidValue,
  kOperationNotAvailable,
  kAuthExpired,
  kUnknownColumnInView,
  kDuplicateViewName,
  kUnregisteredHandler,
  kInvalidViewOp,
  kEmptyBatch,
  kRowInvalid,
  kNoSuchViewOp,
  kHandlerFailure,
  kSignatureMismatch,
  kInvalidMatcher,
  kInvalidCredentials,
  kPortInUse,
  kInvalidConfig,
  kNotFound,
  kUploadTooLarge,
  kPathSanitizationFailure,
  kDiskFull,
  kSpawnFailure,
  kInvalidName,
  kEvalTimeout,
  kSlaveExited,
  kEvalInFlight,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

using TimePoint = std::chrono::system_clock::time_point;
using Clock = std::function<TimePoint()>;

Clock system_clock();

/// A clock for tests: starts at `start` and only moves when advanced.
class ManualClock {
 public:
  explicit ManualClock(TimePoint start) : now_(start) {}

  TimePoint now() const;
  void advance(std::chrono::system_clock::duration d);
  void set(TimePoint t);
  Clock as_clock();

 private:
  mutable std::mutex mu_;
  TimePoint now_;
};

struct CivilTime {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  unsigned hour = 0;
  unsigned minute = 0;
  unsigned second = 0;
};

/// UTC calendar breakdown.
CivilTime to_civil(TimePoint t);
TimePoint from_civil(const CivilTime& c);

/// "2007-08-24T14:22:40Z"
std::string format_iso8601(TimePoint t);
/// "20070824T142240.123456Z", sortable and filesystem safe.
std::string format_compact_utc(TimePoint t);

/// Messages produced while handling one request, destined for the session's
/// diagnostic queue.
class DiagnosticLog {
 public:
  void push(std::string message) { messages_.push_back(std::move(message)); }
  const std::vector<std::string>& messages() const { return messages_; }
  std::vector<std::string> take() { return std::exchange(messages_, {}); }
  bool empty() const { return messages_.empty(); }

 private:
  std::vector<std::string> messages_;
};

inline void note(DiagnosticLog* log, std::string message) {
  if (log != nullptr) log->push(std::move(message));
}

std::string_view version();

}  // namespace hdb
