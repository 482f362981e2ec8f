#include "hdb/common.hpp"

#include <fmt/format.h>

namespace hdb {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidTag: return "InvalidTag";
    case Errc::kInvalidAttribute: return "InvalidAttribute";
    case Errc::kVoidElementWithChildren: return "VoidElementWithChildren";
    case Errc::kDuplicateAttribute: return "DuplicateAttribute";
    case Errc::kDataSourceUnavailable: return "DataSourceUnavailable";
    case Errc::kConnectionLost: return "ConnectionLost";
    case Errc::kNoSuchTable: return "NoSuchTable";
    case Errc::kEngineError: return "EngineError";
    case Errc::kEmptyIdentifier: return "EmptyIdentifier";
    case Errc::kReadOnlyTable: return "ReadOnlyTable";
    case Errc::kUnknownColumn: return "UnknownColumn";
    case Errc::kAssignedAutoIncrement: return "AssignedAutoIncrement";
    case Errc::kMissingRequired: return "MissingRequired";
    case Errc::kEmptyFilterForbidden: return "EmptyFilterForbidden";
    case Errc::kInvalidValue: return "InvalidValue";
    case Errc::kOperationNotAvailable: return "OperationNotAvailable";
    case Errc::kAuthExpired: return "AuthExpired";
    case Errc::kUnknownColumnInView: return "UnknownColumnInView";
    case Errc::kDuplicateViewName: return "DuplicateViewName";
    case Errc::kUnregisteredHandler: return "UnregisteredHandler";
    case Errc::kInvalidViewOp: return "InvalidViewOp";
    case Errc::kEmptyBatch: return "EmptyBatch";
    case Errc::kRowInvalid: return "RowInvalid";
    case Errc::kNoSuchViewOp: return "NoSuchViewOp";
    case Errc::kHandlerFailure: return "HandlerFailure";
    case Errc::kSignatureMismatch: return "SignatureMismatch";
    case Errc::kInvalidMatcher: return "InvalidMatcher";
    case Errc::kInvalidCredentials: return "InvalidCredentials";
    case Errc::kPortInUse: return "PortInUse";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kNotFound: return "NotFound";
    case Errc::kUploadTooLarge: return "UploadTooLarge";
    case Errc::kPathSanitizationFailure: return "PathSanitizationFailure";
    case Errc::kDiskFull: return "DiskFull";
    case Errc::kSpawnFailure: return "SpawnFailure";
    case Errc::kInvalidName: return "InvalidName";
    case Errc::kEvalTimeout: return "EvalTimeout";
    case Errc::kSlaveExited: return "SlaveExited";
    case Errc::kEvalInFlight: return "EvalInFlight";
  }
  return "Unknown";
}

Error::Error(Errc code, std::string detail)
    : std::runtime_error(detail.empty()
                             ? std::string(errc_name(code))
                             : fmt::format("{}: {}", errc_name(code), detail)),
      code_(code),
      detail_(std::move(detail)) {}

Clock system_clock() {
  return [] { return std::chrono::system_clock::now(); };
}

TimePoint ManualClock::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

void ManualClock::advance(std::chrono::system_clock::duration d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

void ManualClock::set(TimePoint t) {
  std::lock_guard lock(mu_);
  now_ = t;
}

Clock ManualClock::as_clock() {
  return [this] { return now(); };
}

CivilTime to_civil(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{floor<seconds>(t - day_point)};
  return CivilTime{static_cast<int>(ymd.year()),
                   static_cast<unsigned>(ymd.month()),
                   static_cast<unsigned>(ymd.day()),
                   static_cast<unsigned>(hms.hours().count()),
                   static_cast<unsigned>(hms.minutes().count()),
                   static_cast<unsigned>(hms.seconds().count())};
}

TimePoint from_civil(const CivilTime& c) {
  using namespace std::chrono;
  const sys_days d = year{c.year} / month{c.month} / day{c.day};
  return TimePoint{d} + hours{c.hour} + minutes{c.minute} + seconds{c.second};
}

std::string format_iso8601(TimePoint t) {
  const CivilTime c = to_civil(t);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", c.year, c.month,
                     c.day, c.hour, c.minute, c.second);
}

std::string format_compact_utc(TimePoint t) {
  using namespace std::chrono;
  const CivilTime c = to_civil(t);
  const auto micros =
      duration_cast<microseconds>(t - floor<seconds>(t)).count();
  return fmt::format("{:04}{:02}{:02}T{:02}{:02}{:02}.{:06}Z", c.year, c.month,
                     c.day, c.hour, c.minute, c.second, micros);
}

std::string_view version() { return HDB_VERSION; }

}  // namespace hdb
