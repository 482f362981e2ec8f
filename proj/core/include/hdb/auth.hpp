#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hdb/catalog.hpp"
#include "hdb/common.hpp"
#include "hdb/doctree.hpp"

namespace hdb::auth {

struct UserEntry {
  std::string hdb_name;
  /// Salted slow hash in libsodium's encoded form ($argon2id$...).
  std::string password_hash;
  std::string db_user;
  std::string db_password;
};

/// Sessions live while interactions arrive at most `timeout` apart.
struct SessionIdle {
  std::chrono::seconds timeout{1800};
};

/// A login authorises its peer address until `validity` has passed.
struct IpWindow {
  std::chrono::seconds validity{std::chrono::hours(8)};
};

using AuthMode = std::variant<SessionIdle, IpWindow>;

struct Session {
  /// Four groups of four lowercase hex digits.
  std::string id;
  std::string user;
  std::string db_user;
  std::string db_password;
  TimePoint login_time;
  std::string peer;
  TimePoint last_activity;
};

struct HashParams {
  unsigned long long opslimit;
  std::size_t memlimit;

  static HashParams interactive();
  /// Cheapest accepted parameters; for tests and fixtures.
  static HashParams minimal();
};

std::string hash_password(std::string_view password, HashParams params = HashParams::interactive());
bool verify_password(std::string_view encoded_hash, std::string_view password);

/// Fresh id from the system CSPRNG, e.g. "5807-da08-fbaa-fe69".
std::string new_session_id();
bool is_session_id(std::string_view s);

catalog::Credentials db_credentials(const Session& session);

/// Shared session state. All operations are linearizable.
class SessionStore {
 public:
  /// `ip_window_file`, when set, persists IpWindow authorisations across
  /// restarts.
  SessionStore(AuthMode mode, std::vector<UserEntry> users,
               std::filesystem::path ip_window_file = {});

  const AuthMode& mode() const { return mode_; }

  /// Throws InvalidCredentials with the same message for every failure.
  Session login(std::string_view name, std::string_view password, std::string_view peer,
                TimePoint now);

  /// The live session for this request, or nullopt when expired/unknown.
  /// In SessionIdle mode a successful validation resets the idle interval.
  std::optional<Session> validate(std::string_view peer, std::string_view session_id,
                                  TimePoint now);

  void logout(std::string_view session_id);
  std::size_t live_sessions() const;

 private:
  struct IpGrant {
    std::string peer;
    TimePoint expiry;
    std::string session_id;
    TimePoint login_time;
  };

  const UserEntry* find_user(std::string_view name) const;
  std::string unused_id() const;
  void load_grants();
  void save_grants() const;

  AuthMode mode_;
  std::vector<UserEntry> users_;
  std::filesystem::path ip_file_;
  mutable std::mutex mu_;
  std::map<std::string, Session, std::less<>> sessions_;
  std::map<std::string, IpGrant, std::less<>> grants_;  // by user
};

struct ServerMeta {
  std::string title;
  std::string version;
  std::string host;
  unsigned port = 8080;
};

/// Session profile: server title, user names, login time, peer, serving
/// version, host:port and session id, one per line.
doc::Node profile_page(const Session& session, const ServerMeta& meta);

}  // namespace hdb::auth
