#include "hdb/auth.hpp"

#include <sodium.h>

#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace hdb::auth {
namespace {

constexpr std::string_view kInvalidCredentials = "invalid user name or password";

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw std::runtime_error("libsodium initialisation failed");
}

std::int64_t epoch_seconds(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

TimePoint from_epoch(std::int64_t s) { return TimePoint{std::chrono::seconds{s}}; }

bool is_hex(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); }

// Compares against a fixed hash so unknown users cost the same as known ones.
const std::string& dummy_hash() {
  static const std::string h = hash_password("hdb-dummy-password", HashParams::minimal());
  return h;
}

}  // namespace

HashParams HashParams::interactive() {
  return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

HashParams HashParams::minimal() {
  return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

std::string hash_password(std::string_view password, HashParams params) {
  ensure_sodium();
  std::array<char, crypto_pwhash_STRBYTES> out{};
  if (crypto_pwhash_str(out.data(), password.data(), password.size(), params.opslimit,
                        params.memlimit) != 0) {
    throw std::runtime_error("password hashing ran out of memory");
  }
  return std::string(out.data());
}

bool verify_password(std::string_view encoded_hash, std::string_view password) {
  ensure_sodium();
  const std::string h(encoded_hash);
  return crypto_pwhash_str_verify(h.c_str(), password.data(), password.size()) == 0;
}

std::string new_session_id() {
  ensure_sodium();
  std::array<unsigned char, 8> bytes{};
  randombytes_buf(bytes.data(), bytes.size());
  return fmt::format("{:02x}{:02x}-{:02x}{:02x}-{:02x}{:02x}-{:02x}{:02x}", bytes[0], bytes[1],
                     bytes[2], bytes[3], bytes[4], bytes[5], bytes[6], bytes[7]);
}

bool is_session_id(std::string_view s) {
  if (s.size() != 19) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i % 5 == 4) {
      if (s[i] != '-') return false;
    } else if (!is_hex(s[i])) {
      return false;
    }
  }
  return true;
}

catalog::Credentials db_credentials(const Session& session) {
  return {session.db_user, session.db_password};
}

SessionStore::SessionStore(AuthMode mode, std::vector<UserEntry> users,
                           std::filesystem::path ip_window_file)
    : mode_(mode), users_(std::move(users)), ip_file_(std::move(ip_window_file)) {
  if (std::holds_alternative<IpWindow>(mode_) && !ip_file_.empty()) load_grants();
}

const UserEntry* SessionStore::find_user(std::string_view name) const {
  for (const auto& u : users_) {
    if (u.hdb_name == name) return &u;
  }
  return nullptr;
}

std::string SessionStore::unused_id() const {
  std::string id;
  do {
    id = new_session_id();
  } while (sessions_.count(id) != 0);
  return id;
}

Session SessionStore::login(std::string_view name, std::string_view password,
                            std::string_view peer, TimePoint now) {
  const UserEntry* user = find_user(name);
  const bool ok = user != nullptr ? verify_password(user->password_hash, password)
                                  : (verify_password(dummy_hash(), password), false);
  if (!ok) throw Error(Errc::kInvalidCredentials, std::string(kInvalidCredentials));

  std::lock_guard lock(mu_);
  Session s{unused_id(), user->hdb_name, user->db_user, user->db_password, now,
            std::string(peer), now};
  sessions_[s.id] = s;
  if (const auto* ip = std::get_if<IpWindow>(&mode_)) {
    auto old = grants_.find(user->hdb_name);
    if (old != grants_.end()) sessions_.erase(old->second.session_id);
    sessions_[s.id] = s;
    grants_[user->hdb_name] = IpGrant{s.peer, now + ip->validity, s.id, now};
    save_grants();
  }
  return s;
}

std::optional<Session> SessionStore::validate(std::string_view peer, std::string_view session_id,
                                              TimePoint now) {
  std::lock_guard lock(mu_);
  if (const auto* idle = std::get_if<SessionIdle>(&mode_)) {
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return std::nullopt;
    if (now - it->second.last_activity > idle->timeout) {
      sessions_.erase(it);
      return std::nullopt;
    }
    it->second.last_activity = now;
    return it->second;
  }

  // IpWindow: the cookie's user if it is authorised from this peer,
  // otherwise the most recent authorisation for the peer.
  const IpGrant* chosen = nullptr;
  std::string chosen_user;
  for (const auto& [user, grant] : grants_) {
    if (grant.peer != peer || grant.expiry < now) continue;
    if (grant.session_id == session_id) {
      chosen = &grant;
      chosen_user = user;
      break;
    }
    if (chosen == nullptr || grant.login_time > chosen->login_time) {
      chosen = &grant;
      chosen_user = user;
    }
  }
  if (chosen == nullptr) return std::nullopt;
  auto it = sessions_.find(chosen->session_id);
  if (it == sessions_.end()) return std::nullopt;
  it->second.last_activity = now;
  return it->second;
}

void SessionStore::logout(std::string_view session_id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) return;
  auto grant = grants_.find(it->second.user);
  if (grant != grants_.end() && grant->second.session_id == session_id) {
    grants_.erase(grant);
    save_grants();
  }
  sessions_.erase(it);
}

std::size_t SessionStore::live_sessions() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionStore::load_grants() {
  std::ifstream in(ip_file_);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string user;
    std::string peer;
    std::int64_t expiry = 0;
    std::string id;
    std::int64_t login = 0;
    if (!(fields >> user >> peer >> expiry >> id >> login)) continue;
    const UserEntry* entry = find_user(user);
    if (entry == nullptr || !is_session_id(id)) continue;
    grants_[user] = IpGrant{peer, from_epoch(expiry), id, from_epoch(login)};
    sessions_[id] = Session{id, user, entry->db_user, entry->db_password, from_epoch(login), peer,
                            from_epoch(login)};
  }
}

void SessionStore::save_grants() const {
  if (ip_file_.empty()) return;
  const auto tmp = ip_file_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    for (const auto& [user, g] : grants_) {
      out << user << '\t' << g.peer << '\t' << epoch_seconds(g.expiry) << '\t' << g.session_id
          << '\t' << epoch_seconds(g.login_time) << '\n';
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, ip_file_, ec);
}

doc::Node profile_page(const Session& session, const ServerMeta& meta) {
  using doc::el;
  using doc::el_text;
  std::vector<doc::Node> lines;
  auto line = [&lines](std::string text) { lines.push_back(el_text("li", std::move(text))); };
  line("Logged-in on hdb server: " + meta.title);
  line("With user name: " + session.user);
  line("Database user name: " + session.db_user);
  line("Login time: " + format_iso8601(session.login_time));
  line("Peer: " + session.peer);
  line("Pages are served by : hdb " + meta.version);
  line(fmt::format("Server: {}:{}", meta.host, meta.port));
  line("Session: " + session.id);
  return el("section", {{"class", "profile"}},
            {el_text("h1", "User Profile"), el("ul", {{"class", "profile-lines"}}, std::move(lines))});
}

}  // namespace hdb::auth
