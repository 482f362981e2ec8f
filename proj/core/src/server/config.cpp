#include "hdb/server/config.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace hdb::server {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

enum class AssignOp { kSet, kAppend };

struct Assignment {
  std::size_t line = 0;
  std::string key;
  AssignOp op = AssignOp::kSet;
  std::string value;
};

struct Block {
  std::size_t line = 0;
  std::string kind;
  std::string name;
  std::vector<Assignment> body;
};

// Recursive descent over lines: file := { assignment | block }.
class Parser {
 public:
  explicit Parser(std::string_view text) {
    std::size_t n = 0;
    while (!text.empty()) {
      const auto eol = text.find('\n');
      lines_.push_back(std::string(text.substr(0, eol)));
      ++n;
      if (eol == std::string_view::npos) break;
      text.remove_prefix(eol + 1);
    }
  }

  void parse(std::vector<Assignment>& top, std::vector<Block>& blocks) {
    while (auto line = next_line()) {
      if (line->back() == '{') {
        blocks.push_back(parse_block(*line));
      } else {
        top.push_back(parse_assignment(*line));
      }
    }
  }

 private:
  [[noreturn]] void fail(std::string_view why) const {
    throw Error(Errc::kInvalidConfig, fmt::format("line {}: {}", pos_, why));
  }

  // Next non-blank, non-comment line, trimmed.
  std::optional<std::string> next_line() {
    while (pos_ < lines_.size()) {
      const auto t = trim(lines_[pos_++]);
      if (t.empty() || t.front() == '#') continue;
      return std::string(t);
    }
    return std::nullopt;
  }

  Block parse_block(std::string_view header) {
    Block b;
    b.line = pos_;
    header.remove_suffix(1);
    header = trim(header);
    const auto sp = header.find_first_of(" \t");
    if (sp == std::string_view::npos) fail("block needs a kind and a name");
    b.kind = std::string(header.substr(0, sp));
    b.name = std::string(trim(header.substr(sp)));
    if (b.name.empty() || !std::all_of(b.name.begin(), b.name.end(), is_name_char)) {
      fail(fmt::format("invalid block name '{}'", b.name));
    }
    while (auto line = next_line()) {
      if (*line == "}") return b;
      if (line->back() == '{') fail("nested blocks are not allowed");
      b.body.push_back(parse_assignment(*line));
    }
    fail(fmt::format("unterminated {} block", b.kind));
  }

  Assignment parse_assignment(std::string_view line) {
    Assignment a;
    a.line = pos_;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) fail("expected key = value");
    std::string_view key = line.substr(0, eq);
    if (key.back() == '+') {
      a.op = AssignOp::kAppend;
      key.remove_suffix(1);
    }
    key = trim(key);
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_name_char)) {
      fail(fmt::format("invalid key '{}'", key));
    }
    a.key = std::string(key);
    a.value = parse_value(trim(line.substr(eq + 1)));
    return a;
  }

  std::string parse_value(std::string_view v) {
    if (v.empty() || v.front() != '"') {
      // An unquoted value ends at " #".
      const auto hash = v.find(" #");
      return std::string(trim(v.substr(0, hash)));
    }
    std::string out;
    std::size_t i = 1;
    for (; i < v.size() && v[i] != '"'; ++i) {
      if (v[i] == '\\' && i + 1 < v.size()) ++i;
      out += v[i];
    }
    if (i >= v.size()) fail("unterminated quoted value");
    const auto rest = trim(v.substr(i + 1));
    if (!rest.empty() && rest.front() != '#') fail("text after quoted value");
    return out;
  }

  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad_value(const Assignment& a, std::string_view why) {
  throw Error(Errc::kInvalidConfig,
              fmt::format("line {}: {} = '{}': {}", a.line, a.key, a.value, why));
}

template <typename T>
T parse_number(const Assignment& a) {
  T n{};
  const auto* end = a.value.data() + a.value.size();
  const auto [p, ec] = std::from_chars(a.value.data(), end, n);
  if (ec != std::errc() || p != end) bad_value(a, "expected a number");
  return n;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string_view rest = v;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

void assign_list(std::vector<std::string>& target, const Assignment& a) {
  if (a.op == AssignOp::kSet) target.clear();
  for (auto& item : split_list(a.value)) target.push_back(std::move(item));
}

void require_set(const Assignment& a) {
  if (a.op != AssignOp::kSet) bad_value(a, "'+=' applies to list keys only");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::size_t dots(std::string_view s) { return std::count(s.begin(), s.end(), '.'); }

catalog::DataSourceConfig parse_source(const Block& b, const std::filesystem::path& base) {
  catalog::DataSourceConfig s;
  s.name = b.name;
  for (const auto& a : b.body) {
    if (a.key == "read_only_users") {
      assign_list(s.read_only_users, a);
      continue;
    }
    if (a.key == "read_only_tables") {
      assign_list(s.read_only_tables, a);
      continue;
    }
    require_set(a);
    if (a.key == "location") {
      s.location = resolve(base, a.value).string();
    } else if (a.key == "dsn") {
      s.dsn = a.value;
    } else if (a.key == "db_user") {
      s.db_user = a.value;
    } else if (a.key == "db_password") {
      s.db_password = a.value;
    } else {
      bad_value(a, "unknown source key");
    }
  }
  if (s.location.empty()) {
    throw Error(Errc::kInvalidConfig, fmt::format("line {}: source {} has no location", b.line,
                                                  b.name));
  }
  return s;
}

auth::UserEntry parse_user(const Block& b) {
  auth::UserEntry u;
  u.hdb_name = b.name;
  for (const auto& a : b.body) {
    require_set(a);
    if (a.key == "password_hash") {
      u.password_hash = a.value;
    } else if (a.key == "db_user") {
      u.db_user = a.value;
    } else if (a.key == "db_password") {
      u.db_password = a.value;
    } else if (a.key == "password") {
      bad_value(Assignment{a.line, a.key, a.op, "..."},
                "plaintext passwords are not accepted; use password_hash");
    } else {
      bad_value(a, "unknown user key");
    }
  }
  if (u.password_hash.empty()) {
    throw Error(Errc::kInvalidConfig,
                fmt::format("line {}: user {} has no password_hash", b.line, b.name));
  }
  if (u.db_user.empty()) u.db_user = u.hdb_name;
  return u;
}

std::string machine_name() {
  char buf[256] = {};
  if (gethostname(buf, sizeof buf - 1) != 0) return "localhost";
  return buf;
}

}  // namespace

ServerConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<Assignment> top;
  std::vector<Block> blocks;
  Parser(text).parse(top, blocks);

  ServerConfig cfg;
  std::string mode = "session_idle";
  std::optional<std::int64_t> session_timeout;
  std::optional<std::int64_t> ip_validity;
  for (const auto& a : top) {
    if (a.key == "read_only") {
      assign_list(cfg.read_only, a);
      continue;
    }
    if (a.key == "file_columns") {
      assign_list(cfg.file_columns, a);
      continue;
    }
    require_set(a);
    if (a.key == "title") {
      cfg.title = a.value;
    } else if (a.key == "host") {
      cfg.host = a.value;
    } else if (a.key == "server_name") {
      cfg.server_name = a.value;
    } else if (a.key == "port") {
      const auto p = parse_number<unsigned>(a);
      if (p < 1 || p > 65535) bad_value(a, "port must be in 1-65535");
      cfg.port = p;
    } else if (a.key == "request_timeout") {
      cfg.request_timeout = std::chrono::seconds(parse_number<std::int64_t>(a));
    } else if (a.key == "auth_mode") {
      if (a.value != "session_idle" && a.value != "ip_window") {
        bad_value(a, "expected session_idle or ip_window");
      }
      mode = a.value;
    } else if (a.key == "session_timeout") {
      session_timeout = parse_number<std::int64_t>(a);
    } else if (a.key == "ip_validity") {
      ip_validity = parse_number<std::int64_t>(a);
    } else if (a.key == "upload_root") {
      cfg.upload_root = resolve(base_dir, a.value);
    } else if (a.key == "upload_cap") {
      cfg.upload_cap = parse_number<std::uint64_t>(a);
    } else if (a.key == "audit_table") {
      const auto dot = a.value.find('.');
      if (dot == std::string::npos || dots(a.value) != 1) bad_value(a, "expected db.table");
      cfg.audit_table = ops::AuditTarget{a.value.substr(0, dot), a.value.substr(dot + 1)};
    } else if (a.key == "page_limit") {
      cfg.page_limit = parse_number<std::size_t>(a);
      if (cfg.page_limit == 0) bad_value(a, "must be positive");
    } else if (a.key == "pool_size") {
      cfg.pool_size = parse_number<std::size_t>(a);
    } else if (a.key == "static_dir") {
      cfg.static_dir = resolve(base_dir, a.value);
    } else if (a.key == "state_dir") {
      cfg.state_dir = resolve(base_dir, a.value);
    } else {
      bad_value(a, "unknown key");
    }
  }

  if (mode == "ip_window") {
    auth::IpWindow w;
    if (ip_validity) w.validity = std::chrono::seconds(*ip_validity);
    cfg.auth_mode = w;
  } else {
    auth::SessionIdle s;
    if (session_timeout) s.timeout = std::chrono::seconds(*session_timeout);
    cfg.auth_mode = s;
  }

  for (const auto& b : blocks) {
    if (b.kind == "source") {
      cfg.sources.push_back(parse_source(b, base_dir));
    } else if (b.kind == "user") {
      cfg.users.push_back(parse_user(b));
    } else {
      throw Error(Errc::kInvalidConfig,
                  fmt::format("line {}: unknown block kind '{}'", b.line, b.kind));
    }
  }
  return cfg;
}

ServerConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::kInvalidConfig, fmt::format("cannot read {}", file.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), std::filesystem::absolute(file).parent_path());
  if (cfg.state_dir.empty()) cfg.state_dir = std::filesystem::absolute(file).parent_path();
  finalize_config(cfg);
  return cfg;
}

void finalize_config(ServerConfig& cfg) {
  auto fail = [](std::string why) { throw Error(Errc::kInvalidConfig, std::move(why)); };
  if (cfg.port < 1 || cfg.port > 65535) fail("port must be in 1-65535");
  if (cfg.server_name.empty()) cfg.server_name = machine_name();

  std::set<std::string> names;
  for (const auto& s : cfg.sources) {
    if (!names.insert(s.name).second) fail("duplicate source " + s.name);
  }
  names.clear();
  for (const auto& u : cfg.users) {
    if (!names.insert(u.hdb_name).second) fail("duplicate user " + u.hdb_name);
  }

  auto find_source = [&cfg](std::string_view name) -> catalog::DataSourceConfig* {
    for (auto& s : cfg.sources) {
      if (s.name == name) return &s;
    }
    return nullptr;
  };

  std::vector<std::string> read_only = cfg.read_only;
  if (cfg.audit_table) {
    if (find_source(cfg.audit_table->db) == nullptr) {
      fail("audit_table names unknown source " + cfg.audit_table->db);
    }
    read_only.push_back(cfg.audit_table->db + "." + cfg.audit_table->table);
  }
  for (const auto& entry : read_only) {
    const auto dot = entry.find('.');
    if (dot == std::string::npos || dots(entry) != 1) fail("read_only entry must be db.table: " + entry);
    auto* s = find_source(entry.substr(0, dot));
    if (s == nullptr) fail("read_only names unknown source " + entry);
    const auto table = entry.substr(dot + 1);
    if (std::find(s->read_only_tables.begin(), s->read_only_tables.end(), table) ==
        s->read_only_tables.end()) {
      s->read_only_tables.push_back(table);
    }
  }
  for (const auto& entry : cfg.file_columns) {
    if (dots(entry) != 2) fail("file_columns entry must be db.table.column: " + entry);
  }

  if (cfg.upload_root.empty()) fail("upload_root is required");
  std::error_code ec;
  std::filesystem::create_directories(cfg.upload_root, ec);
  if (!std::filesystem::is_directory(cfg.upload_root) ||
      access(cfg.upload_root.c_str(), W_OK) != 0) {
    fail("upload_root is not a writable directory: " + cfg.upload_root.string());
  }
  if (!cfg.state_dir.empty()) std::filesystem::create_directories(cfg.state_dir, ec);
}

}  // namespace hdb::server
