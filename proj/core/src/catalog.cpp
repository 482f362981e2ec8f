#include "hdb/catalog.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <filesystem>

#include <fmt/format.h>

#include "hdb/common.hpp"

namespace hdb::catalog {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return lower(a) == lower(b);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string quote_ident(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Minimal cursor over declared type text.
class TypeScanner {
 public:
  explicit TypeScanner(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ == s_.size();
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string word() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return lower(s_.substr(start, pos_ - start));
  }
  std::optional<unsigned> number() {
    skip_ws();
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (ec != std::errc{}) return std::nullopt;
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return value;
  }
  std::optional<std::string> quoted() {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != '\'') return std::nullopt;
    ++pos_;
    std::string out;
    while (pos_ < s_.size()) {
      char c = s_[pos_++];
      if (c == '\'') {
        if (pos_ < s_.size() && s_[pos_] == '\'') {
          out += '\'';
          ++pos_;
          continue;
        }
        return out;
      }
      out += c;
    }
    return std::nullopt;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<BaseType> base_from_word(std::string_view w) {
  static constexpr std::array<std::pair<std::string_view, BaseType>, 16> kBases{{
      {"int", BaseType::kInteger},       {"integer", BaseType::kInteger},
      {"tinyint", BaseType::kInteger},   {"smallint", BaseType::kInteger},
      {"mediumint", BaseType::kInteger}, {"bigint", BaseType::kBigint},
      {"float", BaseType::kFloat},       {"double", BaseType::kFloat},
      {"real", BaseType::kFloat},        {"text", BaseType::kText},
      {"tinytext", BaseType::kTinytext}, {"date", BaseType::kDate},
      {"datetime", BaseType::kDatetime}, {"timestamp", BaseType::kDatetime},
      {"blob", BaseType::kBlob},         {"enum", BaseType::kEnum},
  }};
  for (const auto& [name, base] : kBases) {
    if (name == w) return base;
  }
  return std::nullopt;
}

bool numeric(BaseType b) {
  return b == BaseType::kInteger || b == BaseType::kBigint || b == BaseType::kFloat;
}

std::string_view base_name(BaseType b) {
  switch (b) {
    case BaseType::kInteger: return "integer";
    case BaseType::kBigint: return "bigint";
    case BaseType::kFloat: return "float";
    case BaseType::kText: return "text";
    case BaseType::kTinytext: return "tinytext";
    case BaseType::kDate: return "date";
    case BaseType::kDatetime: return "datetime";
    case BaseType::kEnum: return "enum";
    case BaseType::kBlob: return "blob";
    case BaseType::kOther: return "other";
  }
  return "other";
}

void check(int rc, sqlite3* db, Errc code = Errc::kEngineError) {
  if (rc != SQLITE_OK && rc != SQLITE_DONE && rc != SQLITE_ROW) {
    throw Error(code, db != nullptr ? sqlite3_errmsg(db) : sqlite3_errstr(rc));
  }
}

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()),
                                      &stmt_, nullptr);
    if (rc != SQLITE_OK) {
      throw Error(Errc::kEngineError, fmt::format("{} [{}]", sqlite3_errmsg(db), sql));
    }
  }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;
  ~Statement() { sqlite3_finalize(stmt_); }

  void bind(std::span<const Value> params) {
    const int expected = sqlite3_bind_parameter_count(stmt_);
    if (expected != static_cast<int>(params.size())) {
      throw Error(Errc::kEngineError,
                  fmt::format("statement expects {} parameters, got {}", expected,
                              params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      const int idx = static_cast<int>(i) + 1;
      int rc = std::visit(
          [&](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              return sqlite3_bind_null(stmt_, idx);
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
              return sqlite3_bind_int64(stmt_, idx, v);
            } else if constexpr (std::is_same_v<T, double>) {
              return sqlite3_bind_double(stmt_, idx, v);
            } else {
              return sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()),
                                       SQLITE_TRANSIENT);
            }
          },
          params[i]);
      check(rc, db_);
    }
  }

  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    check(rc, db_);
    return false;
  }

  int column_count() const { return sqlite3_column_count(stmt_); }
  std::string column_name(int i) const { return sqlite3_column_name(stmt_, i); }

  Value column(int i) const {
    switch (sqlite3_column_type(stmt_, i)) {
      case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt_, i));
      case SQLITE_FLOAT: return sqlite3_column_double(stmt_, i);
      case SQLITE_NULL: return std::monostate{};
      default: {
        const auto* p = static_cast<const char*>(sqlite3_column_blob(stmt_, i));
        const int n = sqlite3_column_bytes(stmt_, i);
        return std::string(p != nullptr ? p : "", static_cast<std::size_t>(n));
      }
    }
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string as_text(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return display(v);
}

std::int64_t as_int(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return 0;
}

std::optional<std::string> canonical_table_name(Connection& conn, std::string_view name) {
  const std::array<Value, 1> params{std::string(name)};
  auto rows = conn.query(
      "SELECT name FROM sqlite_master WHERE type = 'table' AND name = ? COLLATE NOCASE",
      params);
  if (rows.rows.empty()) return std::nullopt;
  return as_text(rows.rows.front().front());
}

bool has_sidecar(Connection& conn) {
  return canonical_table_name(conn, "hdb_declared_types").has_value();
}

std::optional<std::string> unquote_default(const Value& v) {
  if (is_null(v)) return std::nullopt;
  std::string s = as_text(v);
  if (s.size() >= 2 && s.front() == '\'' && s.back() == '\'') {
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      out += s[i];
      if (s[i] == '\'' && i + 2 < s.size() && s[i + 1] == '\'') ++i;
    }
    return out;
  }
  if (iequals(s, "NULL")) return std::nullopt;
  return s;
}

}  // namespace

std::string format_double(double d) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), d);
  if (ec != std::errc{}) return fmt::format("{}", d);
  return std::string(buf.data(), ptr);
}

std::string display(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return {};
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(x);
        } else {
          return x;
        }
      },
      v);
}

std::string TypeDesc::display() const {
  if (base == BaseType::kOther) return other_name;
  std::string out(base_name(base));
  if (base == BaseType::kEnum && enum_values) {
    out += '(';
    for (std::size_t i = 0; i < enum_values->size(); ++i) {
      if (i > 0) out += ',';
      out += '\'';
      for (char c : (*enum_values)[i]) {
        if (c == '\'') out += '\'';
        out += c;
      }
      out += '\'';
    }
    out += ')';
    return out;
  }
  if (width) out += fmt::format("({})", *width);
  if (is_unsigned) out += " uns.";
  return out;
}

TypeDesc parse_declared_type(std::string_view text) {
  TypeDesc fallback;
  fallback.base = BaseType::kOther;
  fallback.other_name = std::string(trim(text));

  TypeScanner scan(text);
  const std::string word = scan.word();
  const auto base = base_from_word(word);
  if (!base) return fallback;

  TypeDesc out;
  out.base = *base;
  if (*base == BaseType::kEnum) {
    if (!scan.consume('(')) return fallback;
    std::vector<std::string> values;
    do {
      auto v = scan.quoted();
      if (!v) return fallback;
      values.push_back(std::move(*v));
    } while (scan.consume(','));
    if (!scan.consume(')') || !scan.at_end()) return fallback;
    out.enum_values = std::move(values);
    return out;
  }
  if (scan.consume('(')) {
    auto w = scan.number();
    if (!w || !scan.consume(')') || !numeric(*base)) return fallback;
    out.width = *w;
  }
  if (!scan.at_end()) {
    if (scan.word() != "unsigned" || !scan.at_end() || !numeric(*base)) return fallback;
    out.is_unsigned = true;
  }
  return out;
}

std::string_view key_label(KeyKind k) {
  switch (k) {
    case KeyKind::kPrimary: return "PRI";
    case KeyKind::kUnique: return "UNI";
    case KeyKind::kIndex: return "MUL";
    case KeyKind::kNone: return "";
  }
  return "";
}

const ColumnMeta* TableMeta::find(std::string_view column) const {
  for (const auto& c : columns) {
    if (c.name == column) return &c;
  }
  return nullptr;
}

std::vector<const ColumnMeta*> TableMeta::primary_key() const {
  std::vector<const ColumnMeta*> out;
  for (const auto& c : columns) {
    if (c.key == KeyKind::kPrimary) out.push_back(&c);
  }
  return out;
}

std::string unavailable_message(const DataSourceConfig& cfg) {
  return fmt::format("unable_to_connect_to_db_source({}-{})", cfg.label(), cfg.name);
}

// Connection ---------------------------------------------------------------

Connection::Connection(sqlite3* db, std::string source, std::string db_user,
                       bool read_only, std::vector<std::string> read_only_tables)
    : db_(db),
      source_(std::move(source)),
      db_user_(std::move(db_user)),
      engine_read_only_(read_only),
      read_only_tables_(std::move(read_only_tables)) {}

Connection::Connection(Connection&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)),
      source_(std::move(other.source_)),
      db_user_(std::move(other.db_user_)),
      engine_read_only_(other.engine_read_only_),
      read_only_tables_(std::move(other.read_only_tables_)) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    if (db_ != nullptr) sqlite3_close_v2(db_);
    db_ = std::exchange(other.db_, nullptr);
    source_ = std::move(other.source_);
    db_user_ = std::move(other.db_user_);
    engine_read_only_ = other.engine_read_only_;
    read_only_tables_ = std::move(other.read_only_tables_);
  }
  return *this;
}

Connection::~Connection() {
  if (db_ != nullptr) sqlite3_close_v2(db_);
}

bool Connection::is_read_only_table(std::string_view table) const {
  return std::any_of(read_only_tables_.begin(), read_only_tables_.end(),
                     [table](const std::string& t) { return iequals(t, table); });
}

ResultRows Connection::query(std::string_view sql, std::span<const Value> params) {
  if (db_ == nullptr) throw Error(Errc::kConnectionLost, source_);
  Statement stmt(db_, sql);
  stmt.bind(params);
  ResultRows out;
  const int n = stmt.column_count();
  for (int i = 0; i < n; ++i) out.columns.push_back(stmt.column_name(i));
  while (stmt.step()) {
    std::vector<Value> row;
    row.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) row.push_back(stmt.column(i));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::int64_t Connection::execute(std::string_view sql, std::span<const Value> params) {
  if (db_ == nullptr) throw Error(Errc::kConnectionLost, source_);
  Statement stmt(db_, sql);
  stmt.bind(params);
  while (stmt.step()) {
  }
  return sqlite3_changes(db_);
}

void Connection::execute_script(std::string_view sql) {
  if (db_ == nullptr) throw Error(Errc::kConnectionLost, source_);
  char* err = nullptr;
  const std::string copy(sql);
  if (sqlite3_exec(db_, copy.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    throw Error(Errc::kEngineError, msg);
  }
}

std::int64_t Connection::last_insert_rowid() const {
  return db_ != nullptr ? sqlite3_last_insert_rowid(db_) : 0;
}

Connection::Transaction::Transaction(Connection& conn) : conn_(&conn) {
  conn_->execute_script("BEGIN IMMEDIATE");
}

Connection::Transaction::~Transaction() {
  if (!done_) {
    try {
      conn_->execute_script("ROLLBACK");
    } catch (...) {
    }
  }
}

void Connection::Transaction::commit() {
  conn_->execute_script("COMMIT");
  done_ = true;
}

Connection open_source(const DataSourceConfig& cfg) {
  std::error_code ec;
  if (cfg.location.empty() || !std::filesystem::is_regular_file(cfg.location, ec)) {
    throw Error(Errc::kDataSourceUnavailable, unavailable_message(cfg));
  }
  const bool read_only =
      std::find(cfg.read_only_users.begin(), cfg.read_only_users.end(), cfg.db_user) !=
      cfg.read_only_users.end();
  sqlite3* db = nullptr;
  const int flags = (read_only ? SQLITE_OPEN_READONLY : SQLITE_OPEN_READWRITE) |
                    SQLITE_OPEN_NOMUTEX;
  if (sqlite3_open_v2(cfg.location.c_str(), &db, flags, nullptr) != SQLITE_OK) {
    if (db != nullptr) sqlite3_close_v2(db);
    throw Error(Errc::kDataSourceUnavailable, unavailable_message(cfg));
  }
  sqlite3_busy_timeout(db, 5000);
  Connection conn(db, cfg.name, cfg.db_user, read_only, cfg.read_only_tables);
  try {
    // Touch the schema so corrupt or non-database files fail here.
    conn.query("SELECT count(*) FROM sqlite_master");
  } catch (const Error&) {
    throw Error(Errc::kDataSourceUnavailable, unavailable_message(cfg));
  }
  return conn;
}

std::vector<std::string> list_table_names(Connection& conn) {
  auto rows = conn.query(
      "SELECT name FROM sqlite_master WHERE type = 'table' "
      "AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
      "AND name NOT LIKE 'hdb\\_%' ESCAPE '\\' "
      "ORDER BY name COLLATE NOCASE, name");
  std::vector<std::string> out;
  out.reserve(rows.rows.size());
  for (const auto& r : rows.rows) out.push_back(as_text(r.front()));
  return out;
}

std::vector<TableMeta> list_tables(Connection& conn) {
  std::vector<TableMeta> out;
  for (const auto& name : list_table_names(conn)) out.push_back(describe_table(conn, name));
  return out;
}

TableMeta describe_table(Connection& conn, std::string_view name) {
  const auto canonical = canonical_table_name(conn, name);
  if (!canonical) throw Error(Errc::kNoSuchTable, std::string(name));

  TableMeta meta;
  meta.db = conn.source();
  meta.name = *canonical;
  meta.read_only = conn.is_read_only_table(*canonical);

  std::map<std::string, std::string> declared;
  if (has_sidecar(conn)) {
    const std::array<Value, 1> params{*canonical};
    auto rows = conn.query(
        "SELECT column_name, declared_type FROM hdb_declared_types WHERE table_name = ?",
        params);
    for (const auto& r : rows.rows) declared[as_text(r[0])] = as_text(r[1]);
  }

  // cid, name, type, notnull, dflt_value, pk
  auto info = conn.query(fmt::format("PRAGMA table_info({})", quote_ident(*canonical)));
  int pk_columns = 0;
  for (const auto& r : info.rows) {
    if (as_int(r[5]) > 0) ++pk_columns;
  }
  for (const auto& r : info.rows) {
    ColumnMeta col;
    col.name = as_text(r[1]);
    const std::string engine_type = as_text(r[2]);
    const auto it = declared.find(col.name);
    col.type = parse_declared_type(it != declared.end() ? it->second : engine_type);
    const bool pk = as_int(r[5]) > 0;
    col.nullable = as_int(r[3]) == 0 && !pk;
    col.key = pk ? KeyKind::kPrimary : KeyKind::kNone;
    col.default_value = unquote_default(r[4]);
    // A lone INTEGER PRIMARY KEY aliases the rowid, which the engine assigns.
    col.auto_increment = pk && pk_columns == 1 && iequals(trim(engine_type), "INTEGER");
    meta.columns.push_back(std::move(col));
  }
  if (meta.columns.empty()) throw Error(Errc::kNoSuchTable, std::string(name));

  // seq, name, unique, origin, partial
  auto indexes = conn.query(fmt::format("PRAGMA index_list({})", quote_ident(*canonical)));
  for (const auto& idx : indexes.rows) {
    const bool unique = as_int(idx[2]) != 0;
    const std::string origin = as_text(idx[3]);
    if (origin == "pk") continue;
    auto cols = conn.query(fmt::format("PRAGMA index_info({})", quote_ident(as_text(idx[1]))));
    if (cols.rows.empty()) continue;
    const std::string first = as_text(cols.rows.front()[2]);
    for (auto& c : meta.columns) {
      if (c.name != first || c.key == KeyKind::kPrimary) continue;
      if (unique && cols.rows.size() == 1) {
        c.key = KeyKind::kUnique;
      } else if (c.key == KeyKind::kNone) {
        c.key = KeyKind::kIndex;
      }
    }
  }
  return meta;
}

std::uint64_t row_count(Connection& conn, std::string_view name) {
  const auto canonical = canonical_table_name(conn, name);
  if (!canonical) throw Error(Errc::kNoSuchTable, std::string(name));
  auto rows = conn.query(fmt::format("SELECT count(*) FROM {}", quote_ident(*canonical)));
  return static_cast<std::uint64_t>(as_int(rows.rows.front().front()));
}

void declare_column_type(Connection& conn, std::string_view table, std::string_view column,
                         std::string_view declared) {
  conn.execute_script(
      "CREATE TABLE IF NOT EXISTS hdb_declared_types ("
      "table_name TEXT NOT NULL, column_name TEXT NOT NULL, declared_type TEXT NOT NULL, "
      "PRIMARY KEY (table_name, column_name))");
  const std::array<Value, 3> params{std::string(table), std::string(column),
                                    std::string(declared)};
  conn.execute("INSERT OR REPLACE INTO hdb_declared_types VALUES (?, ?, ?)", params);
}

// SourcePool ---------------------------------------------------------------

SourcePool::SourcePool(std::vector<DataSourceConfig> sources, std::size_t max_idle)
    : sources_(std::move(sources)), max_idle_(max_idle) {}

const DataSourceConfig* SourcePool::find(std::string_view name) const {
  for (const auto& s : sources_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

SourcePool::Lease::~Lease() {
  if (pool_ != nullptr && conn_) pool_->release(key_, std::move(*conn_));
}

SourcePool::Lease SourcePool::acquire(std::string_view source, const Credentials& creds) {
  const DataSourceConfig* cfg = find(source);
  if (cfg == nullptr) throw Error(Errc::kNotFound, std::string(source));
  std::string key = fmt::format("{}\x1f{}", source, creds.db_user);
  {
    std::lock_guard lock(mu_);
    auto& idle = idle_[key];
    if (!idle.empty()) {
      Connection conn = std::move(idle.back());
      idle.pop_back();
      return Lease(this, std::move(key), std::move(conn));
    }
  }
  DataSourceConfig as_user = *cfg;
  as_user.db_user = creds.db_user;
  as_user.db_password = creds.db_password;
  return Lease(this, std::move(key), open_source(as_user));
}

SourcePool::Lease SourcePool::acquire_admin(std::string_view source) {
  const DataSourceConfig* cfg = find(source);
  if (cfg == nullptr) throw Error(Errc::kNotFound, std::string(source));
  return acquire(source, Credentials{cfg->db_user, cfg->db_password});
}

void SourcePool::release(const std::string& key, Connection conn) {
  std::lock_guard lock(mu_);
  auto& idle = idle_[key];
  if (idle.size() < max_idle_) idle.push_back(std::move(conn));
}

std::vector<std::string> SourcePool::databases() const {
  std::vector<std::string> out;
  for (const auto& s : sources_) out.push_back(s.name);
  return out;
}

TableMeta SourcePool::describe(std::string_view db, std::string_view table) {
  auto lease = acquire_admin(db);
  return describe_table(*lease, table);
}

}  // namespace hdb::catalog
