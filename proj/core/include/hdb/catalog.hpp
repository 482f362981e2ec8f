#pragma once

// Data source connectivity and runtime catalog introspection.
//
// The reference engine is SQLite. SQLite keeps declared column types as free
// text but its grammar cannot express some source-schema types such as
// `bigint(20) unsigned` or `enum('a','b')`. Those are recorded in the
// sidecar table `hdb_declared_types(table_name, column_name, declared_type)`,
// which takes precedence over the engine's declared type when present.
// Tables whose names start with `hdb_` or `sqlite_` are internal and never
// listed.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

struct sqlite3;

namespace hdb::catalog {

using Value = std::variant<std::monostate, std::int64_t, double, std::string>;

inline bool is_null(const Value& v) {
  return std::holds_alternative<std::monostate>(v);
}

/// Display form of a stored value. NULL renders as "", doubles in their
/// shortest round-trip form.
std::string display(const Value& v);
std::string format_double(double d);

enum class BaseType {
  kInteger,
  kBigint,
  kFloat,
  kText,
  kTinytext,
  kDate,
  kDatetime,
  kEnum,
  kBlob,
  kOther,
};

struct TypeDesc {
  BaseType base = BaseType::kOther;
  /// Original text for kOther.
  std::string other_name;
  std::optional<unsigned> width;
  bool is_unsigned = false;
  std::optional<std::vector<std::string>> enum_values;

  bool is_integer_kind() const {
    return base == BaseType::kInteger || base == BaseType::kBigint;
  }
  bool is_textual() const {
    return base == BaseType::kText || base == BaseType::kTinytext;
  }
  /// Table-page rendering, e.g. "bigint(20) uns.".
  std::string display() const;

  bool operator==(const TypeDesc&) const = default;
};

/// Total: unparsable text yields kOther carrying the text.
TypeDesc parse_declared_type(std::string_view text);

enum class KeyKind { kPrimary, kUnique, kIndex, kNone };

std::string_view key_label(KeyKind k);  // "PRI", "UNI", "MUL", ""

struct ColumnMeta {
  std::string name;
  TypeDesc type;
  bool nullable = true;
  KeyKind key = KeyKind::kNone;
  std::optional<std::string> default_value;
  bool auto_increment = false;
};

struct TableMeta {
  std::string db;
  std::string name;
  std::vector<ColumnMeta> columns;
  bool read_only = false;

  const ColumnMeta* find(std::string_view column) const;
  std::vector<const ColumnMeta*> primary_key() const;
};

struct DataSourceConfig {
  std::string name;
  /// Engine-side source label used in diagnostics; defaults to `name`.
  std::string dsn;
  std::string location;
  std::string db_user;
  std::string db_password;
  /// Database users whose connections the engine opens read-only.
  std::vector<std::string> read_only_users;
  /// Tables presented as read-only regardless of the user.
  std::vector<std::string> read_only_tables;

  const std::string& label() const { return dsn.empty() ? name : dsn; }
};

/// `unable_to_connect_to_db_source(<dsn>-<name>)`
std::string unavailable_message(const DataSourceConfig& cfg);

struct ResultRows {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

class Connection {
 public:
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;
  ~Connection();

  const std::string& source() const { return source_; }
  const std::string& db_user() const { return db_user_; }
  bool engine_read_only() const { return engine_read_only_; }
  bool is_read_only_table(std::string_view table) const;

  ResultRows query(std::string_view sql, std::span<const Value> params = {});
  /// Runs a statement and returns the number of changed rows.
  std::int64_t execute(std::string_view sql, std::span<const Value> params = {});
  /// Runs several semicolon separated statements without parameters.
  void execute_script(std::string_view sql);
  std::int64_t last_insert_rowid() const;

  class Transaction {
   public:
    explicit Transaction(Connection& conn);
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;
    ~Transaction();
    void commit();

   private:
    Connection* conn_;
    bool done_ = false;
  };

 private:
  friend Connection open_source(const DataSourceConfig& cfg);
  Connection(sqlite3* db, std::string source, std::string db_user,
             bool read_only, std::vector<std::string> read_only_tables);

  sqlite3* db_ = nullptr;
  std::string source_;
  std::string db_user_;
  bool engine_read_only_ = false;
  std::vector<std::string> read_only_tables_;
};

/// Opens the source as cfg.db_user. Throws DataSourceUnavailable carrying
/// unavailable_message(cfg).
Connection open_source(const DataSourceConfig& cfg);

std::vector<TableMeta> list_tables(Connection& conn);
std::vector<std::string> list_table_names(Connection& conn);
TableMeta describe_table(Connection& conn, std::string_view name);
std::uint64_t row_count(Connection& conn, std::string_view name);

/// Records a source-schema declared type for a column in the sidecar table.
void declare_column_type(Connection& conn, std::string_view table,
                         std::string_view column, std::string_view declared);

struct Credentials {
  std::string db_user;
  std::string db_password;
};

/// Read access to metadata across all configured sources.
class CatalogAccess {
 public:
  virtual ~CatalogAccess() = default;
  virtual std::vector<std::string> databases() const = 0;
  virtual TableMeta describe(std::string_view db, std::string_view table) = 0;
};

/// Connections keyed by (source, db user), with up to `max_idle` idle
/// connections kept per key. A leased connection is used by one request at a
/// time.
class SourcePool : public CatalogAccess {
 public:
  explicit SourcePool(std::vector<DataSourceConfig> sources,
                      std::size_t max_idle = 4);

  const std::vector<DataSourceConfig>& sources() const { return sources_; }
  const DataSourceConfig* find(std::string_view name) const;

  class Lease {
   public:
    Lease(SourcePool* pool, std::string key, Connection conn)
        : pool_(pool), key_(std::move(key)), conn_(std::move(conn)) {}
    Lease(Lease&& other) noexcept
        : pool_(std::exchange(other.pool_, nullptr)),
          key_(std::move(other.key_)),
          conn_(std::move(other.conn_)) {}
    Lease& operator=(Lease&&) = delete;
    ~Lease();

    Connection& operator*() { return *conn_; }
    Connection* operator->() { return &*conn_; }

   private:
    SourcePool* pool_;
    std::string key_;
    std::optional<Connection> conn_;
  };

  /// Throws NotFound for an unknown source, DataSourceUnavailable when the
  /// engine refuses the connection.
  Lease acquire(std::string_view source, const Credentials& creds);
  /// Connection as the source's configured db user.
  Lease acquire_admin(std::string_view source);

  std::vector<std::string> databases() const override;
  TableMeta describe(std::string_view db, std::string_view table) override;

 private:
  void release(const std::string& key, Connection conn);

  std::vector<DataSourceConfig> sources_;
  std::size_t max_idle_;
  std::mutex mu_;
  std::map<std::string, std::vector<Connection>> idle_;
};

}  // namespace hdb::catalog
