#pragma once

// The five standard table operations: availability, input forms, request
// decoding, execution over the session's connection and audit logging.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hdb/auth.hpp"
#include "hdb/catalog.hpp"
#include "hdb/common.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/operation.hpp"
#include "hdb/server/upload_store.hpp"
#include "hdb/sqlgen.hpp"

namespace hdb::ops {

using catalog::Value;

struct RowsAffected {
  std::int64_t n = 0;
};

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
  bool truncated = false;
};

using OpResult = std::variant<RowsAffected, ResultSet>;

inline constexpr std::size_t kAuditSummaryCap = 1024;

struct AuditTarget {
  std::string db;
  std::string table;
};

struct AuditRecord {
  std::string user;
  TimePoint at;
  std::string db;
  std::string table;
  OperationKind op = OperationKind::kInput;
  std::string summary;
};

/// DDL for an audit table matching what record_audit writes.
std::string audit_table_ddl(std::string_view table);

/// Canonical order; read-only tables offer only query and all. An
/// op_override hook may remove kinds, never add them.
std::vector<OperationKind> available_ops(const catalog::TableMeta& meta,
                                         const hooks::HookRegistry& hooks,
                                         DiagnosticLog* diags = nullptr);

bool is_available(const catalog::TableMeta& meta, const hooks::HookRegistry& hooks,
                  OperationKind kind, DiagnosticLog* diags = nullptr);

struct FormOptions {
  std::string action;
  /// Columns taking a file upload; their value becomes the stored path.
  std::vector<std::string> file_columns;
  /// Columns filled by derived fill; shown but not editable.
  std::vector<std::string> derived_columns;
  /// Prefix for control names, e.g. "row3." in batch forms.
  std::string name_prefix;
};

/// One control per column. Throws OperationNotAvailable when input is not
/// offered for the table.
doc::Node build_input_form(const catalog::TableMeta& meta, const hooks::HookRegistry& hooks,
                           TimePoint clock, const FormOptions& options = {},
                           DiagnosticLog* diags = nullptr);

/// The form control for one column, named `<name_prefix><column>`.
doc::Node column_control(const catalog::TableMeta& meta, const catalog::ColumnMeta& column,
                         const hooks::HookRegistry& hooks, TimePoint clock,
                         const FormOptions& options, DiagnosticLog* diags);

/// Controls only (table rows), for embedding into larger forms.
std::vector<doc::Node> input_rows(const catalog::TableMeta& meta,
                                  const std::vector<std::string>& columns,
                                  const hooks::HookRegistry& hooks, TimePoint clock,
                                  const FormOptions& options, DiagnosticLog* diags);

/// Value for one submitted field: empty text is NULL for nullable columns
/// and MissingRequired otherwise.
Value field_value(const catalog::ColumnMeta& column, std::string_view text);

/// Assignments from fields named `<prefix><column>`. Fields carrying the
/// prefix but naming no column throw UnknownColumn.
sql::Assignments decode_assigns(const catalog::TableMeta& meta, const FormData& form,
                                std::string_view prefix = {});

/// Update assignments: blank fields leave the column unchanged and a checked
/// `null.<column>` sets it to NULL.
sql::Assignments decode_update_assigns(const catalog::TableMeta& meta, const FormData& form);

/// Conjuncts from non-blank `where.<column>` fields, the relation taken from
/// `where.<column>.op` (default eq).
sql::RowFilter decode_filter(const catalog::TableMeta& meta, const FormData& form);

struct OpsContext {
  catalog::SourcePool* pool = nullptr;
  const hooks::HookRegistry* hooks = nullptr;
  std::optional<AuditTarget> audit;
  std::size_t page_limit = sql::kDefaultPageLimit;
  Clock clock = system_clock();
  server::UploadStore* uploads = nullptr;
  /// Configured upload columns as "db.table.column".
  std::vector<std::string> file_columns;
};

/// Upload columns of a table: configured ones plus derived-fill triggers.
std::vector<std::string> file_columns_for(const catalog::TableMeta& meta, const OpsContext& ctx,
                                          DiagnosticLog* diags = nullptr);
/// Output columns of every derived-fill spec registered on the table.
std::vector<std::string> derived_columns_for(const catalog::TableMeta& meta,
                                             const OpsContext& ctx,
                                             DiagnosticLog* diags = nullptr);

/// Appends one audit row. Failures become a diagnostic.
void record_audit(catalog::Connection& conn, const AuditTarget& target, const AuditRecord& rec,
                  DiagnosticLog* diags);

/// Runs one standard operation as the session's db user.
OpResult execute_op(const OpsContext& ctx, const auth::Session& session, std::string_view db,
                    std::string_view table, OperationKind kind, const FormData& form,
                    DiagnosticLog* diags = nullptr);

/// Generates and runs one insert on `conn`, inside the caller's transaction.
sql::SqlStatement insert_row(catalog::Connection& conn, const catalog::TableMeta& meta,
                             const sql::Assignments& assigns);

/// Runs `stmt` on the session connection inside one transaction, auditing
/// mutating kinds.
std::int64_t run_mutation(const OpsContext& ctx, const auth::Session& session,
                          catalog::Connection& conn, std::string_view db, std::string_view table,
                          OperationKind kind, const sql::SqlStatement& stmt,
                          DiagnosticLog* diags);

/// Writes audit rows for statements already committed on another source.
void audit_elsewhere(const OpsContext& ctx, const std::vector<AuditRecord>& records,
                     DiagnosticLog* diags);

AuditRecord make_audit(const OpsContext& ctx, const auth::Session& session, std::string_view db,
                       std::string_view table, OperationKind kind,
                       const sql::SqlStatement& stmt);

}  // namespace hdb::ops
