#include "hdb/ops.hpp"

#include <algorithm>
#include <array>
#include <sstream>

#include <fmt/format.h>

#include "hdb/bridge/derived_fill.hpp"

namespace hdb::ops {
namespace {

using catalog::ColumnMeta;
using catalog::TableMeta;
using doc::el;
using doc::el_text;
using doc::Node;

constexpr std::string_view kWherePrefix = "where.";
constexpr std::string_view kNullPrefix = "null.";
constexpr std::string_view kOpSuffix = ".op";

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Cuts at a UTF-8 boundary no later than `cap` bytes.
std::string cap_utf8(std::string s, std::size_t cap) {
  if (s.size() <= cap) return s;
  std::size_t n = cap;
  while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
  s.resize(n);
  return s;
}

std::optional<std::string> initial_value(const TableMeta& meta, const ColumnMeta& col,
                                         const hooks::HookRegistry& hooks, TimePoint clock,
                                         DiagnosticLog* diags) {
  if (auto v = hooks.default_value(clock, meta.db, meta.name, col.name, diags)) return v;
  return col.default_value;
}

}  // namespace

Node column_control(const TableMeta& meta, const ColumnMeta& col,
                    const hooks::HookRegistry& hooks, TimePoint clock,
                    const FormOptions& options, DiagnosticLog* diags) {
  const std::string name = options.name_prefix + col.name;
  const std::string id = "f-" + name;

  if (col.auto_increment) {
    return el("input", {{"type", "text"},
                        {"id", id},
                        {"placeholder", "automatic"},
                        {"disabled", "disabled"},
                        {"class", "automatic"}});
  }
  if (contains(options.derived_columns, col.name)) {
    return el("input", {{"type", "text"},
                        {"id", id},
                        {"placeholder", "derived"},
                        {"disabled", "disabled"},
                        {"class", "derived"}});
  }

  std::vector<doc::Attribute> attrs{{"name", name}, {"id", id}};
  const bool required = !col.nullable && !col.default_value;
  if (required) attrs.emplace_back("data-hdb-required", "true");

  if (contains(options.file_columns, col.name)) {
    attrs.insert(attrs.begin(), {"type", "file"});
    return el("input", std::move(attrs));
  }

  const auto initial = initial_value(meta, col, hooks, clock, diags);
  if (col.type.base == catalog::BaseType::kEnum && col.type.enum_values) {
    std::vector<Node> options_nodes;
    for (const auto& v : *col.type.enum_values) {
      std::vector<doc::Attribute> oa{{"value", v}};
      if (initial && *initial == v) oa.emplace_back("selected", "selected");
      options_nodes.push_back(el_text("option", v, std::move(oa)));
    }
    return el("select", std::move(attrs), std::move(options_nodes));
  }
  if (col.type.is_textual()) {
    const auto dims = hooks.textarea_dims(meta.db, meta.name, col.name, diags)
                          .value_or(hooks::kDefaultTextarea);
    attrs.emplace_back("rows", std::to_string(dims.rows));
    attrs.emplace_back("cols", std::to_string(dims.cols));
    std::vector<Node> children;
    if (initial) children.push_back(doc::text(*initial));
    return el("textarea", std::move(attrs), std::move(children));
  }
  attrs.insert(attrs.begin(), {"type", "text"});
  if (initial) attrs.emplace_back("value", *initial);
  return el("input", std::move(attrs));
}

namespace {

const ColumnMeta& require_column(const TableMeta& meta, std::string_view name) {
  const auto* col = meta.find(name);
  if (col == nullptr) throw Error(Errc::kUnknownColumn, fmt::format("{}.{}", meta.name, name));
  return *col;
}

}  // namespace

std::string audit_table_ddl(std::string_view table) {
  return fmt::format(
      "CREATE TABLE {} (AuditID INTEGER PRIMARY KEY, User TEXT NOT NULL, At TEXT NOT NULL, "
      "Db TEXT NOT NULL, TableName TEXT NOT NULL, Op TEXT NOT NULL, Summary TEXT NOT NULL)",
      sql::quote_identifier(table));
}

std::vector<OperationKind> available_ops(const TableMeta& meta, const hooks::HookRegistry& hooks,
                                         DiagnosticLog* diags) {
  std::vector<OperationKind> base;
  for (OperationKind k : kAllOperations) {
    if (!meta.read_only || !is_mutating(k)) base.push_back(k);
  }
  const auto chosen = hooks.override_ops(meta.db, meta.name, base, diags);
  std::vector<OperationKind> out;
  for (OperationKind k : base) {
    if (std::find(chosen.begin(), chosen.end(), k) != chosen.end()) out.push_back(k);
  }
  return out;
}

bool is_available(const TableMeta& meta, const hooks::HookRegistry& hooks, OperationKind kind,
                  DiagnosticLog* diags) {
  const auto ops = available_ops(meta, hooks, diags);
  return std::find(ops.begin(), ops.end(), kind) != ops.end();
}

std::vector<Node> input_rows(const TableMeta& meta, const std::vector<std::string>& columns,
                             const hooks::HookRegistry& hooks, TimePoint clock,
                             const FormOptions& options, DiagnosticLog* diags) {
  std::vector<Node> rows;
  for (const auto& col : meta.columns) {
    if (!columns.empty() && !contains(columns, col.name)) continue;
    const std::string id = "f-" + options.name_prefix + col.name;
    rows.push_back(el(
        "tr", {el("th", {el_text("label", col.name, {{"for", id}})}),
               el("td", {column_control(meta, col, hooks, clock, options, diags)}),
               el_text("td", col.type.display(), {{"class", "type"}})}));
  }
  return rows;
}

doc::Node build_input_form(const TableMeta& meta, const hooks::HookRegistry& hooks,
                           TimePoint clock, const FormOptions& options, DiagnosticLog* diags) {
  if (!is_available(meta, hooks, OperationKind::kInput, diags)) {
    throw Error(Errc::kOperationNotAvailable, fmt::format("input on {}.{}", meta.db, meta.name));
  }
  std::vector<doc::Attribute> attrs{{"method", "post"}, {"class", "op-input"}};
  if (!options.action.empty()) attrs.emplace_back("action", options.action);
  bool uploads = false;
  for (const auto& c : meta.columns) uploads = uploads || contains(options.file_columns, c.name);
  if (uploads) {
    attrs.emplace_back("enctype", "multipart/form-data");
    attrs.emplace_back("data-hdb-enhance", "input-form upload-form");
  } else {
    attrs.emplace_back("data-hdb-enhance", "input-form");
  }
  return el("form", std::move(attrs),
            {el("table", {{"class", "fields"}},
                {el("tbody", input_rows(meta, {}, hooks, clock, options, diags))}),
             el("p", {el_text("button", "Insert", {{"type", "submit"}})})});
}

Value field_value(const ColumnMeta& column, std::string_view text) {
  if (text.empty()) {
    if (column.nullable) return std::monostate{};
    throw Error(Errc::kMissingRequired, column.name);
  }
  return sql::convert_value(column, text);
}

sql::Assignments decode_assigns(const TableMeta& meta, const FormData& form,
                                std::string_view prefix) {
  sql::Assignments out;
  for (const auto& [key, text] : form.fields) {
    if (!starts_with(key, prefix)) continue;
    const std::string_view name = std::string_view(key).substr(prefix.size());
    if (prefix.empty() && (starts_with(name, "_") || name.find('.') != std::string_view::npos)) {
      continue;
    }
    const auto& col = require_column(meta, name);
    if (col.auto_increment && text.empty()) continue;
    out[col.name] = col.auto_increment ? sql::convert_value(col, text) : field_value(col, text);
  }
  return out;
}

sql::Assignments decode_update_assigns(const TableMeta& meta, const FormData& form) {
  sql::Assignments out;
  for (const auto& [key, text] : form.fields) {
    if (starts_with(key, kNullPrefix)) {
      const auto& col = require_column(meta, std::string_view(key).substr(kNullPrefix.size()));
      if (!text.empty()) out[col.name] = std::monostate{};
      continue;
    }
    if (starts_with(key, "_") || key.find('.') != std::string::npos || text.empty()) continue;
    const auto& col = require_column(meta, key);
    out[col.name] = sql::convert_value(col, text);
  }
  return out;
}

sql::RowFilter decode_filter(const TableMeta& meta, const FormData& form) {
  sql::RowFilter filter;
  for (const auto& [key, text] : form.fields) {
    if (!starts_with(key, kWherePrefix)) continue;
    std::string_view name = std::string_view(key).substr(kWherePrefix.size());
    if (meta.find(name) == nullptr && name.size() > kOpSuffix.size() &&
        name.substr(name.size() - kOpSuffix.size()) == kOpSuffix &&
        meta.find(name.substr(0, name.size() - kOpSuffix.size())) != nullptr) {
      continue;
    }
    const auto& col = require_column(meta, name);
    if (text.empty()) continue;
    sql::Relation rel = sql::Relation::kEq;
    if (const auto* op = form.field(fmt::format("{}{}{}", kWherePrefix, col.name, kOpSuffix))) {
      const auto parsed = sql::parse_relation(*op);
      if (!parsed) throw Error(Errc::kInvalidValue, fmt::format("unknown relation '{}'", *op));
      rel = *parsed;
    }
    Value v = rel == sql::Relation::kLike ? Value{text} : sql::convert_value(col, text);
    filter.conjuncts.push_back(sql::Conjunct{col.name, rel, std::move(v)});
  }
  return filter;
}

std::vector<std::string> file_columns_for(const TableMeta& meta, const OpsContext& ctx,
                                          DiagnosticLog* diags) {
  std::vector<std::string> out;
  for (const auto& col : meta.columns) {
    const bool configured =
        contains(ctx.file_columns, fmt::format("{}.{}.{}", meta.db, meta.name, col.name));
    const bool trigger =
        ctx.hooks != nullptr && ctx.hooks->derived_fill(meta.db, meta.name, col.name, diags);
    if (configured || trigger) out.push_back(col.name);
  }
  return out;
}

std::vector<std::string> derived_columns_for(const TableMeta& meta, const OpsContext& ctx,
                                             DiagnosticLog* diags) {
  std::vector<std::string> out;
  if (ctx.hooks == nullptr) return out;
  for (const auto& col : meta.columns) {
    const auto spec = ctx.hooks->derived_fill(meta.db, meta.name, col.name, diags);
    if (!spec) continue;
    for (const auto& o : spec->outputs) {
      if (!contains(out, o.column)) out.push_back(o.column);
    }
  }
  return out;
}

void record_audit(catalog::Connection& conn, const AuditTarget& target, const AuditRecord& rec,
                  DiagnosticLog* diags) {
  try {
    const std::array<Value, 6> params{rec.user,
                                      format_iso8601(rec.at),
                                      rec.db,
                                      rec.table,
                                      std::string(operation_name(rec.op)),
                                      cap_utf8(rec.summary, kAuditSummaryCap)};
    conn.execute(fmt::format("INSERT INTO {} (User, At, Db, TableName, Op, Summary) "
                             "VALUES (?, ?, ?, ?, ?, ?)",
                             sql::quote_identifier(target.table)),
                 params);
  } catch (const std::exception& e) {
    note(diags, fmt::format("audit_failed({}.{}): {}", target.db, target.table, e.what()));
  }
}

AuditRecord make_audit(const OpsContext& ctx, const auth::Session& session, std::string_view db,
                       std::string_view table, OperationKind kind,
                       const sql::SqlStatement& stmt) {
  return AuditRecord{session.user,        ctx.clock(), std::string(db), std::string(table), kind,
                     cap_utf8(sql::describe_statement(stmt), kAuditSummaryCap)};
}

void audit_elsewhere(const OpsContext& ctx, const std::vector<AuditRecord>& records,
                     DiagnosticLog* diags) {
  if (!ctx.audit || records.empty()) return;
  try {
    auto lease = ctx.pool->acquire_admin(ctx.audit->db);
    catalog::Connection::Transaction txn(*lease);
    for (const auto& rec : records) record_audit(*lease, *ctx.audit, rec, diags);
    txn.commit();
  } catch (const std::exception& e) {
    note(diags, fmt::format("audit_failed({}.{}): {}", ctx.audit->db, ctx.audit->table, e.what()));
  }
}

sql::SqlStatement insert_row(catalog::Connection& conn, const TableMeta& meta,
                             const sql::Assignments& assigns) {
  auto stmt = sql::gen_insert(meta, assigns);
  conn.execute(stmt.text, stmt.params);
  return stmt;
}

std::int64_t run_mutation(const OpsContext& ctx, const auth::Session& session,
                          catalog::Connection& conn, std::string_view db, std::string_view table,
                          OperationKind kind, const sql::SqlStatement& stmt,
                          DiagnosticLog* diags) {
  const bool audit_here = ctx.audit && ctx.audit->db == db;
  catalog::Connection::Transaction txn(conn);
  const std::int64_t n = conn.execute(stmt.text, stmt.params);
  const auto rec = make_audit(ctx, session, db, table, kind, stmt);
  if (audit_here) record_audit(conn, *ctx.audit, rec, diags);
  txn.commit();
  if (ctx.audit && !audit_here) audit_elsewhere(ctx, {rec}, diags);
  return n;
}

namespace {

OpResult run_select(const OpsContext& ctx, catalog::Connection& conn, const TableMeta& meta,
                    const sql::RowFilter& filter) {
  const auto stmt = sql::gen_select(meta, {}, filter, ctx.page_limit + 1);
  auto rows = conn.query(stmt.text, stmt.params);
  ResultSet rs;
  for (const auto& c : meta.columns) rs.columns.push_back(c.name);
  rs.rows = std::move(rows.rows);
  if (rs.rows.size() > ctx.page_limit) {
    rs.rows.resize(ctx.page_limit);
    rs.truncated = true;
  }
  return rs;
}

OpResult run_input(const OpsContext& ctx, const auth::Session& session,
                   catalog::Connection& conn, const TableMeta& meta, const FormData& form,
                   DiagnosticLog* diags) {
  auto assigns = decode_assigns(meta, form);
  const auto file_columns = file_columns_for(meta, ctx, diags);
  std::vector<std::pair<std::string, server::UploadRecord>> stored;
  auto discard_uploads = [&] {
    for (const auto& [col, rec] : stored) {
      std::error_code ec;
      std::filesystem::remove(ctx.uploads->absolute(rec.stored_path), ec);
    }
  };

  try {
    for (const auto& col : file_columns) {
      const auto* file = form.file(col);
      if (file == nullptr || file->filename.empty()) continue;
      if (ctx.uploads == nullptr) throw Error(Errc::kInvalidConfig, "no upload_root configured");
      std::istringstream content(file->content);
      auto rec =
          ctx.uploads->store(meta.db, meta.name, col, file->filename, content, ctx.clock());
      assigns[col] = rec.stored_path;
      stored.emplace_back(col, std::move(rec));
    }

    for (const auto& [col, rec] : stored) {
      const auto spec = ctx.hooks->derived_fill(meta.db, meta.name, col, diags);
      if (!spec) continue;
      try {
        bridge::validate_spec(*spec, meta);
      } catch (const Error& e) {
        note(diags, fmt::format("derived_fill_failed({}.{}.{}): {}", meta.db, meta.name, col,
                                e.what()));
        continue;
      }
      const auto derived = bridge::run_derived_fill(*spec, rec, *ctx.uploads, ctx.clock(), diags);
      bridge::merge_derived(assigns, derived, diags);
    }

    const auto stmt = sql::gen_insert(meta, assigns);
    return RowsAffected{
        run_mutation(ctx, session, conn, meta.db, meta.name, OperationKind::kInput, stmt, diags)};
  } catch (...) {
    discard_uploads();
    throw;
  }
}

}  // namespace

OpResult execute_op(const OpsContext& ctx, const auth::Session& session, std::string_view db,
                    std::string_view table, OperationKind kind, const FormData& form,
                    DiagnosticLog* diags) {
  const TableMeta meta = ctx.pool->describe(db, table);
  if (!is_available(meta, *ctx.hooks, kind, diags)) {
    throw Error(Errc::kOperationNotAvailable,
                fmt::format("{} on {}.{}", operation_name(kind), db, table));
  }
  auto lease = ctx.pool->acquire(db, auth::db_credentials(session));
  catalog::Connection& conn = *lease;

  switch (kind) {
    case OperationKind::kInput:
      return run_input(ctx, session, conn, meta, form, diags);
    case OperationKind::kUpdate: {
      const auto filter = decode_filter(meta, form);
      const auto assigns = decode_update_assigns(meta, form);
      const auto stmt = sql::gen_update(meta, assigns, filter);
      return RowsAffected{run_mutation(ctx, session, conn, db, table, kind, stmt, diags)};
    }
    case OperationKind::kDelete: {
      const auto stmt = sql::gen_delete(meta, decode_filter(meta, form));
      return RowsAffected{run_mutation(ctx, session, conn, db, table, kind, stmt, diags)};
    }
    case OperationKind::kQuery:
      return run_select(ctx, conn, meta, decode_filter(meta, form));
    case OperationKind::kAll:
      return run_select(ctx, conn, meta, {});
  }
  throw Error(Errc::kOperationNotAvailable, std::string(operation_name(kind)));
}

}  // namespace hdb::ops
