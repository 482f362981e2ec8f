#include "hdb/views.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "hdb/server/http.hpp"
#include "hdb/server/pages.hpp"

namespace hdb::views {
namespace {

using catalog::TableMeta;
using doc::el;
using doc::el_text;
using doc::Node;

constexpr std::string_view kWherePrefix = "where.";
constexpr std::string_view kOpSuffix = ".op";

struct TableKey {
  std::string db;
  std::string table;
  bool operator==(const TableKey&) const = default;
};

std::vector<TableKey> tables_of(const std::vector<ColumnRef>& cols) {
  std::vector<TableKey> out;
  for (const auto& c : cols) {
    TableKey k{c.db, c.table};
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

std::size_t table_index(const std::vector<TableKey>& tables, const ColumnRef& c) {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].db == c.db && tables[i].table == c.table) return i;
  }
  return tables.size();
}

// Memoizes catalog lookups for one validation or request.
class MetaCache {
 public:
  explicit MetaCache(catalog::CatalogAccess& cat) : cat_(cat) {}

  const TableMeta& get(const std::string& db, const std::string& table) {
    const auto key = db + '\x1f' + table;
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, cat_.describe(db, table)).first;
    return it->second;
  }

 private:
  catalog::CatalogAccess& cat_;
  std::map<std::string, TableMeta> cache_;
};

void require_resolvable(MetaCache& metas, const ColumnRef& c) {
  try {
    if (metas.get(c.db, c.table).find(c.column) == nullptr) {
      throw Error(Errc::kUnknownColumnInView, c.label());
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kNoSuchTable || e.code() == Errc::kNotFound) {
      throw Error(Errc::kUnknownColumnInView, c.label());
    }
    throw;
  }
}

bool in_columns(const ViewDef& def, const ColumnRef& c) {
  return std::find(def.columns.begin(), def.columns.end(), c) != def.columns.end();
}

void invalid_op(const ViewDef& def, const std::string& op, std::string_view why) {
  throw Error(Errc::kInvalidViewOp, fmt::format("{}/{}: {}", def.name, op, why));
}

void check_joinable(const ViewDef& def, const std::string& op) {
  const auto tables = tables_of(def.columns);
  for (const auto& t : tables) {
    if (t.db != tables.front().db) invalid_op(def, op, "columns span several databases");
  }
  std::vector<bool> reached(tables.size(), false);
  reached[0] = true;
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& k : def.join_keys) {
      const auto l = table_index(tables, k.left);
      const auto r = table_index(tables, k.right);
      if (reached[l] != reached[r]) {
        reached[l] = reached[r] = true;
        grew = true;
      }
    }
  }
  if (std::find(reached.begin(), reached.end(), false) != reached.end()) {
    invalid_op(def, op, "tables are not connected by join keys");
  }
}

void validate_op(const ViewDef& def, const ViewOp& op, const hooks::HookRegistry& hooks) {
  const std::string name = view_op_name(op);
  if (const auto* s = std::get_if<Standard>(&op)) {
    switch (s->kind) {
      case OperationKind::kUpdate:
      case OperationKind::kDelete:
        invalid_op(def, name, "views offer no update or delete");
        break;
      case OperationKind::kInput:
        if (tables_of(def.columns).size() != 1) invalid_op(def, name, "input needs one table");
        break;
      case OperationKind::kQuery:
      case OperationKind::kAll:
        check_joinable(def, name);
        break;
    }
  } else if (const auto* b = std::get_if<BatchInput>(&op)) {
    std::vector<ColumnRef> all = b->shared;
    all.insert(all.end(), b->per_row.begin(), b->per_row.end());
    if (b->per_row.empty()) invalid_op(def, name, "no per-row columns");
    if (b->max_rows == 0) invalid_op(def, name, "max_rows is zero");
    for (const auto& c : all) {
      if (!in_columns(def, c)) throw Error(Errc::kUnknownColumnInView, c.label());
      if (!c.same_table(all.front())) invalid_op(def, name, "batch columns span several tables");
    }
  } else {
    const auto& c = std::get<Custom>(op);
    if (hooks.handler(c.handler) == nullptr) {
      throw Error(Errc::kUnregisteredHandler, fmt::format("{}/{}: {}", def.name, c.name, c.handler));
    }
  }
}

std::string view_url(const ViewDef& view) { return "/view/" + server::url_encode(view.name); }

std::string op_url(const ViewDef& view, std::string_view op) {
  return view_url(view) + "/op/" + server::url_encode(op);
}

std::string filter_key(const ColumnRef& c) { return c.table + "." + c.column; }

std::vector<server::ColumnOrigin> origins_of(const ViewDef& view, const ops::OpsContext& ctx,
                                             MetaCache& metas, DiagnosticLog* diags) {
  std::vector<server::ColumnOrigin> out;
  for (const auto& c : view.columns) {
    const auto files = ops::file_columns_for(metas.get(c.db, c.table), ctx, diags);
    const bool file = std::find(files.begin(), files.end(), c.column) != files.end();
    out.push_back(server::ColumnOrigin{c.db, c.table, c.column, file});
  }
  return out;
}

doc::Page simple_page(std::string title, std::vector<Node> body) {
  return doc::Page{std::move(title), {}, std::move(body)};
}

doc::Page run_standard(const DispatchRequest& req, const Standard& op, DiagnosticLog* diags) {
  const ViewDef& view = req.view;
  MetaCache metas(*req.ctx.pool);
  const std::string name(operation_name(op.kind));
  const std::string title = fmt::format("{} [{}]", view.name, name);

  if (op.kind == OperationKind::kInput) {
    const auto& c0 = view.columns.front();
    const auto& meta = metas.get(c0.db, c0.table);
    if (req.submitted) {
      ops::execute_op(req.ctx, req.session, c0.db, c0.table, OperationKind::kInput, req.form,
                      diags);
      return simple_page(title, {el_text("h1", title),
                                 server::message(fmt::format("1 row inserted into {}.{}.",
                                                             c0.db, c0.table))});
    }
    if (!ops::is_available(meta, *req.ctx.hooks, OperationKind::kInput, diags)) {
      throw Error(Errc::kOperationNotAvailable, fmt::format("input on {}.{}", c0.db, c0.table));
    }
    ops::FormOptions options{op_url(view, name), ops::file_columns_for(meta, req.ctx, diags),
                             ops::derived_columns_for(meta, req.ctx, diags), ""};
    std::vector<std::string> cols;
    for (const auto& c : view.columns) cols.push_back(c.column);
    const bool uploads = !options.file_columns.empty();
    std::vector<doc::Attribute> attrs{{"method", "post"},
                                      {"action", options.action},
                                      {"class", "op-input"},
                                      {"data-hdb-enhance", uploads ? "input-form upload-form"
                                                                   : "input-form"}};
    if (uploads) attrs.emplace_back("enctype", "multipart/form-data");
    auto form = el("form", std::move(attrs),
                   {el("table", {{"class", "fields"}},
                       {el("tbody", ops::input_rows(meta, cols, *req.ctx.hooks,
                                                    req.ctx.clock(), options, diags))}),
                    el("p", {el_text("button", "Insert", {{"type", "submit"}})})});
    return simple_page(title, {el_text("h1", title), std::move(form)});
  }

  if (op.kind == OperationKind::kQuery && !req.submitted) {
    std::vector<server::FilterField> fields;
    for (const auto& c : view.columns) {
      const auto* col = metas.get(c.db, c.table).find(c.column);
      fields.push_back({filter_key(c), c.table + "." + c.column,
                        col != nullptr ? col->type.display() : ""});
    }
    return simple_page(title, {el_text("h1", title),
                               server::filter_form(fields, op_url(view, name), "Query")});
  }

  const FormData empty;
  const auto stmt = gen_view_select(view, *req.ctx.pool, op.kind == OperationKind::kQuery
                                                             ? req.form
                                                             : empty,
                                    req.ctx.page_limit + 1);
  auto lease = req.ctx.pool->acquire(view.columns.front().db, auth::db_credentials(req.session));
  auto rows = lease->query(stmt.text, stmt.params);
  ops::ResultSet rs;
  for (const auto& c : view.columns) rs.columns.push_back(c.table + "." + c.column);
  rs.rows = std::move(rows.rows);
  if (rs.rows.size() > req.ctx.page_limit) {
    rs.rows.resize(req.ctx.page_limit);
    rs.truncated = true;
  }
  return simple_page(title, {el_text("h1", title),
                             server::result_table(rs, origins_of(view, req.ctx, metas, diags),
                                                  *req.ctx.hooks, req.files_url, diags)});
}

doc::Page run_batch(const DispatchRequest& req, const BatchInput& op, DiagnosticLog* diags) {
  const ViewDef& view = req.view;
  const std::string title = fmt::format("{} [{}]", view.name, op.name);
  const auto& target = op.per_row.front();
  if (req.submitted) {
    const auto n = batch_input(req.ctx, req.session, view, op, decode_batch(op, req.form), diags);
    return simple_page(title, {el_text("h1", title),
                               server::message(fmt::format("{} rows inserted into {}.{}.", n,
                                                           target.db, target.table))});
  }

  const TableMeta meta = req.ctx.pool->describe(target.db, target.table);
  const TimePoint now = req.ctx.clock();
  std::vector<std::string> shared_cols;
  for (const auto& c : op.shared) shared_cols.push_back(c.column);

  ops::FormOptions shared_opts;
  shared_opts.name_prefix = "shared.";
  std::vector<Node> body{el_text("h1", title)};
  std::vector<Node> form_children;
  if (!shared_cols.empty()) {
    form_children.push_back(el_text("h2", "Shared values"));
    form_children.push_back(
        el("table", {{"class", "fields"}},
           {el("tbody", ops::input_rows(meta, shared_cols, *req.ctx.hooks, now, shared_opts,
                                        diags))}));
  }

  std::vector<Node> head_cells{el_text("th", "#")};
  for (const auto& c : op.per_row) head_cells.push_back(el_text("th", c.column));
  std::vector<Node> grid_rows;
  for (std::size_t i = 1; i <= op.max_rows; ++i) {
    ops::FormOptions row_opts;
    row_opts.name_prefix = fmt::format("row{}.", i);
    std::vector<Node> cells{el_text("td", std::to_string(i))};
    for (const auto& c : op.per_row) {
      const auto* col = meta.find(c.column);
      if (col == nullptr) throw Error(Errc::kUnknownColumnInView, c.label());
      cells.push_back(
          el("td", {ops::column_control(meta, *col, *req.ctx.hooks, now, row_opts, diags)}));
    }
    grid_rows.push_back(el("tr", std::move(cells)));
  }
  form_children.push_back(el_text("h2", "Rows"));
  form_children.push_back(el("table", {{"class", "batch-rows"}},
                             {el("thead", {el("tr", std::move(head_cells))}),
                              el("tbody", std::move(grid_rows))}));
  form_children.push_back(el("p", {el_text("button", "Insert rows", {{"type", "submit"}})}));
  body.push_back(el("form",
                    {{"method", "post"},
                     {"action", op_url(view, op.name)},
                     {"class", "op-batch"},
                     {"data-hdb-enhance", "input-form"}},
                    std::move(form_children)));
  return simple_page(title, std::move(body));
}

doc::Page run_custom(const DispatchRequest& req, const Custom& op) {
  const auto* handler = req.ctx.hooks->handler(op.handler);
  if (handler == nullptr) throw Error(Errc::kUnregisteredHandler, op.handler);
  const hooks::PageRequest page_req{req.session, req.view,       req.form,
                                    *req.ctx.pool, *req.ctx.pool, req.files_url};
  try {
    return (*handler)(page_req);
  } catch (const std::exception& e) {
    throw Error(Errc::kHandlerFailure, fmt::format("{}/{}: {}", req.view.name, op.name, e.what()));
  }
}

}  // namespace

std::string view_op_name(const ViewOp& op) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Standard>) {
          return std::string(operation_name(o.kind));
        } else {
          return o.name;
        }
      },
      op);
}

const ViewOp* ViewDef::find_op(std::string_view op_name) const {
  for (const auto& op : ops) {
    if (view_op_name(op) == op_name) return &op;
  }
  return nullptr;
}

std::vector<std::string> stale_columns(const ViewDef& view, catalog::CatalogAccess& cat) {
  MetaCache metas(cat);
  std::vector<std::string> out;
  for (const auto& c : view.columns) {
    try {
      require_resolvable(metas, c);
    } catch (const Error& e) {
      if (e.code() != Errc::kUnknownColumnInView) throw;
      out.push_back(c.label());
    }
  }
  return out;
}

void ViewRegistry::register_view(ViewDef def, catalog::CatalogAccess& cat,
                                 const hooks::HookRegistry& hooks, DiagnosticLog* diags) {
  if (find(def.name) != nullptr) throw Error(Errc::kDuplicateViewName, def.name);
  if (def.columns.empty()) throw Error(Errc::kUnknownColumnInView, def.name + ": no columns");

  const auto tables = tables_of(def.columns);
  for (const auto& k : def.join_keys) {
    for (const auto* side : {&k.left, &k.right}) {
      if (table_index(tables, *side) == tables.size()) {
        throw Error(Errc::kUnknownColumnInView, side->label());
      }
    }
  }

  MetaCache metas(cat);
  try {
    for (const auto& c : def.columns) require_resolvable(metas, c);
    for (const auto& k : def.join_keys) {
      require_resolvable(metas, k.left);
      require_resolvable(metas, k.right);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::kDataSourceUnavailable) throw;
    note(diags, fmt::format("view {} not checked: {}", def.name, e.detail()));
  }

  std::set<std::string> op_names;
  for (const auto& op : def.ops) {
    validate_op(def, op, hooks);
    if (!op_names.insert(view_op_name(op)).second) {
      invalid_op(def, view_op_name(op), "duplicate operation name");
    }
  }
  views_.push_back(std::move(def));
}

const ViewDef* ViewRegistry::find(std::string_view name) const {
  for (const auto& v : views_) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

BatchSubmission decode_batch(const BatchInput& op, const FormData& form) {
  BatchSubmission out;
  for (const auto& c : op.shared) {
    if (const auto* v = form.field("shared." + c.column)) out.shared[c.column] = *v;
  }
  for (std::size_t i = 1; i <= op.max_rows; ++i) {
    BatchRow row{i, {}};
    bool blank = true;
    for (const auto& c : op.per_row) {
      const auto* v = form.field(fmt::format("row{}.{}", i, c.column));
      if (v == nullptr) continue;
      row.values[c.column] = *v;
      blank = blank && v->empty();
    }
    if (!blank) out.rows.push_back(std::move(row));
  }
  return out;
}

std::size_t batch_input(const ops::OpsContext& ctx, const auth::Session& session,
                        const ViewDef& view, const BatchInput& op, const BatchSubmission& batch,
                        DiagnosticLog* diags) {
  if (batch.rows.empty()) throw Error(Errc::kEmptyBatch, view.name);
  if (batch.rows.size() > op.max_rows) {
    throw Error(Errc::kInvalidValue,
                fmt::format("{} rows exceed the limit of {}", batch.rows.size(), op.max_rows));
  }
  const auto& target = op.per_row.front();
  const TableMeta meta = ctx.pool->describe(target.db, target.table);
  if (!ops::is_available(meta, *ctx.hooks, OperationKind::kInput, diags)) {
    throw Error(Errc::kOperationNotAvailable,
                fmt::format("input on {}.{}", target.db, target.table));
  }

  auto allowed = [](const std::vector<ColumnRef>& refs, std::string_view column) {
    return std::any_of(refs.begin(), refs.end(),
                       [column](const ColumnRef& r) { return r.column == column; });
  };

  auto lease = ctx.pool->acquire(target.db, auth::db_credentials(session));
  catalog::Connection& conn = *lease;
  const bool audit_here = ctx.audit && ctx.audit->db == target.db;
  std::vector<ops::AuditRecord> audits;
  catalog::Connection::Transaction txn(conn);
  for (const auto& row : batch.rows) {
    try {
      sql::Assignments assigns;
      for (const auto& [column, text] : batch.shared) {
        if (!allowed(op.shared, column)) throw Error(Errc::kUnknownColumnInView, column);
        const auto* col = meta.find(column);
        if (col == nullptr) throw Error(Errc::kUnknownColumnInView, column);
        assigns[column] = ops::field_value(*col, text);
      }
      for (const auto& [column, text] : row.values) {
        if (!allowed(op.per_row, column)) throw Error(Errc::kUnknownColumnInView, column);
        const auto* col = meta.find(column);
        if (col == nullptr) throw Error(Errc::kUnknownColumnInView, column);
        assigns[column] = ops::field_value(*col, text);
      }
      const auto stmt = ops::insert_row(conn, meta, assigns);
      audits.push_back(ops::make_audit(ctx, session, target.db, target.table,
                                       OperationKind::kInput, stmt));
    } catch (const std::exception& e) {
      throw Error(Errc::kRowInvalid, fmt::format("row {}: {}", row.index, e.what()));
    }
  }
  if (audit_here) {
    for (const auto& rec : audits) ops::record_audit(conn, *ctx.audit, rec, diags);
  }
  txn.commit();
  if (ctx.audit && !audit_here) ops::audit_elsewhere(ctx, audits, diags);
  return batch.rows.size();
}

sql::SqlStatement gen_view_select(const ViewDef& view, catalog::CatalogAccess& cat,
                                  const FormData& filter_form, std::size_t limit) {
  MetaCache metas(cat);
  const auto tables = tables_of(view.columns);
  auto alias = [&](const ColumnRef& c) { return fmt::format("t{}", table_index(tables, c)); };
  auto qualified = [&](const ColumnRef& c) {
    return fmt::format("{}.{}", alias(c), sql::quote_identifier(c.column));
  };

  sql::SqlStatement stmt;
  std::string list;
  for (const auto& c : view.columns) {
    if (!list.empty()) list += ", ";
    list += qualified(c);
  }
  stmt.text = fmt::format("SELECT {} FROM {} AS t0", list,
                          sql::quote_identifier(tables.front().table));

  std::vector<bool> joined(tables.size(), false);
  joined[0] = true;
  for (std::size_t added = 1; added < tables.size();) {
    bool progress = false;
    for (std::size_t i = 1; i < tables.size(); ++i) {
      if (joined[i]) continue;
      std::vector<std::string> on;
      for (const auto& k : view.join_keys) {
        const auto l = table_index(tables, k.left);
        const auto r = table_index(tables, k.right);
        if ((l == i && joined[r]) || (r == i && joined[l])) {
          on.push_back(fmt::format("{} = {}", qualified(k.left), qualified(k.right)));
        }
      }
      if (on.empty()) continue;
      std::string cond;
      for (const auto& o : on) cond += (cond.empty() ? "" : " AND ") + o;
      stmt.text += fmt::format(" JOIN {} AS t{} ON {}", sql::quote_identifier(tables[i].table),
                               i, cond);
      joined[i] = true;
      ++added;
      progress = true;
    }
    if (!progress) throw Error(Errc::kInvalidViewOp, view.name + ": tables not joinable");
  }

  std::vector<std::string> where;
  for (const auto& [key, text] : filter_form.fields) {
    if (key.substr(0, kWherePrefix.size()) != kWherePrefix) continue;
    const std::string rest = key.substr(kWherePrefix.size());
    const ColumnRef* ref = nullptr;
    bool is_op = false;
    for (const auto& c : view.columns) {
      if (filter_key(c) == rest) ref = &c;
      if (filter_key(c) + std::string(kOpSuffix) == rest) is_op = true;
    }
    if (is_op) continue;
    if (ref == nullptr) throw Error(Errc::kUnknownColumnInView, rest);
    if (text.empty()) continue;
    sql::Relation rel = sql::Relation::kEq;
    if (const auto* op = filter_form.field(key + std::string(kOpSuffix))) {
      const auto parsed = sql::parse_relation(*op);
      if (!parsed) throw Error(Errc::kInvalidValue, fmt::format("unknown relation '{}'", *op));
      rel = *parsed;
    }
    const auto* col = metas.get(ref->db, ref->table).find(ref->column);
    if (col == nullptr) throw Error(Errc::kUnknownColumnInView, ref->label());
    where.push_back(fmt::format("{} {} ?", qualified(*ref), sql::relation_symbol(rel)));
    stmt.params.push_back(rel == sql::Relation::kLike ? catalog::Value{text}
                                                      : sql::convert_value(*col, text));
  }
  for (std::size_t i = 0; i < where.size(); ++i) {
    stmt.text += (i == 0 ? " WHERE " : " AND ") + where[i];
  }
  stmt.text += " LIMIT ?";
  stmt.params.push_back(static_cast<std::int64_t>(limit));
  return stmt;
}

doc::Page dispatch_view_op(const DispatchRequest& req, DiagnosticLog* diags) {
  const ViewOp* op = req.view.find_op(req.op_name);
  if (op == nullptr) {
    throw Error(Errc::kNoSuchViewOp, fmt::format("{}/{}", req.view.name, req.op_name));
  }
  const auto stale = stale_columns(req.view, *req.ctx.pool);
  if (!stale.empty()) {
    std::string cols;
    for (const auto& s : stale) cols += (cols.empty() ? "" : ", ") + s;
    note(diags, fmt::format("stale_view({}): {}", req.view.name, cols));
    return simple_page(req.view.name,
                       {el_text("h1", req.view.name),
                        server::message("This view refers to columns that no longer exist.")});
  }
  if (const auto* s = std::get_if<Standard>(op)) return run_standard(req, *s, diags);
  if (const auto* b = std::get_if<BatchInput>(op)) return run_batch(req, *b, diags);
  return run_custom(req, std::get<Custom>(*op));
}

}  // namespace hdb::views
