#pragma once

// Named objects spanning several tables or several rows, declared in site
// code. A view lists the columns it shows, the equality pairs joining its
// tables and the operations it offers.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hdb/auth.hpp"
#include "hdb/catalog.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/operation.hpp"
#include "hdb/ops.hpp"

namespace hdb::views {

struct ColumnRef {
  std::string db;
  std::string table;
  std::string column;

  bool same_table(const ColumnRef& o) const { return db == o.db && table == o.table; }
  std::string label() const { return db + "." + table + "." + column; }
  bool operator==(const ColumnRef&) const = default;
};

struct JoinKey {
  ColumnRef left;
  ColumnRef right;
};

inline constexpr std::size_t kDefaultBatchRows = 24;

/// input (single-table views), query or all over the view's columns.
struct Standard {
  OperationKind kind = OperationKind::kAll;
};

/// Several rows of one table entered in one form; `shared` values are
/// copied into every row.
struct BatchInput {
  std::vector<ColumnRef> shared;
  std::vector<ColumnRef> per_row;
  std::size_t max_rows = kDefaultBatchRows;
  std::string name = "input";
};

/// A page produced by a named handler registered in the hook registry.
struct Custom {
  std::string name;
  std::string handler;
};

using ViewOp = std::variant<Standard, BatchInput, Custom>;

std::string view_op_name(const ViewOp& op);

struct ViewDef {
  std::string name;
  std::vector<ColumnRef> columns;
  std::vector<JoinKey> join_keys;
  std::vector<ViewOp> ops;

  const ViewOp* find_op(std::string_view op_name) const;
};

/// Column references that no longer resolve against the catalog.
std::vector<std::string> stale_columns(const ViewDef& view, catalog::CatalogAccess& cat);

class ViewRegistry {
 public:
  /// Validates eagerly. Throws UnknownColumnInView, DuplicateViewName,
  /// UnregisteredHandler or InvalidViewOp. Views over an unreachable source
  /// are accepted with a diagnostic and checked again when served.
  void register_view(ViewDef def, catalog::CatalogAccess& cat, const hooks::HookRegistry& hooks,
                     DiagnosticLog* diags = nullptr);

  const ViewDef* find(std::string_view name) const;
  const std::vector<ViewDef>& views() const { return views_; }

 private:
  std::vector<ViewDef> views_;
};

struct BatchRow {
  /// 1-based position in the form.
  std::size_t index = 0;
  std::map<std::string, std::string, std::less<>> values;
};

struct BatchSubmission {
  std::map<std::string, std::string, std::less<>> shared;
  std::vector<BatchRow> rows;
};

/// Reads `shared.<column>` and `row<i>.<column>` fields; rows whose per-row
/// fields are all blank are skipped.
BatchSubmission decode_batch(const BatchInput& op, const FormData& form);

/// Inserts every row in one transaction with one audit record per row.
/// Throws EmptyBatch, or RowInvalid naming the failing row, in which case
/// nothing is stored.
std::size_t batch_input(const ops::OpsContext& ctx, const auth::Session& session,
                        const ViewDef& view, const BatchInput& op, const BatchSubmission& batch,
                        DiagnosticLog* diags = nullptr);

/// Join query over the view's columns for the standard query/all ops.
sql::SqlStatement gen_view_select(const ViewDef& view, catalog::CatalogAccess& cat,
                                  const FormData& filter_form, std::size_t limit);

struct DispatchRequest {
  const ops::OpsContext& ctx;
  const auth::Session& session;
  const ViewDef& view;
  std::string_view op_name;
  /// False for the initial GET showing a form.
  bool submitted = false;
  const FormData& form;
  std::string_view files_url = "/files/";
};

/// Page content for one view operation. Throws NoSuchViewOp, and
/// HandlerFailure when a custom handler throws.
doc::Page dispatch_view_op(const DispatchRequest& req, DiagnosticLog* diags = nullptr);

}  // namespace hdb::views
