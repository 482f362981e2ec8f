#pragma once

// Page builders. Each returns a Page whose body holds the page's own
// content; decorate() adds the shared chrome (stylesheet and script,
// navigation, pending diagnostics).

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hdb/auth.hpp"
#include "hdb/catalog.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/operation.hpp"
#include "hdb/ops.hpp"

namespace hdb::server {

inline constexpr std::string_view kScriptUrl = "/static/hdb.js";
inline constexpr std::string_view kStyleUrl = "/static/hdb.css";
inline constexpr std::string_view kFilesUrl = "/files/";

std::string database_url(std::string_view db);
std::string table_url(std::string_view db, std::string_view table);
std::string table_op_url(std::string_view db, std::string_view table, OperationKind kind);
std::string view_page_url(std::string_view view);
std::string view_op_url(std::string_view view, std::string_view op);
std::string file_url(std::string_view files_url, std::string_view stored_path);

struct Chrome {
  std::string site_title;
  bool authenticated = false;
  std::vector<std::string> diagnostics;
};

/// Adds the stylesheet, the enhancement script, the navigation block (when
/// authenticated) and the diagnostics block ahead of the page content.
doc::Page decorate(doc::Page content, const Chrome& chrome);

doc::Node message(std::string text, std::string css_class = "message");

/// Where a result column comes from, for output-link hooks and file links.
struct ColumnOrigin {
  std::string db;
  std::string table;
  std::string column;
  bool file_link = false;
};

doc::Node result_table(const ops::ResultSet& rs, const std::vector<ColumnOrigin>& origins,
                       const hooks::HookRegistry& hooks, std::string_view files_url,
                       DiagnosticLog* diags);

struct FilterField {
  /// Field name after "where.".
  std::string key;
  std::string label;
  std::string type_label;
};

doc::Node filter_form(const std::vector<FilterField>& fields, std::string action,
                      std::string submit_label, std::vector<doc::Attribute> hidden = {},
                      std::string_view enhance = {});

std::vector<FilterField> filter_fields(const catalog::TableMeta& meta);

/// Hidden inputs echoing every `where.*` field of `form`.
std::vector<doc::Attribute> echo_filter(const FormData& form);

doc::Node op_links(std::string_view db, std::string_view table,
                   const std::vector<OperationKind>& ops);

doc::Page login_page(std::string_view site_title, std::string_view notice,
                     std::string_view next);

struct DatabaseListing {
  std::string name;
  bool available = true;
};

struct ViewListing {
  std::string name;
  std::vector<std::string> ops;
};

doc::Page home_page(std::string_view site_title, const std::vector<DatabaseListing>& databases,
                    const std::vector<ViewListing>& views);

struct TableListing {
  std::string name;
  std::vector<OperationKind> ops;
};

doc::Page database_page(std::string_view db, const std::vector<TableListing>& tables);

doc::Page table_page(const catalog::TableMeta& meta, std::uint64_t rows,
                     const std::vector<OperationKind>& ops);

doc::Page view_page(std::string_view name, const std::vector<std::string>& columns,
                    const std::vector<std::string>& ops);

doc::Page profile_view(const auth::Session& session, const auth::ServerMeta& meta);

/// Update assignment form; `current` pre-fills the controls when one row
/// matched.
doc::Node update_form(const catalog::TableMeta& meta, const std::vector<catalog::Value>* current,
                      const FormData& filter, std::string action);

doc::Page error_page(int status, std::string_view heading, std::string_view detail);

}  // namespace hdb::server
