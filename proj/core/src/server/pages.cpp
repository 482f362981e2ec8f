#include "hdb/server/pages.hpp"

#include <fmt/format.h>

#include "hdb/server/http.hpp"

namespace hdb::server {
namespace {

using doc::el;
using doc::el_text;
using doc::link;
using doc::Node;

Node hidden(const std::string& name, const std::string& value) {
  return el("input", {{"type", "hidden"}, {"name", name}, {"value", value}});
}

Node header_row(const std::vector<std::string>& labels) {
  std::vector<Node> cells;
  for (const auto& l : labels) cells.push_back(el_text("th", l));
  return el("thead", {el("tr", std::move(cells))});
}

Node relation_select(const std::string& name) {
  std::vector<Node> options;
  for (auto r : {sql::Relation::kEq, sql::Relation::kNe, sql::Relation::kLt, sql::Relation::kLe,
                 sql::Relation::kGt, sql::Relation::kGe, sql::Relation::kLike}) {
    options.push_back(el_text("option", std::string(sql::relation_symbol(r)),
                              {{"value", std::string(sql::relation_name(r))}}));
  }
  return el("select", {{"name", name}}, std::move(options));
}

}  // namespace

std::string database_url(std::string_view db) { return "/db/" + url_encode(db); }

std::string table_url(std::string_view db, std::string_view table) {
  return database_url(db) + "/table/" + url_encode(table);
}

std::string table_op_url(std::string_view db, std::string_view table, OperationKind kind) {
  return table_url(db, table) + "/op/" + std::string(operation_name(kind));
}

std::string view_page_url(std::string_view view) { return "/view/" + url_encode(view); }

std::string view_op_url(std::string_view view, std::string_view op) {
  return view_page_url(view) + "/op/" + url_encode(op);
}

std::string file_url(std::string_view files_url, std::string_view stored_path) {
  std::string out(files_url);
  std::string_view rest = stored_path;
  bool first = true;
  while (true) {
    const auto slash = rest.find('/');
    if (!first) out += '/';
    out += url_encode(rest.substr(0, slash));
    first = false;
    if (slash == std::string_view::npos) break;
    rest.remove_prefix(slash + 1);
  }
  return out;
}

doc::Page decorate(doc::Page content, const Chrome& chrome) {
  doc::Page page;
  page.title = content.title.empty() ? chrome.site_title
                                     : fmt::format("{} - {}", content.title, chrome.site_title);
  page.head_extra.push_back(
      el("link", {{"rel", "stylesheet"}, {"href", std::string(kStyleUrl)}}));
  page.head_extra.push_back(el("script", {{"src", std::string(kScriptUrl)}, {"defer", "defer"}}));
  for (auto& n : content.head_extra) page.head_extra.push_back(std::move(n));

  std::vector<Node> top{el_text("span", chrome.site_title, {{"class", "site-title"}})};
  if (chrome.authenticated) {
    top.push_back(el("nav", {{"class", "session-nav"}},
                     {link("/home", "home", {{"class", "nav-home"}}), doc::text(" "),
                      link("/profile", "profile", {{"class", "nav-profile"}}), doc::text(" "),
                      link("/logout", "log-out", {{"class", "nav-logout"}})}));
  }
  page.body.push_back(el("header", {{"class", "top"}}, std::move(top)));
  if (!chrome.diagnostics.empty()) {
    std::vector<Node> items;
    for (const auto& d : chrome.diagnostics) items.push_back(el_text("li", d));
    page.body.push_back(el("div", {{"class", "diagnostics"}, {"role", "alert"}},
                           {el("ul", std::move(items))}));
  }
  page.body.push_back(el("main", std::move(content.body)));
  return page;
}

Node message(std::string text, std::string css_class) {
  return el_text("p", std::move(text), {{"class", std::move(css_class)}});
}

Node result_table(const ops::ResultSet& rs, const std::vector<ColumnOrigin>& origins,
                  const hooks::HookRegistry& hooks, std::string_view files_url,
                  DiagnosticLog* diags) {
  std::vector<Node> rows;
  for (const auto& r : rs.rows) {
    std::vector<Node> cells;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const auto& v = r[i];
      if (catalog::is_null(v)) {
        cells.push_back(el("td", {{"class", "null"}}));
        continue;
      }
      const std::string shown = catalog::display(v);
      if (i < origins.size()) {
        const auto& o = origins[i];
        if (auto url = hooks.linkify(o.db, o.table, o.column, shown, diags)) {
          cells.push_back(el("td", {link(*url, shown)}));
          continue;
        }
        if (o.file_link && !shown.empty()) {
          cells.push_back(el("td", {link(file_url(files_url, shown), shown)}));
          continue;
        }
      }
      cells.push_back(el_text("td", shown));
    }
    rows.push_back(el("tr", std::move(cells)));
  }
  std::vector<Node> out;
  out.push_back(message(fmt::format("{} rows.", rs.rows.size()), "row-count"));
  out.push_back(el("table", {{"class", "results"}, {"data-hdb-enhance", "result-table"}},
                   {header_row(rs.columns), el("tbody", std::move(rows))}));
  if (rs.truncated) {
    out.push_back(message(fmt::format("Only the first {} rows are shown.", rs.rows.size()),
                          "notice truncated"));
  }
  return el("div", {{"class", "result-set"}}, std::move(out));
}

std::vector<FilterField> filter_fields(const catalog::TableMeta& meta) {
  std::vector<FilterField> out;
  for (const auto& c : meta.columns) out.push_back({c.name, c.name, c.type.display()});
  return out;
}

Node filter_form(const std::vector<FilterField>& fields, std::string action,
                 std::string submit_label, std::vector<doc::Attribute> hidden_fields,
                 std::string_view enhance) {
  std::vector<Node> rows;
  for (const auto& f : fields) {
    const std::string name = "where." + f.key;
    const std::string id = "w-" + f.key;
    rows.push_back(el("tr", {el("th", {el_text("label", f.label, {{"for", id}})}),
                             el("td", {relation_select(name + ".op")}),
                             el("td", {el("input", {{"type", "text"}, {"name", name}, {"id", id}})}),
                             el_text("td", f.type_label, {{"class", "type"}})}));
  }
  std::vector<Node> children;
  for (const auto& [n, v] : hidden_fields) children.push_back(hidden(n, v));
  children.push_back(el("table", {{"class", "filter"}},
                        {header_row({"Column", "Relation", "Value", "Type"}),
                         el("tbody", std::move(rows))}));
  children.push_back(el("p", {el_text("button", std::move(submit_label), {{"type", "submit"}})}));
  std::vector<doc::Attribute> attrs{{"method", "post"}, {"action", std::move(action)},
                                    {"class", "op-filter"}};
  if (!enhance.empty()) attrs.emplace_back("data-hdb-enhance", std::string(enhance));
  return el("form", std::move(attrs), std::move(children));
}

std::vector<doc::Attribute> echo_filter(const FormData& form) {
  std::vector<doc::Attribute> out;
  for (const auto& [k, v] : form.fields) {
    if (k.rfind("where.", 0) == 0) out.emplace_back(k, v);
  }
  return out;
}

Node op_links(std::string_view db, std::string_view table,
              const std::vector<OperationKind>& ops) {
  std::vector<Node> links;
  for (OperationKind k : ops) {
    if (!links.empty()) links.push_back(doc::text(" "));
    links.push_back(link(table_op_url(db, table, k), fmt::format("[{}]", operation_name(k)),
                         {{"class", "op"}}));
  }
  return el("span", {{"class", "ops"}}, std::move(links));
}

doc::Page login_page(std::string_view site_title, std::string_view notice,
                     std::string_view next) {
  std::vector<Node> form_children;
  if (!next.empty()) form_children.push_back(hidden("next", std::string(next)));
  form_children.push_back(el(
      "table", {{"class", "login"}},
      {el("tbody",
          {el("tr", {el("th", {el_text("label", "User", {{"for", "login-user"}})}),
                     el("td", {el("input", {{"type", "text"}, {"name", "user"}, {"id", "login-user"}})})}),
           el("tr", {el("th", {el_text("label", "Password", {{"for", "login-password"}})}),
                     el("td", {el("input", {{"type", "password"},
                                            {"name", "password"},
                                            {"id", "login-password"}})})})})}));
  form_children.push_back(el("p", {el_text("button", "Log in", {{"type", "submit"}})}));

  std::vector<Node> body{el_text("h1", fmt::format("{}: log in", site_title))};
  if (!notice.empty()) body.push_back(message(std::string(notice), "notice"));
  body.push_back(el("form", {{"method", "post"}, {"action", "/login"}, {"class", "login"}},
                    std::move(form_children)));
  return doc::Page{"Log in", {}, std::move(body)};
}

doc::Page home_page(std::string_view site_title, const std::vector<DatabaseListing>& databases,
                    const std::vector<ViewListing>& views) {
  std::vector<Node> body{el_text("h1", std::string(site_title))};
  std::vector<Node> db_items;
  for (const auto& d : databases) {
    std::vector<Node> item{link(database_url(d.name), d.name, {{"class", "database"}})};
    if (!d.available) item.push_back(el_text("span", " (unavailable)", {{"class", "unavailable"}}));
    db_items.push_back(el("li", std::move(item)));
  }
  body.push_back(el("section", {{"class", "databases"}},
                    {el_text("h2", "Databases"), el("ul", std::move(db_items))}));
  if (!views.empty()) {
    std::vector<Node> view_items;
    for (const auto& v : views) {
      std::vector<Node> item{link(view_page_url(v.name), v.name, {{"class", "view"}})};
      for (const auto& op : v.ops) {
        item.push_back(doc::text(" "));
        item.push_back(link(view_op_url(v.name, op), fmt::format("[{}]", op), {{"class", "op"}}));
      }
      view_items.push_back(el("li", std::move(item)));
    }
    body.push_back(el("section", {{"class", "views"}},
                      {el_text("h2", "Views"), el("ul", std::move(view_items))}));
  }
  return doc::Page{"Home", {}, std::move(body)};
}

doc::Page database_page(std::string_view db, const std::vector<TableListing>& tables) {
  std::vector<Node> rows;
  for (const auto& t : tables) {
    rows.push_back(el("tr", {el("td", {link(table_url(db, t.name), t.name, {{"class", "table"}})}),
                             el("td", {op_links(db, t.name, t.ops)})}));
  }
  return doc::Page{std::string(db),
                   {},
                   {el_text("h1", std::string(db)),
                    el("table", {{"class", "tables"}},
                       {header_row({"Table", "Operations"}), el("tbody", std::move(rows))})}};
}

doc::Page table_page(const catalog::TableMeta& meta, std::uint64_t rows,
                     const std::vector<OperationKind>& ops) {
  std::vector<Node> grid;
  for (const auto& c : meta.columns) {
    grid.push_back(el("tr", {el_text("td", c.name), el_text("td", c.type.display()),
                             el_text("td", c.nullable ? "YES" : "NO"),
                             el_text("td", std::string(catalog::key_label(c.key))),
                             el_text("td", c.default_value.value_or("")),
                             el_text("td", c.auto_increment ? "autoinc" : "")}));
  }
  const std::string name = fmt::format("{}.{}", meta.db, meta.name);
  return doc::Page{
      name,
      {},
      {el_text("h1", name), message(fmt::format("{} has {} rows.", name, rows), "row-count"),
       el("p", {op_links(meta.db, meta.name, ops)}), el_text("h2", "Table columns:"),
       el("table", {{"class", "columns"}},
          {header_row({"Name", "Defn. Type", "Null", "Key", "Def", "Extra"}),
           el("tbody", std::move(grid))})}};
}

doc::Page view_page(std::string_view name, const std::vector<std::string>& columns,
                    const std::vector<std::string>& ops) {
  std::vector<Node> items;
  for (const auto& c : columns) items.push_back(el_text("li", c));
  std::vector<Node> links;
  for (const auto& op : ops) {
    if (!links.empty()) links.push_back(doc::text(" "));
    links.push_back(link(view_op_url(name, op), fmt::format("[{}]", op), {{"class", "op"}}));
  }
  return doc::Page{std::string(name),
                   {},
                   {el_text("h1", std::string(name)), el("p", {el("span", {{"class", "ops"}}, std::move(links))}),
                    el_text("h2", "Columns"), el("ul", {{"class", "view-columns"}}, std::move(items))}};
}

doc::Page profile_view(const auth::Session& session, const auth::ServerMeta& meta) {
  return doc::Page{"Profile", {}, {auth::profile_page(session, meta)}};
}

Node update_form(const catalog::TableMeta& meta, const std::vector<catalog::Value>* current,
                 const FormData& filter, std::string action) {
  std::vector<Node> children;
  for (const auto& [n, v] : echo_filter(filter)) children.push_back(hidden(n, v));
  children.push_back(hidden("_step", "apply"));
  std::vector<Node> rows;
  for (std::size_t i = 0; i < meta.columns.size(); ++i) {
    const auto& c = meta.columns[i];
    if (c.auto_increment) continue;
    const std::string id = "u-" + c.name;
    std::optional<std::string> value;
    if (current != nullptr && i < current->size() && !catalog::is_null((*current)[i])) {
      value = catalog::display((*current)[i]);
    }
    Node control = el("input", std::vector<doc::Attribute>{});
    if (c.type.base == catalog::BaseType::kEnum && c.type.enum_values) {
      std::vector<Node> options{el_text("option", "(unchanged)", {{"value", ""}})};
      for (const auto& ev : *c.type.enum_values) {
        std::vector<doc::Attribute> oa{{"value", ev}};
        if (value && *value == ev) oa.emplace_back("selected", "selected");
        options.push_back(el_text("option", ev, std::move(oa)));
      }
      control = el("select", {{"name", c.name}, {"id", id}}, std::move(options));
    } else {
      std::vector<doc::Attribute> attrs{{"type", "text"}, {"name", c.name}, {"id", id}};
      if (value) attrs.emplace_back("value", *value);
      control = el("input", std::move(attrs));
    }
    std::vector<Node> null_cell;
    if (c.nullable) {
      null_cell.push_back(el("input", {{"type", "checkbox"}, {"name", "null." + c.name}, {"value", "1"}}));
      null_cell.push_back(doc::text(" NULL"));
    }
    rows.push_back(el("tr", {el("th", {el_text("label", c.name, {{"for", id}})}),
                             el("td", {std::move(control)}), el("td", std::move(null_cell)),
                             el_text("td", c.type.display(), {{"class", "type"}})}));
  }
  children.push_back(el("table", {{"class", "fields"}},
                        {header_row({"Column", "New value", "Clear", "Type"}),
                         el("tbody", std::move(rows))}));
  children.push_back(el("p", {el_text("button", "Update", {{"type", "submit"}})}));
  return el("form", {{"method", "post"}, {"action", std::move(action)}, {"class", "op-update"}},
            std::move(children));
}

doc::Page error_page(int status, std::string_view heading, std::string_view detail) {
  return doc::Page{std::string(heading),
                   {},
                   {el_text("h1", fmt::format("{} {}", status, heading)),
                    message(std::string(detail), "error-detail")}};
}

}  // namespace hdb::server
