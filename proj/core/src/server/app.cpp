#include "hdb/server/app.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hdb/server/pages.hpp"

namespace hdb::server {
namespace {

constexpr std::string_view kIpWindowFile = "ip_window.tsv";

std::filesystem::path ip_window_path(const ServerConfig& cfg) {
  if (!std::holds_alternative<auth::IpWindow>(cfg.auth_mode) || cfg.state_dir.empty()) return {};
  return cfg.state_dir / kIpWindowFile;
}

Response redirect(std::string location, int status = 303) {
  Response res;
  res.status = status;
  res.headers.emplace_back("Location", std::move(location));
  return res;
}

int status_for(Errc code) {
  switch (code) {
    case Errc::kNotFound:
    case Errc::kNoSuchTable:
    case Errc::kNoSuchViewOp:
      return 404;
    case Errc::kOperationNotAvailable:
    case Errc::kReadOnlyTable:
      return 403;
    case Errc::kUploadTooLarge:
      return 413;
    case Errc::kDataSourceUnavailable:
    case Errc::kConnectionLost:
      return 503;
    case Errc::kDiskFull:
      return 507;
    case Errc::kEngineError:
    case Errc::kHandlerFailure:
    case Errc::kSpawnFailure:
    case Errc::kInvalidConfig:
    case Errc::kUnregisteredHandler:
      return 500;
    default:
      return 400;
  }
}

bool is_safe_segment(std::string_view s) {
  return !s.empty() && s.front() != '.' && s.find('\0') == std::string_view::npos &&
         s.find('\\') == std::string_view::npos;
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) return std::nullopt;
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string join(const std::vector<std::string>& segs, std::size_t from, char sep = '/') {
  std::string out;
  for (std::size_t i = from; i < segs.size(); ++i) {
    if (i > from) out += sep;
    out += segs[i];
  }
  return out;
}

}  // namespace

struct App::Call {
  const Request& req;
  std::vector<std::string> segs;
  std::optional<auth::Session> session;
  DiagnosticLog log;
  std::optional<FormData> form_cache;

  bool post() const { return req.method == "POST"; }
  const FormData& form() {
    if (!form_cache) form_cache = parse_form(req);
    return *form_cache;
  }
};

App::App(ServerConfig cfg, hooks::HookRegistry hooks, Clock clock)
    : cfg_(std::move(cfg)),
      hooks_(std::move(hooks)),
      clock_(std::move(clock)),
      pool_(cfg_.sources, cfg_.pool_size),
      sessions_(cfg_.auth_mode, cfg_.users, ip_window_path(cfg_)),
      uploads_(cfg_.upload_root, cfg_.upload_cap) {}

ops::OpsContext App::ops_context() {
  ops::OpsContext ctx;
  ctx.pool = &pool_;
  ctx.hooks = &hooks_;
  ctx.audit = cfg_.audit_table;
  ctx.page_limit = cfg_.page_limit;
  ctx.clock = clock_;
  ctx.uploads = &uploads_;
  ctx.file_columns = cfg_.file_columns;
  return ctx;
}

void App::register_view(views::ViewDef def) {
  DiagnosticLog log;
  views_.register_view(std::move(def), pool_, hooks_, &log);
  const std::lock_guard lock(startup_mu_);
  for (auto& m : log.take()) startup_diagnostics_.push_back(std::move(m));
}

std::vector<std::string> App::probe_sources() {
  std::vector<std::string> out;
  for (const auto& src : pool_.sources()) {
    try {
      auto lease = pool_.acquire_admin(src.name);
    } catch (const Error& e) {
      out.push_back(e.code() == Errc::kDataSourceUnavailable ? e.detail()
                                                             : catalog::unavailable_message(src));
    }
  }
  return out;
}

Response App::handle(const Request& req) {
  Call call{req, {}, std::nullopt, {}, std::nullopt};
  Response res;
  try {
    call.segs = split_path(req.path);
    res = dispatch(call);
  } catch (const Error& e) {
    res = error_response(call, e);
  } catch (const std::exception& e) {
    res = error_response(call, Error(Errc::kEngineError, e.what()));
  }
  return res;
}

Response App::dispatch(Call& call) {
  const auto& segs = call.segs;
  if (call.req.method != "GET" && call.req.method != "POST" && call.req.method != "HEAD") {
    Response res = page(call, error_page(405, "Method Not Allowed", call.req.method), 405);
    res.headers.emplace_back("Allow", "GET, POST");
    return res;
  }
  if (!segs.empty() && segs[0] == "static") return serve_static(call, segs);
  if (segs.size() == 1 && segs[0] == "login") return serve_login(call);

  const auto now = clock_();
  call.session = sessions_.validate(call.req.peer, call.req.cookie(kSessionCookie).value_or(""),
                                    now);
  if (!call.session) {
    if (segs.size() == 1 && segs[0] == "logout") return redirect("/login");
    std::string next = call.req.path;
    if (!call.req.query.empty()) next += "?" + call.req.query;
    Response res = segs.empty() ? redirect("/login") : redirect("/login?next=" + url_encode(next));
    const Chrome chrome{cfg_.title, false, {}};
    return render(call,
                  decorate(login_page(cfg_.title, "Please log in to continue.",
                                      segs.empty() ? "" : next),
                           chrome),
                  std::move(res));
  }
  return route_authenticated(call);
}

Response App::route_authenticated(Call& call) {
  const auto& s = call.segs;
  if (s.empty()) return redirect("/home");
  if (s.size() == 1) {
    if (s[0] == "home") return serve_home(call);
    if (s[0] == "logout") return serve_logout(call);
    if (s[0] == "profile") {
      const auth::ServerMeta meta{cfg_.title, std::string(version()), cfg_.server_name, cfg_.port};
      return page(call, profile_view(*call.session, meta));
    }
  }
  if (s[0] == "files" && s.size() >= 2) return serve_file(call, s);
  if (s[0] == "db") {
    if (s.size() == 2) return serve_database(call, s[1]);
    if (s.size() == 4 && s[2] == "table") return serve_table(call, s[1], s[3]);
    if (s.size() == 6 && s[2] == "table" && s[4] == "op") {
      return serve_table_op(call, s[1], s[3], s[5]);
    }
  }
  if (s[0] == "view") {
    if (s.size() == 2) return serve_view(call, s[1]);
    if (s.size() == 4 && s[2] == "op") return serve_view_op(call, s[1], s[3]);
  }
  throw Error(Errc::kNotFound, call.req.path);
}

Response App::serve_login(Call& call) {
  const auto& form = call.form();
  const auto* next_field = form.field("next");
  std::string next = next_field != nullptr ? *next_field : "";
  // Only local absolute paths are followed.
  if (next.empty() || next.front() != '/' || next.rfind("//", 0) == 0) next = "/home";

  if (!call.post()) {
    const auto now = clock_();
    if (sessions_.validate(call.req.peer, call.req.cookie(kSessionCookie).value_or(""), now)) {
      return redirect(next);
    }
    const auto* raw_next = form.field("next");
    return page(call, login_page(cfg_.title, "", raw_next != nullptr ? *raw_next : ""));
  }

  const auto* user = form.field("user");
  const auto* password = form.field("password");
  try {
    if (user == nullptr || password == nullptr) {
      throw Error(Errc::kInvalidCredentials, "invalid user name or password");
    }
    const auto now = clock_();
    auto session = sessions_.login(*user, *password, call.req.peer, now);
    auto messages = probe_sources();
    {
      const std::lock_guard lock(startup_mu_);
      for (auto& m : startup_diagnostics_) messages.push_back(std::move(m));
      startup_diagnostics_.clear();
    }
    diagnostics_.push_all(session.id, messages, now);
    Response res = redirect(next);
    res.headers.emplace_back(
        "Set-Cookie",
        fmt::format("{}={}; Path=/; HttpOnly; SameSite=Lax", kSessionCookie, session.id));
    return res;
  } catch (const Error& e) {
    if (e.code() != Errc::kInvalidCredentials) throw;
    const auto* raw_next = form.field("next");
    return page(call,
                login_page(cfg_.title, e.detail(), raw_next != nullptr ? *raw_next : ""), 401);
  }
}

Response App::serve_logout(Call& call) {
  sessions_.logout(call.session->id);
  diagnostics_.forget(call.session->id);
  Response res = redirect("/login");
  res.headers.emplace_back("Set-Cookie",
                           fmt::format("{}=; Path=/; Max-Age=0; HttpOnly; SameSite=Lax",
                                       kSessionCookie));
  return res;
}

Response App::serve_static(Call& call, const std::vector<std::string>& segs) {
  if (cfg_.static_dir.empty() || segs.size() < 2) throw Error(Errc::kNotFound, call.req.path);
  std::filesystem::path p = cfg_.static_dir;
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (!is_safe_segment(segs[i]) || segs[i].find('/') != std::string::npos) {
      throw Error(Errc::kNotFound, call.req.path);
    }
    p /= segs[i];
  }
  auto body = read_file(p);
  if (!body) throw Error(Errc::kNotFound, call.req.path);
  Response res;
  res.content_type = guess_content_type(p.string());
  res.body = std::move(*body);
  return res;
}

Response App::serve_file(Call& call, const std::vector<std::string>& segs) {
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (!is_safe_segment(segs[i]) || segs[i].find('/') != std::string::npos) {
      throw Error(Errc::kNotFound, call.req.path);
    }
  }
  const auto p = uploads_.absolute(join(segs, 1));
  if (!uploads_.contains(p)) throw Error(Errc::kNotFound, call.req.path);
  auto body = read_file(p);
  if (!body) throw Error(Errc::kNotFound, call.req.path);
  Response res;
  res.content_type = guess_content_type(p.string());
  res.body = std::move(*body);
  return res;
}

Response App::serve_home(Call& call) {
  const auto creds = auth::db_credentials(*call.session);
  std::vector<DatabaseListing> dbs;
  for (const auto& src : pool_.sources()) {
    bool ok = true;
    try {
      auto lease = pool_.acquire(src.name, creds);
    } catch (const Error&) {
      ok = false;
    }
    dbs.push_back({src.name, ok});
  }
  std::vector<ViewListing> vs;
  for (const auto& v : views_.views()) {
    ViewListing l{v.name, {}};
    for (const auto& op : v.ops) l.ops.push_back(views::view_op_name(op));
    vs.push_back(std::move(l));
  }
  return page(call, home_page(cfg_.title, dbs, vs));
}

Response App::serve_database(Call& call, const std::string& db) {
  if (pool_.find(db) == nullptr) throw Error(Errc::kNotFound, "database " + db);
  auto lease = pool_.acquire(db, auth::db_credentials(*call.session));
  std::vector<TableListing> tables;
  for (const auto& meta : catalog::list_tables(*lease)) {
    tables.push_back({meta.name, ops::available_ops(meta, hooks_, &call.log)});
  }
  return page(call, database_page(db, tables));
}

Response App::serve_table(Call& call, const std::string& db, const std::string& table) {
  if (pool_.find(db) == nullptr) throw Error(Errc::kNotFound, "database " + db);
  auto lease = pool_.acquire(db, auth::db_credentials(*call.session));
  const auto meta = catalog::describe_table(*lease, table);
  const auto rows = catalog::row_count(*lease, meta.name);
  return page(call, table_page(meta, rows, ops::available_ops(meta, hooks_, &call.log)));
}

Response App::serve_table_op(Call& call, const std::string& db, const std::string& table,
                             const std::string& kind_name) {
  const auto kind = parse_operation(kind_name);
  if (!kind) throw Error(Errc::kNotFound, "operation " + kind_name);
  if (pool_.find(db) == nullptr) throw Error(Errc::kNotFound, "database " + db);
  const auto meta = pool_.describe(db, table);
  if (!ops::is_available(meta, hooks_, *kind, &call.log)) {
    throw Error(Errc::kOperationNotAvailable,
                fmt::format("{} on {}.{}", kind_name, meta.db, meta.name));
  }
  const auto ctx = ops_context();
  const std::string action = table_op_url(meta.db, meta.name, *kind);
  const std::string name = fmt::format("{}.{}", meta.db, meta.name);
  const std::string title = fmt::format("{} [{}]", name, kind_name);
  std::vector<doc::Node> body{doc::el_text("h1", title)};
  auto back = doc::el("p", {doc::link(table_url(meta.db, meta.name), name)});

  auto origins = [&] {
    const auto files = ops::file_columns_for(meta, ctx, &call.log);
    std::vector<ColumnOrigin> out;
    for (const auto& c : meta.columns) {
      out.push_back({meta.db, meta.name, c.name,
                     std::find(files.begin(), files.end(), c.name) != files.end()});
    }
    return out;
  };
  auto show = [&](const ops::OpResult& r) {
    return result_table(std::get<ops::ResultSet>(r), origins(), hooks_, kFilesUrl, &call.log);
  };

  const FormData& form = call.form();
  switch (*kind) {
    case OperationKind::kInput: {
      if (call.post()) {
        ops::execute_op(ctx, *call.session, meta.db, meta.name, *kind, form, &call.log);
        body.push_back(message(fmt::format("1 row inserted into {}.", name), "message success"));
      }
      ops::FormOptions options{action, ops::file_columns_for(meta, ctx, &call.log),
                               ops::derived_columns_for(meta, ctx, &call.log), ""};
      body.push_back(ops::build_input_form(meta, hooks_, clock_(), options, &call.log));
      break;
    }
    case OperationKind::kUpdate: {
      const auto* step = form.field("_step");
      if (!call.post() || step == nullptr) {
        body.push_back(filter_form(filter_fields(meta), action, "Find rows", {{"_step", "match"}}));
      } else if (*step == "match") {
        if (ops::decode_filter(meta, form).empty()) {
          throw Error(Errc::kEmptyFilterForbidden, "update needs at least one condition");
        }
        const auto r = ops::execute_op(ctx, *call.session, meta.db, meta.name,
                                       OperationKind::kQuery, form, &call.log);
        const auto& rs = std::get<ops::ResultSet>(r);
        if (rs.rows.empty()) {
          body.push_back(message("No rows match.", "notice"));
          body.push_back(
              filter_form(filter_fields(meta), action, "Find rows", {{"_step", "match"}}));
        } else {
          body.push_back(show(r));
          body.push_back(update_form(meta, rs.rows.size() == 1 ? &rs.rows.front() : nullptr,
                                     form, action));
        }
      } else {
        const auto r =
            ops::execute_op(ctx, *call.session, meta.db, meta.name, *kind, form, &call.log);
        body.push_back(message(fmt::format("{} rows updated in {}.",
                                           std::get<ops::RowsAffected>(r).n, name),
                               "message success"));
      }
      break;
    }
    case OperationKind::kDelete: {
      if (call.post()) {
        const auto r =
            ops::execute_op(ctx, *call.session, meta.db, meta.name, *kind, form, &call.log);
        body.push_back(message(fmt::format("{} rows deleted from {}.",
                                           std::get<ops::RowsAffected>(r).n, name),
                               "message success"));
      } else {
        body.push_back(filter_form(filter_fields(meta), action, "Delete", {}, "delete-form"));
      }
      break;
    }
    case OperationKind::kQuery: {
      if (call.post()) {
        body.push_back(show(
            ops::execute_op(ctx, *call.session, meta.db, meta.name, *kind, form, &call.log)));
      } else {
        body.push_back(filter_form(filter_fields(meta), action, "Query"));
      }
      break;
    }
    case OperationKind::kAll:
      body.push_back(
          show(ops::execute_op(ctx, *call.session, meta.db, meta.name, *kind, form, &call.log)));
      break;
  }
  body.push_back(std::move(back));
  return page(call, doc::Page{title, {}, std::move(body)});
}

Response App::serve_view(Call& call, const std::string& name) {
  const auto* view = views_.find(name);
  if (view == nullptr) throw Error(Errc::kNotFound, "view " + name);
  std::vector<std::string> cols;
  for (const auto& c : view->columns) cols.push_back(c.label());
  std::vector<std::string> op_names;
  for (const auto& op : view->ops) op_names.push_back(views::view_op_name(op));
  return page(call, view_page(view->name, cols, op_names));
}

Response App::serve_view_op(Call& call, const std::string& name, const std::string& op) {
  const auto* view = views_.find(name);
  if (view == nullptr) throw Error(Errc::kNotFound, "view " + name);
  const auto ctx = ops_context();
  const views::DispatchRequest dreq{ctx, *call.session, *view, op, call.post(), call.form(),
                                    kFilesUrl};
  return page(call, views::dispatch_view_op(dreq, &call.log));
}

Response App::error_response(Call& call, const Error& e) {
  const int status = status_for(e.code());
  if (status == 503 || status == 500) note(&call.log, e.detail());
  std::string heading(status_text(status));
  std::string detail = std::string(errc_name(e.code()));
  if (!e.detail().empty() && status != 500) detail += ": " + e.detail();
  return page(call, error_page(status, heading, detail), status);
}

Response App::page(Call& call, doc::Page content, int status) {
  Chrome chrome{cfg_.title, call.session.has_value(), {}};
  if (call.session) {
    const auto now = clock_();
    diagnostics_.push_all(call.session->id, call.log.take(), now);
    chrome.diagnostics = diagnostics_.drain(call.session->id);
  } else {
    chrome.diagnostics = call.log.take();
  }
  Response res;
  res.status = status;
  return render(call, decorate(std::move(content), chrome), std::move(res));
}

Response App::render(const Call& call, const doc::Page& decorated, Response res) {
  res.body = doc::render_page(decorated);
  if (observer_) observer_(call.req, res, decorated);
  return res;
}

std::optional<std::string> session_cookie(const Response& res) {
  for (const auto& [k, v] : res.headers) {
    if (k != "Set-Cookie") continue;
    const std::string prefix = std::string(kSessionCookie) + "=";
    if (v.rfind(prefix, 0) != 0) continue;
    const auto end = v.find(';');
    auto id = v.substr(prefix.size(), end - prefix.size());
    if (id.empty()) return std::nullopt;
    return id;
  }
  return std::nullopt;
}

}  // namespace hdb::server
