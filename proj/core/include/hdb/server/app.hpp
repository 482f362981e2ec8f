#pragma once

// Request handling: authentication gate, routing to the six page types and
// the operation endpoints, diagnostics delivery and error pages. The App is
// transport independent; listener.hpp connects it to sockets.

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "hdb/auth.hpp"
#include "hdb/catalog.hpp"
#include "hdb/common.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/ops.hpp"
#include "hdb/server/config.hpp"
#include "hdb/server/diagnostics.hpp"
#include "hdb/server/http.hpp"
#include "hdb/server/upload_store.hpp"
#include "hdb/views.hpp"

namespace hdb::server {

class App {
 public:
  /// `cfg` should have passed finalize_config.
  App(ServerConfig cfg, hooks::HookRegistry hooks, Clock clock = system_clock());

  /// Throws as ViewRegistry::register_view; diagnostics about unreachable
  /// sources are queued for the next login.
  void register_view(views::ViewDef def);

  Response handle(const Request& req);

  /// Called with every rendered HTML page and the tree it was rendered from.
  using RenderObserver =
      std::function<void(const Request&, const Response&, const doc::Page&)>;
  void set_render_observer(RenderObserver observer) { observer_ = std::move(observer); }

  /// Unreachable-source messages, one per failing source.
  std::vector<std::string> probe_sources();

  const ServerConfig& config() const { return cfg_; }
  void set_port(unsigned port) { cfg_.port = port; }
  catalog::SourcePool& pool() { return pool_; }
  auth::SessionStore& sessions() { return sessions_; }
  DiagnosticStore& diagnostics() { return diagnostics_; }
  UploadStore& uploads() { return uploads_; }
  const hooks::HookRegistry& hooks() const { return hooks_; }
  const views::ViewRegistry& views() const { return views_; }
  ops::OpsContext ops_context();

 private:
  struct Call;

  Response dispatch(Call& call);
  Response route_authenticated(Call& call);
  Response serve_login(Call& call);
  Response serve_logout(Call& call);
  Response serve_static(Call& call, const std::vector<std::string>& segs);
  Response serve_file(Call& call, const std::vector<std::string>& segs);
  Response serve_home(Call& call);
  Response serve_database(Call& call, const std::string& db);
  Response serve_table(Call& call, const std::string& db, const std::string& table);
  Response serve_table_op(Call& call, const std::string& db, const std::string& table,
                          const std::string& kind);
  Response serve_view(Call& call, const std::string& view);
  Response serve_view_op(Call& call, const std::string& view, const std::string& op);
  Response error_response(Call& call, const Error& e);
  Response page(Call& call, doc::Page content, int status = 200);
  Response render(const Call& call, const doc::Page& decorated, Response res);

  ServerConfig cfg_;
  hooks::HookRegistry hooks_;
  Clock clock_;
  catalog::SourcePool pool_;
  auth::SessionStore sessions_;
  DiagnosticStore diagnostics_;
  UploadStore uploads_;
  views::ViewRegistry views_;
  std::mutex startup_mu_;
  std::vector<std::string> startup_diagnostics_;
  RenderObserver observer_;
};

/// Session id a response sets through its cookie, if any.
std::optional<std::string> session_cookie(const Response& res);

}  // namespace hdb::server
