#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hdb/server/app.hpp"
#include "hdb/server/config.hpp"
#include "hdb/server/listener.hpp"
#include "site.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"hdb: schema-transparent web administration for relational databases"};
  std::string config_path;
  std::optional<unsigned> port;
  bool single = false;
  cli.add_option("--config", config_path, "Configuration file")->required();
  cli.add_option("--port", port, "Listening port, overriding the configuration")
      ->check(CLI::Range(1, 65535));
  cli.add_flag("--single-request", single, "Serve one exchange on stdin/stdout, then exit");
  CLI11_PARSE(cli, argc, argv);

  try {
    auto cfg = hdb::server::load_config(config_path);
    if (port) cfg.port = *port;
    hdb::server::finalize_config(cfg);

    hdb::hooks::HookRegistry hooks;
    hdb::site::register_hooks(hooks, hdb::site::bundled_slave());
    hdb::server::App app(std::move(cfg), std::move(hooks));
    for (auto& view : hdb::site::site_views()) {
      try {
        app.register_view(std::move(view));
      } catch (const hdb::Error& e) {
        std::cerr << "hdb: view not registered: " << e.what() << "\n";
      }
    }

    if (single) {
      std::ios::sync_with_stdio(false);
      hdb::server::serve_single_request(app, std::cin, std::cout, hdb::server::socket_peer(0));
      return 0;
    }
    hdb::server::Listener listener(app, app.config().host, app.config().port);
    std::cerr << fmt::format("hdb {} serving {} on {}:{}\n", hdb::version(), app.config().title,
                             app.config().host, listener.port());
    listener.run();
  } catch (const hdb::Error& e) {
    std::cerr << "hdb: " << e.what() << "\n";
    return e.code() == hdb::Errc::kPortInUse ? 2 : 1;
  }
  return 0;
}
