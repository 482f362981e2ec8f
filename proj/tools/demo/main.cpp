#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Creates the demonstration databases and configuration"};
  std::string dir;
  unsigned port = 8080;
  bool unreachable = false;
  std::string auth_mode = "session_idle";
  std::string static_dir;
  std::vector<std::string> users;
  cli.add_option("dir", dir, "Target directory")->required();
  cli.add_option("--port", port, "Port written to the configuration");
  cli.add_option("--auth-mode", auth_mode, "session_idle or ip_window")
      ->check(CLI::IsMember({"session_idle", "ip_window"}));
  cli.add_option("--static-dir", static_dir, "Directory served under /static/");
  cli.add_option("--user", users, "name:password[:db_user], repeatable");
  cli.add_flag("--unreachable-ni-lhh", unreachable, "Point ni_lhh at a missing file");
  CLI11_PARSE(cli, argc, argv);

  hdb::demo::DemoOptions options;
  options.port = port;
  options.auth_mode = auth_mode;
  options.ni_lhh_unreachable = unreachable;
  options.static_dir = static_dir;
  if (!users.empty()) {
    options.users.clear();
    for (const auto& u : users) {
      const auto a = u.find(':');
      if (a == std::string::npos) {
        std::cerr << "hdb-demo: --user expects name:password\n";
        return 1;
      }
      const auto b = u.find(':', a + 1);
      const std::string name = u.substr(0, a);
      const std::string password = u.substr(a + 1, b == std::string::npos ? b : b - a - 1);
      options.users.push_back({name, password, b == std::string::npos ? name : u.substr(b + 1)});
    }
  }
  try {
    const auto layout = hdb::demo::write_demo(dir, options);
    std::cout << layout.config_file.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "hdb-demo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
