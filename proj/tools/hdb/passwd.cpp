#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hdb/auth.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Prints a password hash for a user block of the hdb configuration"};
  bool minimal = false;
  cli.add_flag("--minimal", minimal, "Cheapest hashing parameters, for test fixtures");
  CLI11_PARSE(cli, argc, argv);

  std::string password;
  if (!std::getline(std::cin, password) || password.empty()) {
    std::cerr << "hdb-passwd: expected the password on standard input\n";
    return 1;
  }
  std::cout << hdb::auth::hash_password(password, minimal ? hdb::auth::HashParams::minimal()
                                                          : hdb::auth::HashParams::interactive())
            << "\n";
  return 0;
}
