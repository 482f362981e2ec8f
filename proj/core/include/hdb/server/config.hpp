#pragma once

// Server configuration. The file is line oriented:
//
//   # comment
//   title = hdb at the lab
//   port = 8080
//   read_only += scibsdb.Input
//   source scibsdb {
//     location = scibsdb.sqlite
//     db_user = hdb
//   }
//   user nicos {
//     password_hash = $argon2id$...
//     db_user = nicos
//   }
//
// `=` sets a key, `+=` appends to a list key. Values run to the end of the
// line; a value may be double-quoted to keep surrounding blanks or a `#`.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdb/auth.hpp"
#include "hdb/catalog.hpp"
#include "hdb/ops.hpp"
#include "hdb/server/upload_store.hpp"

namespace hdb::server {

struct ServerConfig {
  std::string title = "hdb";
  std::string host = "0.0.0.0";
  /// Name shown on profile pages; defaults to the machine's host name.
  std::string server_name;
  unsigned port = 8080;
  std::chrono::seconds request_timeout{30};
  auth::AuthMode auth_mode = auth::SessionIdle{};
  std::vector<catalog::DataSourceConfig> sources;
  std::vector<auth::UserEntry> users;
  std::filesystem::path upload_root;
  std::uint64_t upload_cap = kDefaultUploadCap;
  std::optional<ops::AuditTarget> audit_table;
  /// "db.table" entries.
  std::vector<std::string> read_only;
  /// "db.table.column" entries taking file uploads.
  std::vector<std::string> file_columns;
  std::size_t page_limit = 500;
  std::size_t pool_size = 4;
  std::filesystem::path static_dir;
  /// Holds the IpWindow persistence file.
  std::filesystem::path state_dir;
};

/// Relative paths resolve against `base_dir`. Throws InvalidConfig with the
/// offending line.
ServerConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ServerConfig load_config(const std::filesystem::path& file);

/// Checks cross-field invariants, creates missing state directories and
/// applies read-only declarations to the sources. Throws InvalidConfig.
void finalize_config(ServerConfig& cfg);

}  // namespace hdb::server
