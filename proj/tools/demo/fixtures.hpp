#pragma once

// Demonstration databases: `scibsdb` (compound library, plates, mass
// spectrometry scans and the audit table) and `ni_lhh` (clinical samples
// with date columns). Used by hdb-demo and by the test suites.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hdb/catalog.hpp"
#include "hdb/server/config.hpp"

namespace hdb::demo {

inline constexpr std::size_t kCompoundRows = 210;
inline constexpr std::string_view kAuditTable = "Input";

/// SpecScan columns a user fills in, the upload column included.
std::vector<std::string> spec_scan_user_columns();
/// SpecScan columns filled from the analysis of the uploaded scan.
std::vector<std::string> spec_scan_derived_columns();

/// Creates (or replaces) the scibsdb database file.
void create_scibsdb(const std::filesystem::path& file, std::uint64_t seed = 7);
/// Creates (or replaces) the ni_lhh database file.
void create_ni_lhh(const std::filesystem::path& file);

struct DemoUser {
  std::string name;
  std::string password;
  std::string db_user;
};

struct DemoOptions {
  unsigned port = 8080;
  /// Leave ni_lhh's location pointing at a missing file.
  bool ni_lhh_unreachable = false;
  std::vector<DemoUser> users{{"nicos", "nicos-demo", "nicos"}};
  std::string auth_mode = "session_idle";
  std::filesystem::path static_dir;
};

struct DemoLayout {
  std::filesystem::path dir;
  std::filesystem::path config_file;
  std::filesystem::path scibsdb;
  std::filesystem::path ni_lhh;
  std::filesystem::path upload_root;
};

/// Writes both databases, an upload directory and `hdb.conf` under `dir`.
DemoLayout write_demo(const std::filesystem::path& dir, const DemoOptions& options = {});

/// Text of a small synthetic scan file accepted by the analysis slave:
/// one "time mz intensity" triple per line.
std::string synthetic_scan(std::size_t spectra, std::size_t peaks, std::uint64_t seed = 1);

}  // namespace hdb::demo
