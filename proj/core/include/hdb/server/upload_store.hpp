#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>

#include "hdb/common.hpp"

namespace hdb::server {

constexpr std::uint64_t kDefaultUploadCap = 2ull << 30;  // 2 GiB

struct UploadRecord {
  /// Relative to the upload root, '/' separated.
  std::string stored_path;
  std::string original_name;
  std::uint64_t size = 0;
  TimePoint stored_at;
};

/// Reduces a client-supplied file name to a single safe path component:
/// the last path segment, restricted to [A-Za-z0-9._-], no leading dots,
/// at most 120 bytes, "upload" when nothing survives.
std::string sanitize_file_name(std::string_view name);

/// Canonical file storage under one root directory:
/// `{root}/{db}/{table}/{column}/{UTC timestamp}_{sanitized name}`.
class UploadStore {
 public:
  explicit UploadStore(std::filesystem::path root, std::uint64_t cap = kDefaultUploadCap);

  const std::filesystem::path& root() const { return root_; }
  std::uint64_t cap() const { return cap_; }

  /// Throws UploadTooLarge, PathSanitizationFailure, DiskFull.
  UploadRecord store(std::string_view db, std::string_view table, std::string_view column,
                     std::string_view original_name, std::istream& content, TimePoint now);

  /// Moves an existing file (e.g. one a slave produced) into canonical storage
  /// under `{db}/{table}/{subdir}`.
  UploadRecord adopt(std::string_view db, std::string_view table, std::string_view subdir,
                     const std::filesystem::path& source, TimePoint now);

  std::filesystem::path absolute(std::string_view stored_path) const;
  /// True when `p`, after canonicalization, lies inside the root.
  bool contains(const std::filesystem::path& p) const;

 private:
  std::filesystem::path target_dir(std::string_view db, std::string_view table,
                                   std::string_view column) const;

  std::filesystem::path root_;
  std::uint64_t cap_;
};

}  // namespace hdb::server
