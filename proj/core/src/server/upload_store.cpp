#include "hdb/server/upload_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>

namespace hdb::server {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kMaxNameBytes = 120;

bool safe_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '.' || c == '_' || c == '-';
}

// Opens a fresh file named `{stamp}[-n]_{name}` inside `dir`.
std::pair<int, fs::path> create_unique(const fs::path& dir, const std::string& stamp,
                                       const std::string& name) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::string file = attempt == 0 ? fmt::format("{}_{}", stamp, name)
                                          : fmt::format("{}-{}_{}", stamp, attempt, name);
    const fs::path path = dir / file;
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
    if (fd >= 0) return {fd, path};
    if (errno != EEXIST) {
      throw Error(errno == ENOSPC ? Errc::kDiskFull : Errc::kPathSanitizationFailure,
                  fmt::format("{}: {}", path.string(), std::strerror(errno)));
    }
  }
  throw Error(Errc::kPathSanitizationFailure, "could not allocate a unique stored name");
}

void write_all(int fd, const char* data, std::size_t n, const fs::path& path) {
  while (n > 0) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::kDiskFull, fmt::format("{}: {}", path.string(), std::strerror(errno)));
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

std::string relative_string(const fs::path& root, const fs::path& p) {
  return p.lexically_relative(root).generic_string();
}

}  // namespace

std::string sanitize_file_name(std::string_view name) {
  const auto slash = name.find_last_of("/\\");
  if (slash != std::string_view::npos) name.remove_prefix(slash + 1);
  std::string out;
  out.reserve(name.size());
  for (unsigned char c : name) {
    if (safe_char(c)) {
      out += static_cast<char>(c);
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  const auto first = out.find_first_not_of("._");
  out = first == std::string::npos ? std::string() : out.substr(first);
  if (out.size() > kMaxNameBytes) out = out.substr(out.size() - kMaxNameBytes);
  const auto lead = out.find_first_not_of('.');
  out = lead == std::string::npos ? std::string() : out.substr(lead);
  if (out.empty()) out = "upload";
  return out;
}

UploadStore::UploadStore(fs::path root, std::uint64_t cap) : cap_(cap) {
  std::error_code ec;
  fs::create_directories(root, ec);
  root_ = fs::weakly_canonical(root);
}

bool UploadStore::contains(const fs::path& p) const {
  std::error_code ec;
  const fs::path canonical = fs::weakly_canonical(p, ec);
  if (ec) return false;
  const auto rel = canonical.lexically_relative(root_);
  if (rel.empty() || rel.is_absolute()) return false;
  const auto first = *rel.begin();
  return first != ".." && first != ".";
}

fs::path UploadStore::target_dir(std::string_view db, std::string_view table,
                                 std::string_view column) const {
  const fs::path dir =
      root_ / sanitize_file_name(db) / sanitize_file_name(table) / sanitize_file_name(column);
  if (!contains(dir / "x")) {
    throw Error(Errc::kPathSanitizationFailure, dir.string());
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::kDiskFull, fmt::format("{}: {}", dir.string(), ec.message()));
  return dir;
}

UploadRecord UploadStore::store(std::string_view db, std::string_view table,
                                std::string_view column, std::string_view original_name,
                                std::istream& content, TimePoint now) {
  const fs::path dir = target_dir(db, table, column);
  auto [fd, path] = create_unique(dir, format_compact_utc(now), sanitize_file_name(original_name));
  if (!contains(path)) {
    ::close(fd);
    fs::remove(path);
    throw Error(Errc::kPathSanitizationFailure, path.string());
  }

  std::uint64_t size = 0;
  std::array<char, 1 << 16> buf{};
  try {
    while (content) {
      content.read(buf.data(), buf.size());
      const auto n = static_cast<std::size_t>(content.gcount());
      if (n == 0) break;
      size += n;
      if (size > cap_) {
        throw Error(Errc::kUploadTooLarge, fmt::format("{} exceeds {} bytes", original_name, cap_));
      }
      write_all(fd, buf.data(), n, path);
    }
  } catch (...) {
    ::close(fd);
    std::error_code ec;
    fs::remove(path, ec);
    throw;
  }
  if (::close(fd) != 0) {
    std::error_code ec;
    fs::remove(path, ec);
    throw Error(Errc::kDiskFull, fmt::format("{}: {}", path.string(), std::strerror(errno)));
  }
  return UploadRecord{relative_string(root_, path), std::string(original_name), size, now};
}

UploadRecord UploadStore::adopt(std::string_view db, std::string_view table,
                                std::string_view subdir, const fs::path& source, TimePoint now) {
  const fs::path dir = target_dir(db, table, subdir);
  const std::string original = source.filename().string();
  auto [fd, path] = create_unique(dir, format_compact_utc(now), sanitize_file_name(original));
  ::close(fd);
  std::error_code ec;
  fs::rename(source, path, ec);
  if (ec) {
    fs::copy_file(source, path, fs::copy_options::overwrite_existing, ec);
    if (ec) {
      fs::remove(path);
      throw Error(Errc::kDiskFull, fmt::format("{}: {}", source.string(), ec.message()));
    }
    fs::remove(source, ec);
  }
  const auto size = fs::file_size(path, ec);
  return UploadRecord{relative_string(root_, path), original, ec ? 0 : size, now};
}

fs::path UploadStore::absolute(std::string_view stored_path) const {
  return root_ / fs::path(stored_path);
}

}  // namespace hdb::server
