#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace hdb {

/// The five standard table operations, in their display order.
enum class OperationKind { kInput, kUpdate, kDelete, kQuery, kAll };

inline constexpr std::array<OperationKind, 5> kAllOperations = {
    OperationKind::kInput, OperationKind::kUpdate, OperationKind::kDelete,
    OperationKind::kQuery, OperationKind::kAll};

constexpr std::string_view operation_name(OperationKind k) {
  switch (k) {
    case OperationKind::kInput: return "input";
    case OperationKind::kUpdate: return "update";
    case OperationKind::kDelete: return "delete";
    case OperationKind::kQuery: return "query";
    case OperationKind::kAll: return "all";
  }
  return "all";
}

constexpr bool is_mutating(OperationKind k) {
  return k == OperationKind::kInput || k == OperationKind::kUpdate ||
         k == OperationKind::kDelete;
}

inline std::optional<OperationKind> parse_operation(std::string_view name) {
  for (OperationKind k : kAllOperations) {
    if (operation_name(k) == name) return k;
  }
  return std::nullopt;
}

struct UploadedFile {
  std::string filename;
  std::string content_type;
  std::string content;
};

/// Decoded form submission: plain fields plus file parts, keyed by field name.
struct FormData {
  std::map<std::string, std::string, std::less<>> fields;
  std::map<std::string, UploadedFile, std::less<>> files;

  const std::string* field(std::string_view name) const {
    auto it = fields.find(name);
    return it == fields.end() ? nullptr : &it->second;
  }
  const UploadedFile* file(std::string_view name) const {
    auto it = files.find(name);
    return it == files.end() ? nullptr : &it->second;
  }
};

}  // namespace hdb
