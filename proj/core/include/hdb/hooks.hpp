#pragma once

// Site extension points. A hook is a function registered against a
// (db, table, column) pattern; at each interaction point the most specific
// matching hook of the relevant kind replaces the core behaviour.
//
// Specificity, most significant first: exact column > column suffix > any
// column, then exact table > any table, then exact db > any db. Ties go to
// the earliest registration.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "hdb/bridge/derived_fill.hpp"
#include "hdb/catalog.hpp"
#include "hdb/common.hpp"
#include "hdb/doctree.hpp"
#include "hdb/operation.hpp"

namespace hdb::auth {
struct Session;
}
namespace hdb::views {
struct ViewDef;
}

namespace hdb::hooks {

enum class HookKind {
  kInputDefaultValue,
  kInputTextareaSize,
  kOutputLink,
  kOpOverride,
  kPageHandler,
  kDerivedFill,
};

std::string_view hook_kind_name(HookKind kind);

struct AnyColumn {
  bool operator==(const AnyColumn&) const = default;
};
struct ExactColumn {
  std::string name;
  bool operator==(const ExactColumn&) const = default;
};
struct ColumnSuffix {
  std::string suffix;
  bool operator==(const ColumnSuffix&) const = default;
};

struct HookMatcher {
  std::optional<std::string> db;     // nullopt: any
  std::optional<std::string> table;  // nullopt: any
  std::variant<AnyColumn, ExactColumn, ColumnSuffix> column = AnyColumn{};

  bool matches(std::string_view db_name, std::string_view table_name,
               std::string_view column_name) const;
  bool is_wildcard() const;
  /// Comparable rank; larger is more specific.
  int specificity() const;

  bool operator==(const HookMatcher&) const = default;
};

/// Where a hook is being applied.
struct HookSite {
  std::string_view db;
  std::string_view table;
  std::string_view column;
};

struct TextareaDims {
  unsigned rows = 4;
  unsigned cols = 60;
  bool operator==(const TextareaDims&) const = default;
};

inline constexpr TextareaDims kDefaultTextarea{4, 60};

/// Everything a custom view operation handler may use.
struct PageRequest {
  const auth::Session& session;
  const views::ViewDef& view;
  const FormData& form;
  catalog::CatalogAccess& catalog;
  catalog::SourcePool& pool;
  /// Prefix under which uploaded artifacts are served, e.g. "/files/".
  std::string_view files_url;
};

using DefaultValueFn = std::function<std::optional<std::string>(const HookSite&, TimePoint)>;
using TextareaFn = std::function<std::optional<TextareaDims>(const HookSite&)>;
using OutputLinkFn =
    std::function<std::optional<std::string>(const HookSite&, std::string_view value)>;
using OpOverrideFn =
    std::function<std::vector<OperationKind>(const HookSite&, std::vector<OperationKind>)>;
using PageHandlerFn = std::function<doc::Page(const PageRequest&)>;
using DerivedFillFn = std::function<std::optional<bridge::DerivedFillSpec>(const HookSite&)>;

using HookFn = std::variant<DefaultValueFn, TextareaFn, OutputLinkFn, OpOverrideFn,
                            PageHandlerFn, DerivedFillFn>;

struct HookEntry {
  HookKind kind;
  HookMatcher matcher;
  HookFn fn;
  /// Set for named page handlers.
  std::string name;
};

class HookRegistry {
 public:
  struct Options {
    /// Accept matchers with every component `any`. Meant for tests.
    bool allow_wildcard = false;
  };

  HookRegistry() = default;
  explicit HookRegistry(Options options) : options_(options) {}

  /// Appends an entry. Throws SignatureMismatch when `f` is not callable
  /// with the kind's signature, InvalidMatcher for an all-wildcard matcher.
  template <typename F>
  HookRegistry& add(HookKind kind, HookMatcher matcher, F&& f);

  /// Named page handler for custom view operations.
  HookRegistry& add_handler(std::string name, PageHandlerFn f);

  const std::vector<HookEntry>& entries() const { return entries_; }

  /// Most specific matching entry of `kind`, or nullptr.
  const HookEntry* resolve(HookKind kind, std::string_view db, std::string_view table,
                           std::string_view column) const;

  std::optional<std::string> default_value(TimePoint clock, std::string_view db,
                                           std::string_view table, std::string_view column,
                                           DiagnosticLog* diags = nullptr) const;
  std::optional<TextareaDims> textarea_dims(std::string_view db, std::string_view table,
                                            std::string_view column,
                                            DiagnosticLog* diags = nullptr) const;
  std::optional<std::string> linkify(std::string_view db, std::string_view table,
                                     std::string_view column, std::string_view value,
                                     DiagnosticLog* diags = nullptr) const;
  /// Applies the table-level op_override hook, if any, to `ops`.
  std::vector<OperationKind> override_ops(std::string_view db, std::string_view table,
                                          std::vector<OperationKind> ops,
                                          DiagnosticLog* diags = nullptr) const;
  std::optional<bridge::DerivedFillSpec> derived_fill(std::string_view db, std::string_view table,
                                                      std::string_view column,
                                                      DiagnosticLog* diags = nullptr) const;
  const PageHandlerFn* handler(std::string_view name) const;

 private:
  template <typename Fn, typename F>
  HookRegistry& add_as(HookKind kind, HookMatcher matcher, F&& f);
  void append(HookKind kind, HookMatcher matcher, HookFn fn, std::string name = {});

  Options options_{};
  std::vector<HookEntry> entries_;
};

template <typename Fn, typename F>
HookRegistry& HookRegistry::add_as(HookKind kind, HookMatcher matcher, F&& f) {
  if constexpr (std::is_constructible_v<Fn, F>) {
    append(kind, std::move(matcher), Fn(std::forward<F>(f)));
    return *this;
  } else {
    throw Error(Errc::kSignatureMismatch, std::string(hook_kind_name(kind)));
  }
}

template <typename F>
HookRegistry& HookRegistry::add(HookKind kind, HookMatcher matcher, F&& f) {
  switch (kind) {
    case HookKind::kInputDefaultValue:
      return add_as<DefaultValueFn>(kind, std::move(matcher), std::forward<F>(f));
    case HookKind::kInputTextareaSize:
      return add_as<TextareaFn>(kind, std::move(matcher), std::forward<F>(f));
    case HookKind::kOutputLink:
      return add_as<OutputLinkFn>(kind, std::move(matcher), std::forward<F>(f));
    case HookKind::kOpOverride:
      return add_as<OpOverrideFn>(kind, std::move(matcher), std::forward<F>(f));
    case HookKind::kPageHandler:
      return add_as<PageHandlerFn>(kind, std::move(matcher), std::forward<F>(f));
    case HookKind::kDerivedFill:
      return add_as<DerivedFillFn>(kind, std::move(matcher), std::forward<F>(f));
  }
  throw Error(Errc::kSignatureMismatch, "unknown hook kind");
}

/// Default input value hook: the clock's UTC date as `Y-M-D` without zero
/// padding, e.g. "2007-8-24".
DefaultValueFn unpadded_date_default();

/// Registers unpadded_date_default() for every column of `db` whose name
/// ends in "Date".
void register_date_defaults(HookRegistry& registry, std::string db);

}  // namespace hdb::hooks
