#include "hdb/hooks.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hdb::hooks {
namespace {

std::string site_label(std::string_view db, std::string_view table, std::string_view column) {
  return column.empty() ? fmt::format("{}.{}", db, table)
                        : fmt::format("{}.{}.{}", db, table, column);
}

void report(DiagnosticLog* diags, HookKind kind, std::string_view db, std::string_view table,
            std::string_view column, std::string_view what) {
  note(diags, fmt::format("hook_failed({}, {}): {}", hook_kind_name(kind),
                          site_label(db, table, column), what));
}

// Calls `f`, turning any exception into nullopt plus one diagnostic.
template <typename F>
auto guarded(DiagnosticLog* diags, HookKind kind, std::string_view db, std::string_view table,
             std::string_view column, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    report(diags, kind, db, table, column, e.what());
  } catch (...) {
    report(diags, kind, db, table, column, "unknown exception");
  }
  return std::nullopt;
}

}  // namespace

std::string_view hook_kind_name(HookKind kind) {
  switch (kind) {
    case HookKind::kInputDefaultValue: return "input_default_value";
    case HookKind::kInputTextareaSize: return "input_textarea_size";
    case HookKind::kOutputLink: return "output_link";
    case HookKind::kOpOverride: return "op_override";
    case HookKind::kPageHandler: return "page_handler";
    case HookKind::kDerivedFill: return "derived_fill";
  }
  return "unknown";
}

bool HookMatcher::matches(std::string_view db_name, std::string_view table_name,
                          std::string_view column_name) const {
  if (db && *db != db_name) return false;
  if (table && *table != table_name) return false;
  return std::visit(
      [column_name](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AnyColumn>) {
          return true;
        } else if constexpr (std::is_same_v<T, ExactColumn>) {
          return c.name == column_name;
        } else {
          return column_name.size() >= c.suffix.size() &&
                 column_name.substr(column_name.size() - c.suffix.size()) == c.suffix;
        }
      },
      column);
}

bool HookMatcher::is_wildcard() const {
  return !db && !table && std::holds_alternative<AnyColumn>(column);
}

int HookMatcher::specificity() const {
  int column_rank = 0;
  if (std::holds_alternative<ExactColumn>(column)) column_rank = 2;
  if (std::holds_alternative<ColumnSuffix>(column)) column_rank = 1;
  return column_rank * 4 + (table ? 2 : 0) + (db ? 1 : 0);
}

void HookRegistry::append(HookKind kind, HookMatcher matcher, HookFn fn, std::string name) {
  if (kind != HookKind::kPageHandler && matcher.is_wildcard() && !options_.allow_wildcard) {
    throw Error(Errc::kInvalidMatcher,
                fmt::format("{} hook needs at least one of db, table, column",
                            hook_kind_name(kind)));
  }
  entries_.push_back(HookEntry{kind, std::move(matcher), std::move(fn), std::move(name)});
}

HookRegistry& HookRegistry::add_handler(std::string name, PageHandlerFn f) {
  if (!f) throw Error(Errc::kSignatureMismatch, "empty page handler");
  append(HookKind::kPageHandler, HookMatcher{}, std::move(f), std::move(name));
  return *this;
}

const HookEntry* HookRegistry::resolve(HookKind kind, std::string_view db, std::string_view table,
                                       std::string_view column) const {
  const HookEntry* best = nullptr;
  int best_rank = -1;
  for (const auto& e : entries_) {
    if (e.kind != kind || !e.matcher.matches(db, table, column)) continue;
    const int rank = e.matcher.specificity();
    if (rank > best_rank) {
      best = &e;
      best_rank = rank;
    }
  }
  return best;
}

std::optional<std::string> HookRegistry::default_value(TimePoint clock, std::string_view db,
                                                       std::string_view table,
                                                       std::string_view column,
                                                       DiagnosticLog* diags) const {
  const auto* e = resolve(HookKind::kInputDefaultValue, db, table, column);
  if (e == nullptr) return std::nullopt;
  const auto& fn = std::get<DefaultValueFn>(e->fn);
  return guarded(diags, e->kind, db, table, column,
                 [&]() -> std::optional<std::string> { return fn(HookSite{db, table, column}, clock); });
}

std::optional<TextareaDims> HookRegistry::textarea_dims(std::string_view db,
                                                        std::string_view table,
                                                        std::string_view column,
                                                        DiagnosticLog* diags) const {
  const auto* e = resolve(HookKind::kInputTextareaSize, db, table, column);
  if (e == nullptr) return std::nullopt;
  const auto& fn = std::get<TextareaFn>(e->fn);
  return guarded(diags, e->kind, db, table, column,
                 [&]() -> std::optional<TextareaDims> { return fn(HookSite{db, table, column}); });
}

std::optional<std::string> HookRegistry::linkify(std::string_view db, std::string_view table,
                                                 std::string_view column, std::string_view value,
                                                 DiagnosticLog* diags) const {
  const auto* e = resolve(HookKind::kOutputLink, db, table, column);
  if (e == nullptr) return std::nullopt;
  const auto& fn = std::get<OutputLinkFn>(e->fn);
  return guarded(diags, e->kind, db, table, column, [&]() -> std::optional<std::string> {
    return fn(HookSite{db, table, column}, value);
  });
}

std::vector<OperationKind> HookRegistry::override_ops(std::string_view db, std::string_view table,
                                                      std::vector<OperationKind> ops,
                                                      DiagnosticLog* diags) const {
  const auto* e = resolve(HookKind::kOpOverride, db, table, "");
  if (e == nullptr) return ops;
  const auto& fn = std::get<OpOverrideFn>(e->fn);
  auto result = guarded(diags, e->kind, db, table, "",
                        [&]() -> std::optional<std::vector<OperationKind>> {
                          return fn(HookSite{db, table, ""}, ops);
                        });
  return result ? std::move(*result) : ops;
}

std::optional<bridge::DerivedFillSpec> HookRegistry::derived_fill(std::string_view db,
                                                                  std::string_view table,
                                                                  std::string_view column,
                                                                  DiagnosticLog* diags) const {
  const auto* e = resolve(HookKind::kDerivedFill, db, table, column);
  if (e == nullptr) return std::nullopt;
  const auto& fn = std::get<DerivedFillFn>(e->fn);
  return guarded(diags, e->kind, db, table, column,
                 [&]() -> std::optional<bridge::DerivedFillSpec> {
                   return fn(HookSite{db, table, column});
                 });
}

const PageHandlerFn* HookRegistry::handler(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.kind == HookKind::kPageHandler && e.name == name) return &std::get<PageHandlerFn>(e.fn);
  }
  return nullptr;
}

DefaultValueFn unpadded_date_default() {
  return [](const HookSite&, TimePoint clock) -> std::optional<std::string> {
    const CivilTime c = to_civil(clock);
    return fmt::format("{}-{}-{}", c.year, c.month, c.day);
  };
}

void register_date_defaults(HookRegistry& registry, std::string db) {
  registry.add(HookKind::kInputDefaultValue,
               HookMatcher{std::move(db), std::nullopt, ColumnSuffix{"Date"}},
               unpadded_date_default());
}

}  // namespace hdb::hooks
