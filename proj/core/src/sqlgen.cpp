#include "hdb/sqlgen.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "hdb/common.hpp"

namespace hdb::sql {
namespace {

using catalog::BaseType;
using catalog::ColumnMeta;
using catalog::TableMeta;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void invalid(const ColumnMeta& col, std::string_view text, std::string_view why) {
  throw Error(Errc::kInvalidValue, fmt::format("{} = '{}': {}", col.name, text, why));
}

template <typename T>
bool parse_whole(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Parses "Y-M-D" with a four digit year and one or two digit month/day.
std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
  const auto first = s.find('-');
  const auto second = first == std::string_view::npos ? first : s.find('-', first + 1);
  if (second == std::string_view::npos) return std::nullopt;
  const auto y = s.substr(0, first);
  const auto m = s.substr(first + 1, second - first - 1);
  const auto d = s.substr(second + 1);
  if (y.size() != 4 || m.empty() || m.size() > 2 || d.empty() || d.size() > 2) return std::nullopt;
  auto digits = [](std::string_view p) {
    for (char c : p) {
      if (c < '0' || c > '9') return false;
    }
    return true;
  };
  if (!digits(y) || !digits(m) || !digits(d)) return std::nullopt;
  int yy = 0;
  unsigned mm = 0;
  unsigned dd = 0;
  std::from_chars(y.data(), y.data() + y.size(), yy);
  std::from_chars(m.data(), m.data() + m.size(), mm);
  std::from_chars(d.data(), d.data() + d.size(), dd);
  const std::chrono::year_month_day ymd{std::chrono::year{yy}, std::chrono::month{mm},
                                        std::chrono::day{dd}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_date(const std::chrono::year_month_day& ymd) {
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

const ColumnMeta& require_column(const TableMeta& meta, std::string_view name) {
  const ColumnMeta* col = meta.find(name);
  if (col == nullptr) {
    throw Error(Errc::kUnknownColumn, fmt::format("{}.{}", meta.name, name));
  }
  return *col;
}

void append_where(const TableMeta& meta, const RowFilter& filter, SqlStatement& stmt) {
  if (filter.empty()) return;
  stmt.text += " WHERE ";
  for (std::size_t i = 0; i < filter.conjuncts.size(); ++i) {
    const auto& c = filter.conjuncts[i];
    require_column(meta, c.column);
    if (i > 0) stmt.text += " AND ";
    stmt.text += quote_identifier(c.column);
    if (catalog::is_null(c.value)) {
      if (c.relation == Relation::kEq) {
        stmt.text += " IS NULL";
      } else if (c.relation == Relation::kNe) {
        stmt.text += " IS NOT NULL";
      } else {
        throw Error(Errc::kInvalidValue,
                    fmt::format("{}: NULL only compares with eq or ne", c.column));
      }
      continue;
    }
    stmt.text += ' ';
    stmt.text += relation_symbol(c.relation);
    stmt.text += " ?";
    stmt.params.push_back(c.value);
  }
}

void check_writable(const TableMeta& meta) {
  if (meta.read_only) throw Error(Errc::kReadOnlyTable, fmt::format("{}.{}", meta.db, meta.name));
}

void check_assignable(const TableMeta& meta, const Assignments& assigns) {
  for (const auto& [name, value] : assigns) {
    const ColumnMeta& col = require_column(meta, name);
    if (col.auto_increment) throw Error(Errc::kAssignedAutoIncrement, col.name);
  }
}

}  // namespace

std::string_view relation_symbol(Relation r) {
  switch (r) {
    case Relation::kEq: return "=";
    case Relation::kNe: return "<>";
    case Relation::kLt: return "<";
    case Relation::kLe: return "<=";
    case Relation::kGt: return ">";
    case Relation::kGe: return ">=";
    case Relation::kLike: return "LIKE";
  }
  return "=";
}

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kEq: return "eq";
    case Relation::kNe: return "ne";
    case Relation::kLt: return "lt";
    case Relation::kLe: return "le";
    case Relation::kGt: return "gt";
    case Relation::kGe: return "ge";
    case Relation::kLike: return "like";
  }
  return "eq";
}

std::optional<Relation> parse_relation(std::string_view name) {
  static constexpr std::array<Relation, 7> kAll = {Relation::kEq, Relation::kNe, Relation::kLt,
                                                   Relation::kLe, Relation::kGt, Relation::kGe,
                                                   Relation::kLike};
  for (Relation r : kAll) {
    if (relation_name(r) == name) return r;
  }
  return std::nullopt;
}

std::string quote_identifier(std::string_view name) {
  if (name.empty()) throw Error(Errc::kEmptyIdentifier, "");
  std::string out;
  out.reserve(name.size() + 2);
  out += '"';
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Value convert_value(const ColumnMeta& col, std::string_view text) {
  const auto& type = col.type;
  switch (type.base) {
    case BaseType::kInteger:
    case BaseType::kBigint: {
      std::int64_t v = 0;
      if (!parse_whole(trim(text), v)) invalid(col, text, "not an integer");
      if (type.is_unsigned && v < 0) invalid(col, text, "negative value for unsigned column");
      return v;
    }
    case BaseType::kFloat: {
      double v = 0;
      if (!parse_whole(trim(text), v) || !std::isfinite(v)) invalid(col, text, "not a number");
      if (type.is_unsigned && v < 0) invalid(col, text, "negative value for unsigned column");
      return v;
    }
    case BaseType::kEnum: {
      const auto& values = *type.enum_values;
      if (std::find(values.begin(), values.end(), text) == values.end()) {
        invalid(col, text, "not one of the enumeration values");
      }
      return std::string(text);
    }
    case BaseType::kDate: {
      const auto ymd = parse_date(trim(text));
      if (!ymd) invalid(col, text, "expected YYYY-MM-DD");
      return format_date(*ymd);
    }
    case BaseType::kDatetime: {
      const auto t = trim(text);
      const auto sep = t.find_first_of(" T");
      const auto ymd = parse_date(t.substr(0, sep));
      if (!ymd) invalid(col, text, "expected YYYY-MM-DD HH:MM[:SS]");
      unsigned h = 0;
      unsigned m = 0;
      unsigned s = 0;
      if (sep != std::string_view::npos) {
        const auto clock = trim(t.substr(sep + 1));
        const auto c1 = clock.find(':');
        const auto c2 = c1 == std::string_view::npos ? c1 : clock.find(':', c1 + 1);
        if (c1 == std::string_view::npos || !parse_whole(clock.substr(0, c1), h) ||
            !parse_whole(clock.substr(c1 + 1, c2 == std::string_view::npos ? std::string_view::npos
                                                                           : c2 - c1 - 1),
                         m) ||
            (c2 != std::string_view::npos && !parse_whole(clock.substr(c2 + 1), s)) || h > 23 ||
            m > 59 || s > 60) {
          invalid(col, text, "expected YYYY-MM-DD HH:MM[:SS]");
        }
      }
      return fmt::format("{} {:02}:{:02}:{:02}", format_date(*ymd), h, m, s);
    }
    case BaseType::kTinytext:
      if (text.size() > 255) invalid(col, text.substr(0, 32), "longer than 255 bytes");
      return std::string(text);
    case BaseType::kText:
    case BaseType::kBlob:
    case BaseType::kOther:
      return std::string(text);
  }
  return std::string(text);
}

SqlStatement gen_insert(const TableMeta& meta, const Assignments& assigns) {
  check_writable(meta);
  check_assignable(meta, assigns);
  for (const auto& col : meta.columns) {
    if (col.nullable || col.auto_increment) continue;
    const auto it = assigns.find(col.name);
    const bool absent = it == assigns.end();
    if ((absent && !col.default_value) || (!absent && catalog::is_null(it->second))) {
      throw Error(Errc::kMissingRequired, col.name);
    }
  }

  SqlStatement stmt;
  stmt.text = fmt::format("INSERT INTO {}", quote_identifier(meta.name));
  if (assigns.empty()) {
    stmt.text += " DEFAULT VALUES";
    return stmt;
  }
  std::string names;
  std::string marks;
  for (const auto& col : meta.columns) {
    const auto it = assigns.find(col.name);
    if (it == assigns.end()) continue;
    if (!names.empty()) {
      names += ", ";
      marks += ", ";
    }
    names += quote_identifier(col.name);
    marks += '?';
    stmt.params.push_back(it->second);
  }
  stmt.text += fmt::format(" ({}) VALUES ({})", names, marks);
  return stmt;
}

SqlStatement gen_select(const TableMeta& meta, const std::vector<std::string>& columns,
                        const RowFilter& filter, std::optional<std::size_t> limit,
                        std::size_t default_limit) {
  SqlStatement stmt;
  std::string list;
  if (columns.empty()) {
    for (const auto& col : meta.columns) {
      if (!list.empty()) list += ", ";
      list += quote_identifier(col.name);
    }
  } else {
    for (const auto& name : columns) {
      require_column(meta, name);
      if (!list.empty()) list += ", ";
      list += quote_identifier(name);
    }
  }
  stmt.text = fmt::format("SELECT {} FROM {}", list, quote_identifier(meta.name));
  append_where(meta, filter, stmt);
  std::string order;
  for (const auto* pk : meta.primary_key()) {
    if (!order.empty()) order += ", ";
    order += quote_identifier(pk->name);
  }
  if (!order.empty()) stmt.text += " ORDER BY " + order;
  stmt.text += " LIMIT ?";
  stmt.params.push_back(static_cast<std::int64_t>(limit.value_or(default_limit)));
  return stmt;
}

SqlStatement gen_update(const TableMeta& meta, const Assignments& assigns,
                        const RowFilter& filter) {
  check_writable(meta);
  if (filter.empty()) throw Error(Errc::kEmptyFilterForbidden, meta.name);
  check_assignable(meta, assigns);
  if (assigns.empty()) throw Error(Errc::kInvalidValue, "no columns assigned");

  SqlStatement stmt;
  std::string sets;
  for (const auto& col : meta.columns) {
    const auto it = assigns.find(col.name);
    if (it == assigns.end()) continue;
    if (!col.nullable && catalog::is_null(it->second)) {
      throw Error(Errc::kMissingRequired, col.name);
    }
    if (!sets.empty()) sets += ", ";
    sets += quote_identifier(col.name) + " = ?";
    stmt.params.push_back(it->second);
  }
  stmt.text = fmt::format("UPDATE {} SET {}", quote_identifier(meta.name), sets);
  append_where(meta, filter, stmt);
  return stmt;
}

SqlStatement gen_delete(const TableMeta& meta, const RowFilter& filter) {
  check_writable(meta);
  if (filter.empty()) throw Error(Errc::kEmptyFilterForbidden, meta.name);
  SqlStatement stmt;
  stmt.text = fmt::format("DELETE FROM {}", quote_identifier(meta.name));
  append_where(meta, filter, stmt);
  return stmt;
}

std::string describe_statement(const SqlStatement& stmt) {
  std::string out = stmt.text;
  if (stmt.params.empty()) return out;
  out += " -- [";
  for (std::size_t i = 0; i < stmt.params.size(); ++i) {
    if (i > 0) out += ", ";
    const auto& p = stmt.params[i];
    if (catalog::is_null(p)) {
      out += "NULL";
    } else if (std::holds_alternative<std::string>(p)) {
      out += fmt::format("'{}'", std::get<std::string>(p));
    } else {
      out += catalog::display(p);
    }
  }
  out += ']';
  return out;
}

}  // namespace hdb::sql
