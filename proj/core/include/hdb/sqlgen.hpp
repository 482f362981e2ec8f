#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdb/catalog.hpp"

namespace hdb::sql {

using catalog::Value;

constexpr std::size_t kDefaultPageLimit = 500;

struct SqlStatement {
  std::string text;
  std::vector<Value> params;
};

enum class Relation { kEq, kNe, kLt, kLe, kGt, kGe, kLike };

std::string_view relation_symbol(Relation r);
std::string_view relation_name(Relation r);  // "eq", "ne", ...
std::optional<Relation> parse_relation(std::string_view name);

struct Conjunct {
  std::string column;
  Relation relation = Relation::kEq;
  Value value;
};

struct RowFilter {
  std::vector<Conjunct> conjuncts;
  bool empty() const { return conjuncts.empty(); }
};

using Assignments = std::map<std::string, Value, std::less<>>;

/// Wraps in double quotes, doubling embedded quotes. Throws EmptyIdentifier.
std::string quote_identifier(std::string_view name);

/// Converts form text to a typed value according to the column's declared
/// type. Enum text must be a member; dates accept YYYY-M-D and are stored as
/// YYYY-MM-DD. Throws InvalidValue. The empty string is not handled here.
Value convert_value(const catalog::ColumnMeta& column, std::string_view text);

/// Throws ReadOnlyTable, UnknownColumn, AssignedAutoIncrement,
/// MissingRequired.
SqlStatement gen_insert(const catalog::TableMeta& meta, const Assignments& assigns);

/// `columns` empty selects every column. Rows are ordered by primary key.
SqlStatement gen_select(const catalog::TableMeta& meta,
                        const std::vector<std::string>& columns,
                        const RowFilter& filter,
                        std::optional<std::size_t> limit = std::nullopt,
                        std::size_t default_limit = kDefaultPageLimit);

SqlStatement gen_update(const catalog::TableMeta& meta, const Assignments& assigns,
                        const RowFilter& filter);

SqlStatement gen_delete(const catalog::TableMeta& meta, const RowFilter& filter);

/// Statement text followed by its parameter values, for audit summaries.
std::string describe_statement(const SqlStatement& stmt);

}  // namespace hdb::sql
