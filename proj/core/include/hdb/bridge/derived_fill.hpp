#pragma once

// Derived-field autofill: after a file is uploaded into a trigger column, a
// slave interpreter analyses it and the results fill other columns of the
// same row before the insert is generated.
//
// Steps are expression templates; the placeholders `{upload}` (absolute path
// of the stored upload) and `{workdir}` (a scratch directory the slave may
// write artifacts into) are substituted inside string literals. Steps are
// expected to assign one variable per output column, named after the column;
// each output is then read back with `cat(<column>)`.

#include <chrono>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "hdb/bridge/expr.hpp"
#include "hdb/catalog.hpp"
#include "hdb/common.hpp"
#include "hdb/server/upload_store.hpp"
#include "hdb/sqlgen.hpp"

namespace hdb::bridge {

inline constexpr std::string_view kUploadPlaceholder = "{upload}";
inline constexpr std::string_view kWorkdirPlaceholder = "{workdir}";

struct ColumnRef {
  std::string db;
  std::string table;
  std::string column;
};

struct ParseNumber {};
struct ParseString {};
/// The slave reports a path of a file it wrote under {workdir}; the file is
/// moved into upload storage under `{db}/{table}/{subdir}`.
struct ArtifactPath {
  std::string subdir;
};
using OutputKind = std::variant<ParseNumber, ParseString, ArtifactPath>;

struct DerivedOutput {
  std::string column;
  OutputKind kind;
};

struct DerivedFillSpec {
  ColumnRef trigger;
  std::string command;
  std::vector<std::string> args;
  std::vector<Expr> steps;
  std::vector<DerivedOutput> outputs;
  std::chrono::duration<double> eval_timeout{std::chrono::seconds(60)};
};

/// Output columns must exist in the trigger table, be nullable, differ from
/// the trigger column and be valid interpreter names. Throws UnknownColumn or
/// InvalidName.
void validate_spec(const DerivedFillSpec& spec, const catalog::TableMeta& table);

/// Runs the analysis. Never throws for slave failures: a spawn failure or a
/// timeout leaves every output NULL and adds one diagnostic; an unusable
/// single output leaves that column NULL with one diagnostic.
std::map<std::string, catalog::Value> run_derived_fill(const DerivedFillSpec& spec,
                                                       const server::UploadRecord& uploaded,
                                                       server::UploadStore& store, TimePoint now,
                                                       DiagnosticLog* diags);

/// Adds derived values for columns the user did not supply. A derived value
/// for a user-supplied column is dropped with a diagnostic.
void merge_derived(sql::Assignments& assigns, const std::map<std::string, catalog::Value>& derived,
                   DiagnosticLog* diags);

}  // namespace hdb::bridge
