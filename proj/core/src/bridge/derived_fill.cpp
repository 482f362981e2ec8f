#include "hdb/bridge/derived_fill.hpp"

#include <stdlib.h>

#include <cctype>
#include <charconv>
#include <filesystem>

#include <fmt/format.h>

#include "hdb/bridge/slave.hpp"

namespace hdb::bridge {
namespace fs = std::filesystem;
namespace {

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

std::optional<catalog::Value> parse_number(const std::string& text) {
  std::int64_t i = 0;
  auto [ip, iec] = std::from_chars(text.data(), text.data() + text.size(), i);
  if (iec == std::errc{} && ip == text.data() + text.size()) return i;
  double d = 0;
  auto [dp, dec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (dec == std::errc{} && dp == text.data() + text.size()) return d;
  return std::nullopt;
}

fs::path make_workdir(const fs::path& root) {
  const fs::path base = root / ".hdb-work";
  fs::create_directories(base);
  std::string tmpl = (base / "fill-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(Errc::kDiskFull, fmt::format("cannot create work directory under {}", base.string()));
  }
  return fs::path(tmpl);
}

bool inside(const fs::path& dir, const fs::path& p) {
  std::error_code ec;
  const auto canonical = fs::weakly_canonical(p, ec);
  if (ec) return false;
  const auto rel = canonical.lexically_relative(fs::weakly_canonical(dir));
  return !rel.empty() && *rel.begin() != ".." && *rel.begin() != ".";
}

struct WorkdirGuard {
  fs::path path;
  ~WorkdirGuard() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

void validate_spec(const DerivedFillSpec& spec, const catalog::TableMeta& table) {
  if (table.find(spec.trigger.column) == nullptr) {
    throw Error(Errc::kUnknownColumn, fmt::format("{}.{}", table.name, spec.trigger.column));
  }
  for (const auto& out : spec.outputs) {
    const auto* col = table.find(out.column);
    if (col == nullptr) {
      throw Error(Errc::kUnknownColumn, fmt::format("{}.{}", table.name, out.column));
    }
    if (out.column == spec.trigger.column || !col->nullable) {
      throw Error(Errc::kInvalidName,
                  fmt::format("{} cannot be a derived column (trigger or NOT NULL)", out.column));
    }
    if (!is_valid_name(out.column)) throw Error(Errc::kInvalidName, out.column);
  }
}

std::map<std::string, catalog::Value> run_derived_fill(const DerivedFillSpec& spec,
                                                       const server::UploadRecord& uploaded,
                                                       server::UploadStore& store, TimePoint now,
                                                       DiagnosticLog* diags) {
  std::map<std::string, catalog::Value> result;
  for (const auto& out : spec.outputs) result[out.column] = std::monostate{};
  const std::string label =
      fmt::format("{}.{}.{}", spec.trigger.db, spec.trigger.table, spec.trigger.column);

  std::map<std::string, std::string> raw;
  WorkdirGuard work;
  try {
    work.path = make_workdir(store.root());
    const std::string upload_path = store.absolute(uploaded.stored_path).string();
    auto slave = SlaveProcess::spawn(spec.command, spec.args);
    for (const auto& step : spec.steps) {
      const Expr concrete = substitute(substitute(step, kUploadPlaceholder, upload_path),
                                       kWorkdirPlaceholder, work.path.string());
      slave.eval(concrete, spec.eval_timeout);
    }
    for (const auto& out : spec.outputs) {
      raw[out.column] = slave.eval(call("cat", {ident(out.column)}), spec.eval_timeout).output;
    }
    slave.shutdown(std::chrono::seconds(5));
  } catch (const Error& e) {
    note(diags, fmt::format("derived_fill_failed({}): {}", label, e.what()));
    return result;
  }

  for (const auto& out : spec.outputs) {
    const std::string text = trim(raw[out.column]);
    if (text.empty()) {
      note(diags, fmt::format("derived_fill_empty({}): no value for {}", label, out.column));
      continue;
    }
    std::visit(
        [&](const auto& kind) {
          using T = std::decay_t<decltype(kind)>;
          if constexpr (std::is_same_v<T, ParseNumber>) {
            if (auto v = parse_number(text)) {
              result[out.column] = *v;
            } else {
              note(diags, fmt::format("derived_fill_unparsable({}): {} = '{}'", label, out.column,
                                      text));
            }
          } else if constexpr (std::is_same_v<T, ParseString>) {
            result[out.column] = text;
          } else {
            fs::path produced(text);
            if (produced.is_relative()) produced = work.path / produced;
            std::error_code ec;
            if (!inside(work.path, produced) || !fs::is_regular_file(produced, ec)) {
              note(diags, fmt::format("derived_fill_missing_artifact({}): {} = '{}'", label,
                                      out.column, text));
              return;
            }
            try {
              const auto rec = store.adopt(spec.trigger.db, spec.trigger.table, kind.subdir,
                                           produced, now);
              result[out.column] = rec.stored_path;
            } catch (const Error& e) {
              note(diags, fmt::format("derived_fill_store_failed({}): {}", label, e.what()));
            }
          }
        },
        out.kind);
  }
  return result;
}

void merge_derived(sql::Assignments& assigns, const std::map<std::string, catalog::Value>& derived,
                   DiagnosticLog* diags) {
  for (const auto& [column, value] : derived) {
    if (assigns.find(column) != assigns.end()) {
      note(diags, fmt::format("derived value for user-supplied column {} ignored", column));
      continue;
    }
    assigns.emplace(column, value);
  }
}

}  // namespace hdb::bridge
