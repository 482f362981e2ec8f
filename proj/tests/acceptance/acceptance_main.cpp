// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hdb/server/app.hpp"
#include "site.hpp"
#include "support.hpp"

namespace {

using namespace hdb;
using namespace std::chrono_literals;
using Seconds = std::chrono::duration<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  /// Zero when the criterion carries no runtime bound.
  Seconds limit;
  std::function<Outcome()> run;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

std::vector<std::string> row_cells(const doc::Element& tr) {
  std::vector<std::string> out;
  for (const auto& child : tr.children) {
    if (const auto* e = child.element(); e != nullptr && (e->tag == "td" || e->tag == "th")) {
      out.push_back(test::text_of(*e));
    }
  }
  return out;
}

std::vector<std::vector<std::string>> table_rows(const doc::Page& page, std::string_view cls) {
  std::vector<std::vector<std::string>> out;
  const auto tables = test::find_all(page, [&](const doc::Element& e) {
    return e.tag == "table" && test::has_class(e, cls);
  });
  if (tables.empty()) return out;
  const doc::Node table(*tables[0]);
  for (const auto* tr : test::find_all(table, [](const doc::Element& e) { return e.tag == "tr"; })) {
    out.push_back(row_cells(*tr));
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : "|") + s;
  return out;
}

Outcome schema_fidelity() {
  test::DemoSite site;
  const auto cookie = site.login();
  const auto res = site.get("/db/scibsdb/table/Compound", cookie);
  if (res.status != 200) return fail(fmt::format("status {}", res.status));
  if (res.body.find("scibsdb.Compound has 210 rows") == std::string::npos) {
    return fail("row count text missing");
  }
  const auto rows = table_rows(*site.last_page(), "columns");
  const std::vector<std::string> comp_id{"CompID", "bigint(20) uns.", "NO", "PRI", "", "autoinc"};
  bool id_ok = false;
  bool name_ok = false;
  for (const auto& r : rows) {
    if (!r.empty() && r[0] == "CompID") id_ok = r == comp_id;
    if (r.size() >= 3 && r[0] == "CompName") name_ok = r[1] == "tinytext" && r[2] == "YES";
  }
  if (!id_ok || !name_ok) return fail("metadata grid mismatch");
  return {true, "has 210 rows; CompID NO/PRI/autoinc; CompName tinytext YES"};
}

Outcome operation_gating() {
  test::DemoSite site;
  const auto cookie = site.login();
  site.get("/db/scibsdb", cookie);
  std::map<std::string, std::vector<std::string>> ops;
  for (const auto& r : table_rows(*site.last_page(), "tables")) {
    if (r.size() != 2 || r[0] == "Table") continue;
    std::vector<std::string> links;
    std::istringstream in(r[1]);
    for (std::string tok; in >> tok;) links.push_back(tok);
    ops[r[0]] = links;
  }
  const std::vector<std::string> writable{"[input]", "[update]", "[delete]", "[query]", "[all]"};
  const std::vector<std::string> read_only{"[query]", "[all]"};
  std::size_t checked = 0;
  for (const auto& [table, links] : ops) {
    const auto& want = table == demo::kAuditTable ? read_only : writable;
    if (links != want) return fail(fmt::format("{}: {}", table, join(links)));
    ++checked;
  }
  if (checked != 8 || !ops.count(std::string(demo::kAuditTable))) {
    return fail(fmt::format("{} tables listed", checked));
  }
  return {true, fmt::format("{} tables; Input [query] [all]; others 5 ops", checked)};
}

std::pair<int, int> oracle_counts(const test::OracleReport& r) {
  static const std::regex re(R"(checked (\d+) documents, (\d+) failures)");
  std::smatch m;
  if (!std::regex_search(r.output, m, re)) return {-1, -1};
  return {std::stoi(m[1]), std::stoi(m[2])};
}

Outcome html_well_formed() {
  test::TempDir fuzz("accept-fuzz");
  std::mt19937_64 rng(20070824);
  for (int i = 0; i < 1000; ++i) {
    doc::Page page{fmt::format("fuzz {}", i), {}, {test::random_tree(rng, 4)}};
    test::dump_page(fuzz.path(), page, doc::render_page(page));
  }
  const auto fuzz_report = test::run_html_oracle(fuzz.path());
  const auto [fuzz_n, fuzz_f] = oracle_counts(fuzz_report);
  if (fuzz_report.exit_code != 0 || fuzz_n != 1000 || fuzz_f != 0) {
    return fail(fmt::format("fuzz: {}", fuzz_report.output.substr(0, 400)));
  }
  const auto dump = test::page_dump_dir();
  if (!dump) return fail("no page dump directory");
  const auto pages_report = test::run_html_oracle(*dump);
  const auto [pages_n, pages_f] = oracle_counts(pages_report);
  if (pages_report.exit_code != 0 || pages_n <= 0 || pages_f != 0) {
    return fail(fmt::format("pages: {}", pages_report.output.substr(0, 400)));
  }
  return {true, fmt::format("1000 fuzz trees and {} served pages, 0 failures", pages_n)};
}

Outcome crud_round_trip() {
  test::DemoSite site;
  const auto cookie = site.login();
  std::mt19937_64 rng(42);
  const std::vector<std::string> conditions{"control", "treated", "untreated"};
  const std::vector<std::string> outcomes{"none", "mild", "marked", "lethal"};
  std::int64_t mutations = 0;
  const auto audit_before = site.count("scibsdb", "SELECT COUNT(*) FROM Input");
  constexpr int kCycles = 120;
  for (int i = 0; i < kCycles; ++i) {
    std::map<std::string, std::string> values{
        {"PlateID", std::to_string(1 + rng() % 3)},
        {"Well", fmt::format("{}{}", static_cast<char>('A' + rng() % 8), 1 + rng() % 12)},
        {"StartDate", fmt::format("2007-{:02}-{:02}", 1 + rng() % 12, 1 + rng() % 28)},
        {"Condition", conditions[rng() % 3]},
        {"Outcome", outcomes[rng() % 4]},
        {"ExpNote", fmt::format("n{} <&\"'> é {}", i, rng())}};
    std::vector<std::pair<std::string, std::string>> fields(values.begin(), values.end());
    auto res = site.post("/db/scibsdb/table/Experiment/op/input", fields, cookie);
    if (res.status != 200) return fail(fmt::format("cycle {}: input status {}", i, res.status));
    ++mutations;
    const auto key = site.count("scibsdb", "SELECT MAX(ExpID) FROM Experiment");
    res = site.post("/db/scibsdb/table/Experiment/op/query",
                    {{"where.ExpID", std::to_string(key)}, {"where.ExpID.op", "eq"}}, cookie);
    const auto rows = table_rows(*site.last_page(), "results");
    if (rows.size() != 2) return fail(fmt::format("cycle {}: {} result rows", i, rows.size() - 1));
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
      auto it = values.find(rows[0][c]);
      if (it != values.end() && rows[1][c] != it->second) {
        return fail(fmt::format("cycle {}: {} = '{}' want '{}'", i, it->first, rows[1][c],
                                it->second));
      }
    }
  }
  const auto before = site.count("scibsdb", "SELECT COUNT(*) FROM Experiment");
  const auto rejected = site.post(
      "/db/scibsdb/table/Experiment/op/input",
      {{"ExpID", "999999"}, {"PlateID", "1"}, {"Well", "A1"}, {"StartDate", "2007-08-24"},
       {"Condition", "control"}},
      cookie);
  if (rejected.status != 400 || rejected.body.find("AssignedAutoIncrement") == std::string::npos) {
    return fail(fmt::format("autoinc assign gave status {}", rejected.status));
  }
  if (site.count("scibsdb", "SELECT COUNT(*) FROM Experiment") != before) {
    return fail("autoinc assign stored a row");
  }
  const auto audits = site.count("scibsdb", "SELECT COUNT(*) FROM Input") - audit_before;
  if (audits != mutations) return fail(fmt::format("{} audits for {} mutations", audits, mutations));
  return {true, fmt::format("{} cycles exact; autoinc rejected; {} audits = {} mutations", kCycles,
                            audits, mutations)};
}

Outcome date_hook() {
  test::DemoSite site;
  const auto cookie = site.login();
  std::vector<std::string> tables;
  {
    auto lease = site.app().pool().acquire_admin("ni_lhh");
    for (const auto& meta : catalog::list_tables(*lease)) tables.push_back(meta.name);
  }
  int dated = 0;
  int others = 0;
  for (const auto& table : tables) {
    const auto res = site.get(fmt::format("/db/ni_lhh/table/{}/op/input", table), cookie);
    if (res.status != 200) return fail(fmt::format("{}: status {}", table, res.status));
    const auto controls = test::find_all(*site.last_page(), [](const doc::Element& e) {
      if (test::attr(e, "name") == nullptr) return false;
      if (e.tag == "input") {
        const auto* type = test::attr(e, "type");
        return type == nullptr || (*type != "hidden" && *type != "submit");
      }
      return e.tag == "select" || e.tag == "textarea";
    });
    for (const auto* c : controls) {
      const std::string name = *test::attr(*c, "name");
      std::optional<std::string> prefill;
      if (c->tag == "input") {
        if (const auto* v = test::attr(*c, "value")) prefill = *v;
      } else if (c->tag == "textarea") {
        if (auto t = test::text_of(*c); !t.empty()) prefill = t;
      } else {
        const doc::Node node(*c);
        for (const auto* o : test::find_all(node, [](const doc::Element& e) {
               return e.tag == "option" && test::attr(e, "selected") != nullptr;
             })) {
          prefill = test::text_of(*o);
        }
      }
      const bool is_date = name.size() >= 4 && name.compare(name.size() - 4, 4, "Date") == 0;
      if (is_date) {
        if (prefill != "2007-8-24") {
          return fail(fmt::format("{}.{} prefilled '{}'", table, name, prefill.value_or("")));
        }
        ++dated;
      } else {
        if (prefill) return fail(fmt::format("{}.{} prefilled '{}'", table, name, *prefill));
        ++others;
      }
    }
  }
  if (dated == 0) return fail("no date columns found");
  return {true, fmt::format("{} date controls \"2007-8-24\"; {} other controls empty", dated,
                            others)};
}

Outcome auth_modes() {
  const std::string peer = "129.215.137.168";
  {
    test::SiteSetup setup;
    setup.tweak_config = [](server::ServerConfig& cfg) { cfg.auth_mode = auth::SessionIdle{2s}; };
    test::DemoSite site(setup);
    auto cookie = site.login();
    site.clock().advance(3s);
    const auto idle = site.get("/home", cookie);
    if (idle.status != 303 || idle.header("Location") == nullptr ||
        idle.header("Location")->rfind("/login", 0) != 0) {
      return fail(fmt::format("idle 3 s: status {}", idle.status));
    }
    cookie = site.login();
    for (int t = 1; t <= 10; ++t) {
      site.clock().advance(1s);
      const auto r = site.get("/home", cookie);
      if (r.status != 200) return fail(fmt::format("interaction at {} s: status {}", t, r.status));
    }
  }
  {
    test::SiteSetup setup;
    setup.tweak_config = [](server::ServerConfig& cfg) { cfg.auth_mode = auth::IpWindow{5s}; };
    test::DemoSite site(setup);
    site.login("nicos", "nicos-demo", peer);
    site.clock().advance(3s);
    if (const auto r = site.get("/home", "", peer); r.status != 200) {
      return fail(fmt::format("window 3 s: status {}", r.status));
    }
    if (const auto r = site.get("/home", "", "10.0.0.9"); r.status != 303) {
      return fail("window: other peer admitted");
    }
    site.clock().advance(3s);
    if (const auto r = site.get("/home", "", peer); r.status != 303) {
      return fail(fmt::format("window 6 s: status {}", r.status));
    }
  }
  return {true, "idle 2 s: t=3 s redirected, 1 s steps for 10 s valid; window 5 s: t=3 s "
                "valid, t=6 s invalid"};
}

std::vector<std::pair<std::string, std::string>> batch_fields(const std::string& plate,
                                                              char well_row, int corrupt_row) {
  std::vector<std::pair<std::string, std::string>> f{{"shared.PlateID", plate},
                                                     {"shared.StartDate", "2007-8-24"}};
  for (int i = 1; i <= 6; ++i) {
    const std::string p = fmt::format("row{}.", i);
    f.emplace_back(p + "Well", fmt::format("{}{}", well_row, i));
    f.emplace_back(p + "Condition", i == corrupt_row ? "boiled" : "treated");
    f.emplace_back(p + "Outcome", "none");
    f.emplace_back(p + "ExpNote", fmt::format("batch row {}", i));
  }
  return f;
}

Outcome batch_atomicity() {
  test::DemoSite site;
  const auto cookie = site.login();
  const std::string count_sql = "SELECT COUNT(*) FROM Experiment";
  const auto before = site.count("scibsdb", count_sql);
  const auto ok = site.post("/view/observations/op/input", batch_fields("2", 'G', 0), cookie);
  if (ok.status != 200) return fail(fmt::format("batch status {}", ok.status));
  const auto stored = site.count("scibsdb", count_sql) - before;
  const auto sharing = site.count(
      "scibsdb",
      "SELECT COUNT(*) FROM Experiment WHERE PlateID = 2 AND StartDate = '2007-08-24' "
      "AND ExpNote LIKE 'batch row %'");
  if (stored != 6 || sharing != 6) {
    return fail(fmt::format("{} rows stored, {} share values", stored, sharing));
  }
  const auto mid = site.count("scibsdb", count_sql);
  const auto bad = site.post("/view/observations/op/input", batch_fields("3", 'H', 3), cookie);
  if (bad.status != 400) return fail(fmt::format("corrupt batch status {}", bad.status));
  const auto after = site.count("scibsdb", count_sql) - mid;
  if (after != 0) return fail(fmt::format("corrupt batch stored {} rows", after));
  return {true, "6 rows stored sharing PlateID/StartDate; row 3 corrupted stores 0"};
}

Outcome diagnostics() {
  test::SiteSetup setup;
  setup.demo.ni_lhh_unreachable = true;
  test::DemoSite site(setup);
  const auto cookie = site.login();
  const auto first = site.get("/home", cookie);
  const auto second = site.get("/home", cookie);
  const std::string needle = "unable_to_connect_to_db_source(";
  if (first.body.find(needle) == std::string::npos) return fail("first page lacks message");
  if (second.body.find(needle) != std::string::npos) return fail("second page repeats message");
  return {true, "first page has unable_to_connect_to_db_source(, second does not"};
}

FormData scan_form(const std::string& name) {
  FormData f;
  f.fields = {{"ScanName", name},          {"SampleID", "S-108525"},
              {"Operator", "nicos"},        {"ScanDate", "2007-8-24"},
              {"Polarity", "positive"},     {"ScanNote", "acceptance"}};
  f.files["ScanLoc"] = {name + "_scan.cdf", "application/octet-stream",
                        demo::synthetic_scan(16, 6, 3)};
  return f;
}

std::vector<catalog::Value> scan_row(test::DemoSite& site, const std::string& name,
                                     std::vector<std::string>* columns) {
  auto lease = site.app().pool().acquire_admin("scibsdb");
  const std::vector<catalog::Value> params{name};
  const auto rs = lease->query("SELECT * FROM SpecScan WHERE ScanName = ?", params);
  if (columns != nullptr) *columns = rs.columns;
  if (rs.rows.size() != 1) return {};
  return rs.rows[0];
}

bool inside(const std::filesystem::path& root, const std::filesystem::path& p) {
  const auto r = std::filesystem::weakly_canonical(root).string() + "/";
  return std::filesystem::weakly_canonical(p).string().rfind(r, 0) == 0;
}

Outcome derived_fill() {
  const auto derived = demo::spec_scan_derived_columns();
  const std::set<std::string> derived_set(derived.begin(), derived.end());
  {
    test::DemoSite site;
    const auto cookie = site.login();
    const auto res =
        site.post_form("/db/scibsdb/table/SpecScan/op/input", scan_form("accept1"), cookie);
    if (res.status != 200) return fail(fmt::format("upload status {}", res.status));
    std::vector<std::string> columns;
    const auto row = scan_row(site, "accept1", &columns);
    if (row.size() != 18 || columns.size() != 18) {
      return fail(fmt::format("{} columns stored", row.size()));
    }
    int filled = 0;
    int derived_filled = 0;
    int artifacts = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (std::holds_alternative<std::monostate>(row[i])) continue;
      ++filled;
      if (!derived_set.count(columns[i])) continue;
      ++derived_filled;
      if (columns[i] == "ScanAICLoc" || columns[i] == "ScanIMGLoc") {
        const auto p = site.layout().upload_root / std::get<std::string>(row[i]);
        if (std::filesystem::is_regular_file(p) && inside(site.layout().upload_root, p)) {
          ++artifacts;
        }
      }
    }
    if (filled != 18 || derived_filled != 11 || artifacts != 2) {
      return fail(fmt::format("{}/18 filled, {}/11 derived, {}/2 artifacts", filled,
                              derived_filled, artifacts));
    }
  }
  {
    test::SiteSetup setup;
    setup.site = site::bundled_slave({"--hang"});
    setup.site.eval_timeout = 1s;
    test::DemoSite site(setup);
    const auto cookie = site.login();
    const auto res =
        site.post_form("/db/scibsdb/table/SpecScan/op/input", scan_form("accept2"), cookie);
    if (res.status != 200) return fail(fmt::format("timeout variant status {}", res.status));
    std::vector<std::string> columns;
    const auto row = scan_row(site, "accept2", &columns);
    if (row.empty()) return fail("timeout variant stored no row");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (derived_set.count(columns[i]) && !std::holds_alternative<std::monostate>(row[i])) {
        return fail(fmt::format("timeout variant: {} not NULL", columns[i]));
      }
    }
    const auto items = test::find_all(*site.last_page(), [](const doc::Element& e) {
      return e.tag == "div" && test::has_class(e, "diagnostics");
    });
    std::size_t n = 0;
    if (!items.empty()) n = test::by_tag(doc::Node(*items[0]), "li").size();
    if (n != 1) return fail(fmt::format("timeout variant: {} diagnostics", n));
  }
  return {true, "18/18 columns, 11 derived, 2 artifacts on disk; timeout: derived NULL, row "
                "stored, 1 diagnostic"};
}

std::string hostile_name(std::mt19937_64& rng) {
  static const std::vector<std::string> parts{
      "../", "..\\", "/etc/passwd", "%2e%2e%2f", "....//", "/", "\\", "~", "C:\\", "..",
      ".",   "a",    "scan",        ".cdf",      "é",      "$(rm)", ";", "|", "*", "?"};
  std::string name;
  for (int n = 1 + static_cast<int>(rng() % 10); n > 0; --n) {
    if (rng() % 4 == 0) {
      name += static_cast<char>(rng() % 32);
    } else {
      name += parts[rng() % parts.size()];
    }
  }
  if (rng() % 20 == 0) name += std::string(300, 'x');
  return name;
}

std::set<std::filesystem::path> files_outside(const std::filesystem::path& dir,
                                              const std::filesystem::path& excluded) {
  std::set<std::filesystem::path> out;
  for (auto it = std::filesystem::recursive_directory_iterator(dir);
       it != std::filesystem::recursive_directory_iterator(); ++it) {
    if (it->path() == excluded) {
      it.disable_recursion_pending();
      continue;
    }
    out.insert(it->path());
  }
  return out;
}

Outcome upload_safety() {
  test::DemoSite site;
  const auto& layout = site.layout();
  const auto base = layout.dir.parent_path();
  const auto before = files_outside(base, layout.upload_root);
  std::mt19937_64 rng(1337);
  int escapes = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto name = hostile_name(rng);
    std::istringstream content("x");
    const auto rec = site.app().uploads().store("scibsdb", "SpecScan", "ScanLoc", name, content,
                                                site.clock().now());
    const auto p = site.app().uploads().absolute(rec.stored_path);
    if (!inside(layout.upload_root, p) || !std::filesystem::is_regular_file(p)) ++escapes;
  }
  if (files_outside(base, layout.upload_root) != before) ++escapes;
  if (escapes != 0) return fail(fmt::format("{} escapes", escapes));
  return {true, "1000 hostile names stored inside upload_root, 0 escapes"};
}

}  // namespace

int main() {
  std::optional<test::TempDir> local_dump;
  if (!test::page_dump_dir()) {
    local_dump.emplace("accept-pages");
    ::setenv("HDB_PAGE_DUMP", local_dump->path().c_str(), 1);
  }

  // The HTML check runs last so it covers every page served here.
  const std::vector<Criterion> criteria{
      {"schema-fidelity", 5s, schema_fidelity},
      {"operation-gating", 1s, operation_gating},
      {"crud-round-trip", 30s, crud_round_trip},
      {"date-hook", 0s, date_hook},
      {"auth-modes", 0s, auth_modes},
      {"batch-atomicity", 0s, batch_atomicity},
      {"diagnostics", 0s, diagnostics},
      {"derived-fill", 10s, derived_fill},
      {"upload-safety", 0s, upload_safety},
      {"html-well-formed", 60s, html_well_formed},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(fmt::format("exception: {}", e.what()));
    }
    const Seconds elapsed = std::chrono::steady_clock::now() - start;
    std::string timing = fmt::format("{:.2f} s", elapsed.count());
    if (c.limit.count() > 0) {
      timing += fmt::format(" < {:.0f} s", c.limit.count());
      if (o.pass && elapsed > c.limit) o = fail(o.detail + "; over time limit");
    }
    if (!o.pass) ++failures;
    fmt::print("{} {}: {} [{}]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail, timing);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
