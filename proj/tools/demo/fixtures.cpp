#include "fixtures.hpp"

#include <sqlite3.h>

#include <fstream>
#include <random>

#include <fmt/format.h>

#include "hdb/auth.hpp"
#include "hdb/common.hpp"
#include "hdb/ops.hpp"

namespace hdb::demo {
namespace fs = std::filesystem;
namespace {

catalog::Connection create_empty(const fs::path& file, const std::string& name) {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  fs::remove(file, ec);
  sqlite3* db = nullptr;
  const int rc = sqlite3_open_v2(file.c_str(), &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                                 nullptr);
  sqlite3_close(db);
  if (rc != SQLITE_OK) throw Error(Errc::kDataSourceUnavailable, file.string());
  catalog::DataSourceConfig cfg;
  cfg.name = name;
  cfg.location = file.string();
  cfg.db_user = "admin";
  return catalog::open_source(cfg);
}

void declare(catalog::Connection& conn, std::string_view table,
             std::initializer_list<std::pair<std::string_view, std::string_view>> types) {
  for (const auto& [col, type] : types) catalog::declare_column_type(conn, table, col, type);
}

const std::vector<std::string> kStems = {"Nemadipine", "Levamisole", "Ivermectin", "Aldicarb",
                                         "Serotonin", "Fluoxetine", "Imipramine", "Muscimol",
                                         "Dopamine", "Octopamine"};

}  // namespace

std::vector<std::string> spec_scan_user_columns() {
  return {"ScanName", "SampleID", "Operator", "ScanDate", "Polarity", "ScanNote", "ScanLoc"};
}

std::vector<std::string> spec_scan_derived_columns() {
  return {"SpectraNof", "ScanTimeMin", "ScanTimeMax", "MzMin",      "MzMax",     "MassMin",
          "MassMax",    "PrfMethod",   "PrfStep",     "ScanAICLoc", "ScanIMGLoc"};
}

void create_scibsdb(const fs::path& file, std::uint64_t seed) {
  auto conn = create_empty(file, "scibsdb");
  conn.execute_script(R"(
CREATE TABLE Compound (
  CompID INTEGER PRIMARY KEY,
  CompName TEXT,
  CompMr REAL NOT NULL,
  pKa REAL,
  EduID INTEGER,
  CompNote TEXT
);
CREATE TABLE Experiment (
  ExpID INTEGER PRIMARY KEY,
  PlateID INTEGER NOT NULL,
  Well TEXT NOT NULL,
  StartDate TEXT NOT NULL,
  Condition TEXT,
  Outcome TEXT,
  ExpNote TEXT
);
CREATE TABLE ExternalDataSource (
  SourceID INTEGER PRIMARY KEY,
  SourceName TEXT NOT NULL UNIQUE,
  SourceURL TEXT
);
CREATE TABLE Mix (
  MixID INTEGER PRIMARY KEY,
  MixName TEXT NOT NULL,
  MixNote TEXT
);
CREATE TABLE MixIngredient (
  MixID INTEGER NOT NULL,
  CompID INTEGER NOT NULL,
  Concentration REAL,
  PRIMARY KEY (MixID, CompID)
);
CREATE INDEX MixIngredientComp ON MixIngredient (CompID);
CREATE TABLE Plate (
  PlateID INTEGER PRIMARY KEY,
  PlateLabel TEXT NOT NULL,
  Wells INTEGER NOT NULL
);
CREATE TABLE SpecScan (
  ScanName TEXT PRIMARY KEY NOT NULL,
  SampleID TEXT NOT NULL,
  Operator TEXT,
  ScanDate TEXT,
  Polarity TEXT,
  ScanNote TEXT,
  ScanLoc TEXT,
  SpectraNof INTEGER,
  ScanTimeMin REAL,
  ScanTimeMax REAL,
  MzMin REAL,
  MzMax REAL,
  MassMin REAL,
  MassMax REAL,
  PrfMethod TEXT,
  PrfStep REAL,
  ScanAICLoc TEXT,
  ScanIMGLoc TEXT
);
)");
  conn.execute_script(ops::audit_table_ddl(kAuditTable));

  declare(conn, "Compound",
          {{"CompID", "bigint(20) unsigned"},
           {"CompName", "tinytext"},
           {"CompMr", "float unsigned"},
           {"pKa", "float"},
           {"EduID", "bigint(20) unsigned"},
           {"CompNote", "text"}});
  declare(conn, "Experiment",
          {{"ExpID", "bigint(20) unsigned"},
           {"PlateID", "bigint(20) unsigned"},
           {"Well", "tinytext"},
           {"StartDate", "date"},
           {"Condition", "enum('control','treated','untreated')"},
           {"Outcome", "enum('none','mild','marked','lethal')"},
           {"ExpNote", "text"}});
  declare(conn, "ExternalDataSource",
          {{"SourceID", "bigint(20) unsigned"}, {"SourceName", "tinytext"}, {"SourceURL", "text"}});
  declare(conn, "Mix", {{"MixID", "bigint(20) unsigned"}, {"MixName", "tinytext"}, {"MixNote", "text"}});
  declare(conn, "MixIngredient",
          {{"MixID", "bigint(20) unsigned"}, {"CompID", "bigint(20) unsigned"}, {"Concentration", "float unsigned"}});
  declare(conn, "Plate",
          {{"PlateID", "bigint(20) unsigned"}, {"PlateLabel", "tinytext"}, {"Wells", "int(11) unsigned"}});
  declare(conn, "SpecScan",
          {{"ScanName", "tinytext"},
           {"SampleID", "tinytext"},
           {"Operator", "tinytext"},
           {"ScanDate", "date"},
           {"Polarity", "enum('positive','negative')"},
           {"ScanNote", "text"},
           {"ScanLoc", "tinytext"},
           {"SpectraNof", "int(11) unsigned"},
           {"ScanTimeMin", "float"},
           {"ScanTimeMax", "float"},
           {"MzMin", "float"},
           {"MzMax", "float"},
           {"MassMin", "float"},
           {"MassMax", "float"},
           {"PrfMethod", "tinytext"},
           {"PrfStep", "float"},
           {"ScanAICLoc", "tinytext"},
           {"ScanIMGLoc", "tinytext"}});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mr(90.0, 650.0);
  std::uniform_real_distribution<double> pka(1.0, 13.0);
  catalog::Connection::Transaction txn(conn);
  for (std::size_t i = 1; i <= kCompoundRows; ++i) {
    const std::vector<catalog::Value> row = {
        i % 17 == 0 ? catalog::Value{} : catalog::Value{fmt::format("{}-{:03}", kStems[i % kStems.size()], i)},
        std::round(mr(rng) * 100.0) / 100.0,
        i % 5 == 0 ? catalog::Value{} : catalog::Value{std::round(pka(rng) * 100.0) / 100.0},
        i % 3 == 0 ? catalog::Value{} : catalog::Value{static_cast<std::int64_t>(1000 + i)},
        catalog::Value{}};
    conn.execute("INSERT INTO Compound (CompName, CompMr, pKa, EduID, CompNote) VALUES (?,?,?,?,?)",
                 row);
  }
  for (std::int64_t p = 1; p <= 3; ++p) {
    const std::vector<catalog::Value> row = {p, fmt::format("P-{:02}", p), std::int64_t{96}};
    conn.execute("INSERT INTO Plate VALUES (?,?,?)", row);
  }
  const std::vector<catalog::Value> src = {std::int64_t{1}, std::string("ChEBI"),
                                           std::string("https://www.ebi.ac.uk/chebi/")};
  conn.execute("INSERT INTO ExternalDataSource VALUES (?,?,?)", src);
  txn.commit();
}

void create_ni_lhh(const fs::path& file) {
  auto conn = create_empty(file, "ni_lhh");
  conn.execute_script(R"(
CREATE TABLE Patient (
  PatientID INTEGER PRIMARY KEY,
  Initials TEXT NOT NULL,
  BirthDate TEXT,
  AdmissionDate TEXT NOT NULL,
  Ward TEXT,
  Notes TEXT
);
CREATE TABLE Sample (
  SampleID INTEGER PRIMARY KEY,
  PatientID INTEGER NOT NULL,
  CollectionDate TEXT NOT NULL,
  ReceivedDate TEXT,
  Kind TEXT,
  Volume REAL
);
)");
  declare(conn, "Patient",
          {{"PatientID", "bigint(20) unsigned"},
           {"Initials", "tinytext"},
           {"BirthDate", "date"},
           {"AdmissionDate", "date"},
           {"Ward", "tinytext"},
           {"Notes", "text"}});
  declare(conn, "Sample",
          {{"SampleID", "bigint(20) unsigned"},
           {"PatientID", "bigint(20) unsigned"},
           {"CollectionDate", "date"},
           {"ReceivedDate", "datetime"},
           {"Kind", "enum('blood','urine','csf')"},
           {"Volume", "float unsigned"}});
}

std::string synthetic_scan(std::size_t spectra, std::size_t peaks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mz(50.0, 1200.0);
  std::uniform_real_distribution<double> intensity(10.0, 1e6);
  std::string out;
  for (std::size_t s = 0; s < spectra; ++s) {
    const double t = 12.5 + 0.75 * static_cast<double>(s);
    for (std::size_t p = 0; p < peaks; ++p) {
      out += fmt::format("{:.3f} {:.4f} {:.1f}\n", t, mz(rng), intensity(rng));
    }
  }
  return out;
}

DemoLayout write_demo(const fs::path& dir, const DemoOptions& options) {
  DemoLayout layout;
  layout.dir = fs::absolute(dir);
  layout.scibsdb = layout.dir / "scibsdb.sqlite";
  layout.ni_lhh = layout.dir / "ni_lhh.sqlite";
  layout.upload_root = layout.dir / "uploads";
  layout.config_file = layout.dir / "hdb.conf";
  fs::create_directories(layout.upload_root);
  create_scibsdb(layout.scibsdb);
  std::error_code ec;
  fs::remove(layout.ni_lhh, ec);
  if (!options.ni_lhh_unreachable) create_ni_lhh(layout.ni_lhh);

  std::ofstream out(layout.config_file);
  out << "# hdb demonstration site\n";
  out << "title = hdb demo\n";
  out << "port = " << options.port << "\n";
  out << "auth_mode = " << options.auth_mode << "\n";
  out << "upload_root = uploads\n";
  out << "audit_table = scibsdb." << kAuditTable << "\n";
  out << "file_columns += scibsdb.SpecScan.ScanLoc\n";
  if (!options.static_dir.empty()) out << "static_dir = \"" << options.static_dir.string() << "\"\n";
  out << "\nsource scibsdb {\n  location = scibsdb.sqlite\n  db_user = hdb\n}\n";
  out << "\nsource ni_lhh {\n  dsn = nilhhloc\n  location = "
      << (options.ni_lhh_unreachable ? "missing/ni_lhh.sqlite" : "ni_lhh.sqlite")
      << "\n  db_user = hdb\n}\n";
  for (const auto& u : options.users) {
    out << "\nuser " << u.name << " {\n  password_hash = "
        << auth::hash_password(u.password, auth::HashParams::minimal()) << "\n  db_user = "
        << u.db_user << "\n}\n";
  }
  if (!out) throw Error(Errc::kInvalidConfig, "cannot write " + layout.config_file.string());
  return layout;
}

}  // namespace hdb::demo
