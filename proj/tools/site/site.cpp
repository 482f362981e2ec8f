#include "site.hpp"

#include <fmt/format.h>

#include "hdb/auth.hpp"
#include "hdb/server/http.hpp"
#include "hdb/server/pages.hpp"
#include "hdb/sqlgen.hpp"

#ifndef HDB_SITE_SLAVE_SCRIPT
#define HDB_SITE_SLAVE_SCRIPT "scan_slave.py"
#endif

namespace hdb::site {
namespace {

using bridge::ArtifactPath;
using bridge::call;
using bridge::ident;
using bridge::ParseNumber;
using bridge::ParseString;
using bridge::str;
using doc::el;
using doc::el_text;

bridge::Expr stat(std::string column, std::string key) {
  return bridge::assign(std::move(column), call("scan_stat", {ident("scan"), str(std::move(key))}));
}

views::ColumnRef col(std::string table, std::string column) {
  return {"scibsdb", std::move(table), std::move(column)};
}

}  // namespace

std::string bundled_slave_script() { return HDB_SITE_SLAVE_SCRIPT; }

SiteOptions bundled_slave(std::vector<std::string> flags) {
  SiteOptions o;
  o.slave_args.push_back(bundled_slave_script());
  for (auto& f : flags) o.slave_args.push_back(std::move(f));
  return o;
}

bridge::DerivedFillSpec spec_scan_fill(const SiteOptions& options) {
  bridge::DerivedFillSpec spec;
  spec.trigger = {"scibsdb", "SpecScan", "ScanLoc"};
  spec.command = options.slave_command;
  spec.args = options.slave_args;
  spec.eval_timeout = options.eval_timeout;
  spec.steps = {
      bridge::assign("scan", call("read_scan", {str("{upload}")})),
      stat("SpectraNof", "nof"),
      stat("ScanTimeMin", "time_min"),
      stat("ScanTimeMax", "time_max"),
      stat("MzMin", "mz_min"),
      stat("MzMax", "mz_max"),
      stat("MassMin", "mass_min"),
      stat("MassMax", "mass_max"),
      bridge::assign("PrfMethod", str("bin")),
      bridge::assign("PrfStep", bridge::num(0.1)),
      bridge::assign("ScanAICLoc", call("aic_plot", {ident("scan"), str("{workdir}/aic.svg")})),
      bridge::assign("ScanIMGLoc", call("heatmap", {ident("scan"), str("{workdir}/heatmap.svg"),
                                                    ident("PrfMethod"), ident("PrfStep")})),
  };
  spec.outputs = {
      {"SpectraNof", ParseNumber{}},  {"ScanTimeMin", ParseNumber{}},
      {"ScanTimeMax", ParseNumber{}}, {"MzMin", ParseNumber{}},
      {"MzMax", ParseNumber{}},       {"MassMin", ParseNumber{}},
      {"MassMax", ParseNumber{}},     {"PrfMethod", ParseString{}},
      {"PrfStep", ParseNumber{}},     {"ScanAICLoc", ArtifactPath{"ScanAICLoc"}},
      {"ScanIMGLoc", ArtifactPath{"ScanIMGLoc"}},
  };
  return spec;
}

doc::Page display_artifacts(const hooks::PageRequest& req) {
  const auto meta = req.catalog.describe("scibsdb", "SpecScan");
  sql::RowFilter filter;
  const auto* name = req.form.field("ScanName");
  if (name != nullptr && !name->empty()) {
    filter.conjuncts.push_back({"ScanName", sql::Relation::kEq, *name});
  }
  const auto stmt =
      sql::gen_select(meta, {"ScanName", "SampleID", "ScanDate", "ScanLoc", "ScanAICLoc",
                             "ScanIMGLoc"},
                      filter, 20);
  auto lease = req.pool.acquire("scibsdb", auth::db_credentials(req.session));
  const auto rows = lease->query(stmt.text, stmt.params);

  std::vector<doc::Node> body{el_text("h1", fmt::format("{} [disp]", req.view.name))};
  body.push_back(el("form", {{"method", "post"}, {"class", "op-filter"}},
                    {el_text("label", "Scan ", {{"for", "disp-scan"}}),
                     el("input", {{"type", "text"}, {"name", "ScanName"}, {"id", "disp-scan"}}),
                     el_text("button", "Show", {{"type", "submit"}})}));
  if (rows.rows.empty()) body.push_back(server::message("No scans match."));
  for (const auto& r : rows.rows) {
    const std::string scan = catalog::display(r[0]);
    std::vector<doc::Node> items{
        el_text("h2", scan),
        el_text("p", fmt::format("Sample {} scanned {}", catalog::display(r[1]),
                                 catalog::display(r[2])))};
    if (!catalog::is_null(r[3])) {
      items.push_back(el("p", {doc::text("Raw data: "),
                               doc::link(server::file_url(req.files_url, catalog::display(r[3])),
                                         catalog::display(r[3]))}));
    }
    for (std::size_t i : {std::size_t{4}, std::size_t{5}}) {
      if (catalog::is_null(r[i])) continue;
      const std::string url = server::file_url(req.files_url, catalog::display(r[i]));
      items.push_back(el("figure", {el("img", {{"src", url}, {"alt", rows.columns[i]}}),
                                    el_text("figcaption", rows.columns[i])}));
    }
    body.push_back(el("section", {{"class", "artifact"}}, std::move(items)));
  }
  return doc::Page{req.view.name, {}, std::move(body)};
}

void register_hooks(hooks::HookRegistry& registry, const SiteOptions& options) {
  hooks::register_date_defaults(registry, "ni_lhh");
  const auto fill = spec_scan_fill(options);
  registry.add(hooks::HookKind::kDerivedFill,
               hooks::HookMatcher{"scibsdb", "SpecScan", hooks::ExactColumn{"ScanLoc"}},
               [fill](const hooks::HookSite&) { return std::optional(fill); });
  registry.add(hooks::HookKind::kOutputLink,
               hooks::HookMatcher{"scibsdb", "ExternalDataSource", hooks::ExactColumn{"SourceURL"}},
               [](const hooks::HookSite&, std::string_view value) -> std::optional<std::string> {
                 if (value.rfind("https://", 0) == 0 || value.rfind("http://", 0) == 0) {
                   return std::string(value);
                 }
                 return std::nullopt;
               });
  registry.add(hooks::HookKind::kInputTextareaSize,
               hooks::HookMatcher{"scibsdb", std::nullopt, hooks::ColumnSuffix{"Note"}},
               [](const hooks::HookSite&) { return std::optional(hooks::TextareaDims{6, 72}); });
  registry.add_handler(std::string(kDisplayHandler), display_artifacts);
}

std::vector<views::ViewDef> site_views() {
  views::ViewDef observations;
  observations.name = "observations";
  observations.columns = {col("Experiment", "PlateID"),   col("Experiment", "StartDate"),
                          col("Experiment", "Well"),      col("Experiment", "Condition"),
                          col("Experiment", "Outcome"),   col("Experiment", "ExpNote")};
  views::BatchInput batch;
  batch.shared = {col("Experiment", "PlateID"), col("Experiment", "StartDate")};
  batch.per_row = {col("Experiment", "Well"), col("Experiment", "Condition"),
                   col("Experiment", "Outcome"), col("Experiment", "ExpNote")};
  observations.ops = {batch, views::Standard{OperationKind::kAll}};

  views::ViewDef scans;
  scans.name = "scans";
  for (const auto& c : {"ScanName", "SampleID", "ScanDate", "Polarity", "ScanLoc", "ScanAICLoc",
                        "ScanIMGLoc"}) {
    scans.columns.push_back(col("SpecScan", c));
  }
  scans.ops = {views::Standard{OperationKind::kQuery}, views::Standard{OperationKind::kAll},
               views::Custom{"disp", std::string(kDisplayHandler)}};

  views::ViewDef mixes;
  mixes.name = "compound_mixes";
  mixes.columns = {col("Mix", "MixName"), col("MixIngredient", "Concentration"),
                   col("Compound", "CompName"), col("Compound", "CompMr")};
  mixes.join_keys = {{col("Mix", "MixID"), col("MixIngredient", "MixID")},
                     {col("MixIngredient", "CompID"), col("Compound", "CompID")}};
  mixes.ops = {views::Standard{OperationKind::kQuery}, views::Standard{OperationKind::kAll}};
  return {observations, scans, mixes};
}

}  // namespace hdb::site
