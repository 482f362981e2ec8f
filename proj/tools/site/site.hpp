#pragma once

// The demonstration site's extensions: date defaults for ni_lhh, scan
// analysis autofill for scibsdb.SpecScan, a URL link for external sources,
// the artifact display handler and the site's views.

#include <chrono>
#include <string>
#include <vector>

#include "hdb/bridge/derived_fill.hpp"
#include "hdb/hooks.hpp"
#include "hdb/views.hpp"

namespace hdb::site {

struct SiteOptions {
  std::string slave_command = "python3";
  std::vector<std::string> slave_args;
  std::chrono::duration<double> eval_timeout{std::chrono::seconds(60)};
};

/// Path of the bundled analysis slave script.
std::string bundled_slave_script();
/// Options running the bundled slave with `flags` appended.
SiteOptions bundled_slave(std::vector<std::string> flags = {});

bridge::DerivedFillSpec spec_scan_fill(const SiteOptions& options);

/// Name under which the artifact display handler is registered.
inline constexpr std::string_view kDisplayHandler = "disp";

doc::Page display_artifacts(const hooks::PageRequest& req);

void register_hooks(hooks::HookRegistry& registry, const SiteOptions& options);

/// `observations` (batch input of well experiments sharing plate and start
/// date), `scans` (scan listing with the artifact display op) and
/// `compound_mixes` (mix ingredients joined with compounds).
std::vector<views::ViewDef> site_views();

}  // namespace hdb::site
