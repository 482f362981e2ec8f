#pragma once

// Shared test scaffolding: scratch directories, the demo site wired to an
// App with an injected clock, request helpers, page dumping for the HTML
// oracle and tree queries.

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "hdb/common.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/server/app.hpp"
#include "site.hpp"

/// Expects `stmt` to throw hdb::Error carrying `errc`.
#define EXPECT_ERRC(stmt, errc)                                           \
  do {                                                                    \
    try {                                                                 \
      stmt;                                                               \
      ADD_FAILURE() << #stmt " did not throw";                            \
    } catch (const ::hdb::Error& hdb_error_) {                            \
      EXPECT_EQ(hdb_error_.code(), errc) << hdb_error_.what();            \
    }                                                                     \
  } while (0)

namespace hdb::test {

class TempDir {
 public:
  explicit TempDir(std::string_view tag = "hdb");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

nlohmann::json tree_json(const doc::Node& node);

/// Directory named by HDB_PAGE_DUMP, if set.
std::optional<std::filesystem::path> page_dump_dir();
/// Writes `html` and the tree of `page` as a pair of files under `dir`.
void dump_page(const std::filesystem::path& dir, const doc::Page& page, const std::string& html);
/// Dumps to page_dump_dir() when set.
void dump_page(const doc::Page& page, const std::string& html);

struct OracleReport {
  int exit_code = -1;
  std::string output;
};
/// Runs the html5lib oracle over a dump directory.
OracleReport run_html_oracle(const std::filesystem::path& dir);

/// Source for a SQLite file, created empty when missing; db user "admin".
catalog::DataSourceConfig scratch_source(const std::filesystem::path& file,
                                         std::string name = "scratch");

/// 2007-08-24T14:22:40Z
TimePoint paper_login_time();

struct SiteSetup {
  demo::DemoOptions demo;
  site::SiteOptions site = site::bundled_slave();
  bool register_views = true;
  TimePoint start = paper_login_time();
  /// Applied to the configuration after loading.
  std::function<void(server::ServerConfig&)> tweak_config;
  /// Extra hooks registered after the site's.
  std::function<void(hooks::HookRegistry&)> extra_hooks;
};

/// The demo site in a scratch directory, served by an App whose clock the
/// test controls. Every rendered page is dumped for the HTML oracle.
class DemoSite {
 public:
  explicit DemoSite(SiteSetup setup = {});

  server::App& app() { return *app_; }
  ManualClock& clock() { return clock_; }
  const demo::DemoLayout& layout() const { return layout_; }

  /// Last page tree rendered.
  const std::optional<doc::Page>& last_page() const { return last_page_; }

  /// Returns the session cookie; throws when login fails.
  std::string login(const std::string& user = "nicos", const std::string& password = "nicos-demo",
                    const std::string& peer = "129.215.137.168");

  server::Response get(const std::string& target, const std::string& cookie = {},
                       const std::string& peer = "129.215.137.168");
  server::Response post(const std::string& target,
                        const std::vector<std::pair<std::string, std::string>>& fields,
                        const std::string& cookie = {},
                        const std::string& peer = "129.215.137.168");
  server::Response post_form(const std::string& target, FormData form,
                             const std::string& cookie = {},
                             const std::string& peer = "129.215.137.168");

  std::int64_t count(const std::string& db, const std::string& sql);

 private:
  server::Response send(server::Request req, const std::string& cookie);

  TempDir dir_;
  demo::DemoLayout layout_;
  ManualClock clock_;
  std::unique_ptr<server::App> app_;
  std::optional<doc::Page> last_page_;
};

// Tree queries.

bool has_class(const doc::Element& e, std::string_view cls);
const std::string* attr(const doc::Element& e, std::string_view name);
void walk(const doc::Node& node, const std::function<void(const doc::Element&)>& visit);
std::vector<const doc::Element*> find_all(const doc::Node& root,
                                          const std::function<bool(const doc::Element&)>& pred);
std::vector<const doc::Element*> find_all(const doc::Page& page,
                                          const std::function<bool(const doc::Element&)>& pred);
std::vector<const doc::Element*> by_tag(const doc::Node& root, std::string_view tag);
std::string text_of(const doc::Element& e);

/// Random Raw-free tree respecting HTML content models, so that a
/// conformant parser must reproduce it.
doc::Node random_tree(std::mt19937_64& rng, int depth = 4);

}  // namespace hdb::test
