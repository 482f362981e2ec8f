#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "hdb/server/config.hpp"

namespace hdb::test {

namespace fs = std::filesystem;

TempDir::TempDir(std::string_view tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() /
                     (std::string(tag) + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(counter++) + "-" + std::to_string(rd() % 100000));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temporary directory");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

nlohmann::json tree_json(const doc::Node& node) {
  if (const auto* t = node.text()) return t->content;
  if (const auto* r = node.raw()) return r->content;
  const auto& e = *node.element();
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& [k, v] : e.attrs) attrs.push_back({k, v});
  nlohmann::json children = nlohmann::json::array();
  for (const auto& c : e.children) children.push_back(tree_json(c));
  return {{"t", e.tag}, {"a", attrs}, {"c", children}};
}

std::optional<fs::path> page_dump_dir() {
  const char* env = std::getenv("HDB_PAGE_DUMP");
  if (!env || !*env) return std::nullopt;
  return fs::path(env);
}

void dump_page(const fs::path& dir, const doc::Page& page, const std::string& html) {
  static std::atomic<unsigned> counter{0};
  fs::create_directories(dir);
  std::string base = "p" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  std::ofstream(dir / (base + ".json")) << tree_json(doc::page_tree(page)).dump();
  std::ofstream(dir / (base + ".html"), std::ios::binary) << html;
}

void dump_page(const doc::Page& page, const std::string& html) {
  if (auto dir = page_dump_dir()) dump_page(*dir, page, html);
}

OracleReport run_html_oracle(const fs::path& dir) {
  std::string cmd = std::string("python3 '") + HDB_HTML_ORACLE + "' '" + dir.string() + "' 2>&1";
  OracleReport report;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return report;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) report.output.append(buf.data(), n);
  int status = ::pclose(pipe);
  report.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return report;
}

catalog::DataSourceConfig scratch_source(const fs::path& file, std::string name) {
  if (!fs::exists(file)) std::ofstream(file, std::ios::binary);
  catalog::DataSourceConfig cfg;
  cfg.name = std::move(name);
  cfg.location = file.string();
  cfg.db_user = "admin";
  return cfg;
}

TimePoint paper_login_time() {
  return from_civil(CivilTime{2007, 8, 24, 14, 22, 40});
}

DemoSite::DemoSite(SiteSetup setup) : dir_("hdb-site"), clock_(setup.start) {
  layout_ = demo::write_demo(dir_.path(), setup.demo);
  auto cfg = server::load_config(layout_.config_file);
  if (setup.tweak_config) setup.tweak_config(cfg);
  server::finalize_config(cfg);
  hooks::HookRegistry registry;
  site::register_hooks(registry, setup.site);
  if (setup.extra_hooks) setup.extra_hooks(registry);
  app_ = std::make_unique<server::App>(std::move(cfg), std::move(registry), clock_.as_clock());
  if (setup.register_views) {
    for (auto& v : site::site_views()) app_->register_view(std::move(v));
  }
  app_->set_render_observer(
      [this](const server::Request&, const server::Response& res, const doc::Page& page) {
        last_page_ = page;
        dump_page(page, res.body);
      });
}

std::string DemoSite::login(const std::string& user, const std::string& password,
                            const std::string& peer) {
  auto res = post("/login", {{"user", user}, {"password", password}}, {}, peer);
  auto id = server::session_cookie(res);
  if (res.status != 303 || !id) {
    throw std::runtime_error("login failed with status " + std::to_string(res.status));
  }
  return *id;
}

server::Response DemoSite::send(server::Request req, const std::string& cookie) {
  if (!cookie.empty()) {
    req.headers["cookie"] = std::string(server::kSessionCookie) + "=" + cookie;
  }
  return app_->handle(req);
}

server::Response DemoSite::get(const std::string& target, const std::string& cookie,
                               const std::string& peer) {
  server::Request req;
  req.method = "GET";
  auto q = target.find('?');
  req.path = target.substr(0, q);
  if (q != std::string::npos) req.query = target.substr(q + 1);
  req.peer = peer;
  return send(std::move(req), cookie);
}

server::Response DemoSite::post(const std::string& target,
                                const std::vector<std::pair<std::string, std::string>>& fields,
                                const std::string& cookie, const std::string& peer) {
  server::Request req;
  req.method = "POST";
  auto q = target.find('?');
  req.path = target.substr(0, q);
  if (q != std::string::npos) req.query = target.substr(q + 1);
  req.peer = peer;
  req.headers["content-type"] = "application/x-www-form-urlencoded";
  for (const auto& [k, v] : fields) {
    if (!req.body.empty()) req.body += '&';
    req.body += server::url_encode(k) + "=" + server::url_encode(v);
  }
  return send(std::move(req), cookie);
}

server::Response DemoSite::post_form(const std::string& target, FormData form,
                                     const std::string& cookie, const std::string& peer) {
  server::Request req;
  req.method = "POST";
  req.path = target;
  req.peer = peer;
  req.headers["content-type"] = "multipart/form-data; boundary=decoded";
  req.decoded_form = std::move(form);
  return send(std::move(req), cookie);
}

std::int64_t DemoSite::count(const std::string& db, const std::string& sql) {
  auto lease = app_->pool().acquire_admin(db);
  auto rows = lease->query(sql);
  if (rows.rows.empty() || rows.rows[0].empty()) return -1;
  const auto& v = rows.rows[0][0];
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return -1;
}

bool has_class(const doc::Element& e, std::string_view cls) {
  const auto* c = attr(e, "class");
  if (!c) return false;
  std::string_view s = *c;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto end = s.find(' ', pos);
    if (end == std::string_view::npos) end = s.size();
    if (s.substr(pos, end - pos) == cls) return true;
    pos = end + 1;
  }
  return false;
}

const std::string* attr(const doc::Element& e, std::string_view name) {
  for (const auto& [k, v] : e.attrs) {
    if (k == name) return &v;
  }
  return nullptr;
}

void walk(const doc::Node& node, const std::function<void(const doc::Element&)>& visit) {
  const auto* e = node.element();
  if (!e) return;
  visit(*e);
  for (const auto& c : e->children) walk(c, visit);
}

std::vector<const doc::Element*> find_all(const doc::Node& root,
                                          const std::function<bool(const doc::Element&)>& pred) {
  std::vector<const doc::Element*> out;
  walk(root, [&](const doc::Element& e) {
    if (pred(e)) out.push_back(&e);
  });
  return out;
}

std::vector<const doc::Element*> find_all(const doc::Page& page,
                                          const std::function<bool(const doc::Element&)>& pred) {
  std::vector<const doc::Element*> out;
  for (const auto& n : page.body) {
    auto part = find_all(n, pred);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<const doc::Element*> by_tag(const doc::Node& root, std::string_view tag) {
  return find_all(root, [&](const doc::Element& e) { return e.tag == tag; });
}

std::string text_of(const doc::Element& e) { return doc::text_content(doc::Node(e)); }

namespace {

const std::vector<std::string> kPieces = {
    "a",  "Z",  "0",  " ",      "  ",  "<",   ">",    "&",        "\"",   "'",    "=",
    "/",  "é",  "日本", "\xF0\x9F\x98\x80", "&amp;", "<!--", "-->", "</p>", "\n", "\t", "x y",
    "]]>", "`", "\xC2\xA0", "ß",  "Ω"};

std::string random_string(std::mt19937_64& rng, std::size_t max_pieces) {
  std::uniform_int_distribution<std::size_t> len(0, max_pieces);
  std::uniform_int_distribution<std::size_t> pick(0, kPieces.size() - 1);
  std::string out;
  for (std::size_t i = 0, n = len(rng); i < n; ++i) out += kPieces[pick(rng)];
  return out;
}

std::vector<doc::Attribute> random_attrs(std::mt19937_64& rng) {
  static const std::vector<std::string> kNames = {"class", "id", "title", "data-x", "lang",
                                                  "data-hdb-enhance", "name", "alt"};
  std::uniform_int_distribution<int> count(0, 3);
  std::vector<doc::Attribute> attrs;
  for (int i = 0, n = count(rng); i < n; ++i) {
    std::string name;
    if (rng() % 2) {
      name = kNames[rng() % kNames.size()];
    } else {
      name = "d";
      for (int j = 0, m = 1 + static_cast<int>(rng() % 6); j < m; ++j) {
        name += static_cast<char>('a' + rng() % 26);
      }
    }
    bool dup = false;
    for (const auto& [k, v] : attrs) dup = dup || k == name;
    if (!dup) attrs.emplace_back(name, random_string(rng, 6));
  }
  return attrs;
}

doc::Node phrasing(std::mt19937_64& rng, int depth);

std::vector<doc::Node> phrasing_children(std::mt19937_64& rng, int depth) {
  std::vector<doc::Node> out;
  for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) out.push_back(phrasing(rng, depth));
  return out;
}

doc::Node phrasing(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> kTags = {"span", "em", "strong", "b", "i", "code", "small"};
  static const std::vector<std::string> kVoids = {"br", "img", "input"};
  auto roll = rng() % 10;
  if (depth <= 0 || roll < 4) return doc::text(random_string(rng, 5));
  if (roll < 6) return doc::el(kVoids[rng() % kVoids.size()], random_attrs(rng));
  return doc::el(kTags[rng() % kTags.size()], random_attrs(rng), phrasing_children(rng, depth - 1));
}

doc::Node flow(std::mt19937_64& rng, int depth);

std::vector<doc::Node> flow_children(std::mt19937_64& rng, int depth) {
  std::vector<doc::Node> out;
  for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) out.push_back(flow(rng, depth));
  return out;
}

doc::Node flow(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> kContainers = {"div", "section", "article"};
  if (depth <= 0) return phrasing(rng, 0);
  switch (rng() % 7) {
    case 0:
      return doc::el(kContainers[rng() % kContainers.size()], random_attrs(rng),
                     flow_children(rng, depth - 1));
    case 1:
      return doc::el("p", random_attrs(rng), phrasing_children(rng, depth - 1));
    case 2: {
      std::vector<doc::Node> items;
      for (int i = 0, n = static_cast<int>(rng() % 3); i < n; ++i) {
        items.push_back(doc::el("li", random_attrs(rng), flow_children(rng, depth - 1)));
      }
      return doc::el("ul", random_attrs(rng), std::move(items));
    }
    case 3: {
      std::vector<doc::Node> rows;
      for (int i = 0, n = 1 + static_cast<int>(rng() % 2); i < n; ++i) {
        std::vector<doc::Node> cells;
        for (int j = 0, m = 1 + static_cast<int>(rng() % 3); j < m; ++j) {
          cells.push_back(doc::el("td", random_attrs(rng), flow_children(rng, depth - 1)));
        }
        rows.push_back(doc::el("tr", random_attrs(rng), std::move(cells)));
      }
      std::vector<doc::Node> body;
      body.push_back(doc::el("tbody", random_attrs(rng), std::move(rows)));
      return doc::el("table", random_attrs(rng), std::move(body));
    }
    case 4:
      return doc::el("hr", random_attrs(rng));
    default:
      return phrasing(rng, depth);
  }
}

}  // namespace

doc::Node random_tree(std::mt19937_64& rng, int depth) {
  return doc::el("div", random_attrs(rng), flow_children(rng, depth));
}

}  // namespace hdb::test
