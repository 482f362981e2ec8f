#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "hdb/server/app.hpp"
#include "hdb/server/config.hpp"
#include "hdb/server/diagnostics.hpp"
#include "hdb/server/http.hpp"
#include "hdb/server/upload_store.hpp"
#include "support.hpp"

namespace hdb {
namespace {

using server::Request;
using server::Response;

TEST(Http, UrlCoding) {
  EXPECT_EQ(server::url_encode("a b/c?d=é"), "a%20b%2Fc%3Fd%3D%C3%A9");
  EXPECT_EQ(server::url_encode("A-z_0.9~"), "A-z_0.9~");
  EXPECT_EQ(server::url_decode("a%20b+c"), "a b+c");
  EXPECT_EQ(server::url_decode("a%20b+c", true), "a b c");
  EXPECT_EQ(server::url_decode("%zz%4"), "%zz%4");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    for (int n = static_cast<int>(rng() % 20); n > 0; --n) s += static_cast<char>(rng() % 256);
    EXPECT_EQ(server::url_decode(server::url_encode(s)), s);
  }
}

TEST(Http, SplitPath) {
  EXPECT_EQ(server::split_path("/db/scibsdb/table/Compound"),
            (std::vector<std::string>{"db", "scibsdb", "table", "Compound"}));
  EXPECT_EQ(server::split_path("//view//a%2Fb/"), (std::vector<std::string>{"view", "a/b"}));
  EXPECT_TRUE(server::split_path("/").empty());
}

TEST(Http, Urlencoded) {
  const auto kv = server::parse_urlencoded("user=nicos&password=a%26b+c&empty=&flag");
  ASSERT_EQ(kv.size(), 4u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"user", "nicos"}));
  EXPECT_EQ(kv[1].second, "a&b c");
  EXPECT_EQ(kv[2].second, "");
  EXPECT_EQ(kv[3].first, "flag");
}

TEST(Http, Multipart) {
  using namespace std::string_literals;
  const std::string body =
      "--XyZ\r\n"
      "Content-Disposition: form-data; name=\"ScanName\"\r\n\r\n"
      "run 1\r\n"
      "--XyZ\r\n"
      "Content-Disposition: form-data; name=\"ScanLoc\"; filename=\"a_scan.cdf\"\r\n"
      "Content-Type: application/octet-stream\r\n\r\n"
      "1 2 3\r\n\r\nbinary\0data\r\n"
      "--XyZ--\r\n"s;
  const std::string_view view(body.data(), body.size());
  ASSERT_EQ(server::header_param("multipart/form-data; boundary=XyZ", "boundary"), "XyZ");
  const auto form = server::parse_multipart(view, "XyZ");
  EXPECT_EQ(form.fields.at("ScanName"), "run 1");
  ASSERT_TRUE(form.file("ScanLoc"));
  EXPECT_EQ(form.file("ScanLoc")->filename, "a_scan.cdf");
  EXPECT_EQ(form.file("ScanLoc")->content, std::string("1 2 3\r\n\r\nbinary\0data", 20));
  EXPECT_ERRC(server::parse_multipart("garbage", "XyZ"), Errc::kInvalidValue);
}

TEST(Http, ReadRequest) {
  std::istringstream in(
      "POST /login?next=%2Fhome HTTP/1.1\r\n"
      "Host: localhost\r\n"
      "Content-Type: application/x-www-form-urlencoded\r\n"
      "Cookie: other=1; hdb_session=5807-da08-fbaa-fe69\r\n"
      "Content-Length: 27\r\n\r\n"
      "user=nicos&password=secret1");
  const auto req = server::read_request(in, 1024);
  EXPECT_EQ(req.method, "POST");
  EXPECT_EQ(req.path, "/login");
  EXPECT_EQ(req.query, "next=%2Fhome");
  EXPECT_EQ(req.cookie("hdb_session"), "5807-da08-fbaa-fe69");
  ASSERT_TRUE(req.header("content-type"));
  const auto form = server::parse_form(req);
  EXPECT_EQ(form.fields.at("user"), "nicos");
  EXPECT_EQ(form.fields.at("next"), "/home");

  std::istringstream big("POST / HTTP/1.1\r\nContent-Length: 5000\r\n\r\n" +
                         std::string(5000, 'x'));
  EXPECT_ERRC(server::read_request(big, 1024), Errc::kUploadTooLarge);
  std::istringstream bad("NONSENSE\r\n\r\n");
  EXPECT_ERRC(server::read_request(bad, 1024), Errc::kInvalidValue);
}

TEST(Http, WriteResponse) {
  Response res;
  res.status = 303;
  res.headers.emplace_back("Location", "/home");
  res.body = "see";
  std::ostringstream out;
  server::write_response(out, res);
  const auto s = out.str();
  EXPECT_EQ(s.rfind("HTTP/1.1 303 See Other\r\n", 0), 0u);
  EXPECT_NE(s.find("Location: /home\r\n"), std::string::npos);
  EXPECT_NE(s.find("Content-Length: 3\r\n"), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - 7), "\r\n\r\nsee");
}

TEST(Config, ParsesBlocks) {
  const auto cfg = server::parse_config(
      "# demo\n"
      "title = \"hdb # lab\"\n"
      "port = 9090\n"
      "read_only += scibsdb.Input\n"
      "read_only += scibsdb.Plate\n"
      "source scibsdb {\n"
      "  location = scibsdb.sqlite\n"
      "  db_user = hdb\n"
      "}\n",
      "/srv/hdb");
  EXPECT_EQ(cfg.title, "hdb # lab");
  EXPECT_EQ(cfg.port, 9090u);
  EXPECT_EQ(cfg.read_only, (std::vector<std::string>{"scibsdb.Input", "scibsdb.Plate"}));
  ASSERT_EQ(cfg.sources.size(), 1u);
  EXPECT_EQ(cfg.sources[0].name, "scibsdb");
}

TEST(Config, RejectsMalformed) {
  EXPECT_ERRC(server::parse_config("port = many\n"), Errc::kInvalidConfig);
  EXPECT_ERRC(server::parse_config("source x {\n  db_user = a\n}\n"), Errc::kInvalidConfig);
  EXPECT_ERRC(server::parse_config("source x {\n  location = a\n"), Errc::kInvalidConfig);
  EXPECT_ERRC(server::load_config("/nonexistent/hdb.conf"), Errc::kInvalidConfig);
  try {
    server::parse_config("title = a\nbogus line\n");
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(e.detail().find("line 2"), std::string::npos) << e.detail();
  }
}

TEST(Config, DemoLoads) {
  test::TempDir dir("cfg");
  const auto layout = demo::write_demo(dir.path());
  auto cfg = server::load_config(layout.config_file);
  EXPECT_NO_THROW(server::finalize_config(cfg));
  EXPECT_EQ(cfg.sources.size(), 2u);
  EXPECT_FALSE(cfg.users.empty());
}

TEST(UploadStore, SanitizesNames) {
  EXPECT_EQ(server::sanitize_file_name("../../etc/passwd"), "passwd");
  EXPECT_EQ(server::sanitize_file_name("C:\\x\\a b.cdf"), "a_b.cdf");
  EXPECT_EQ(server::sanitize_file_name("..."), "upload");
  EXPECT_EQ(server::sanitize_file_name(""), "upload");
  EXPECT_LE(server::sanitize_file_name(std::string(500, 'a')).size(), 120u);
}

TEST(UploadStore, CanonicalLayout) {
  test::TempDir dir("up");
  server::UploadStore store(dir / "u");
  const auto now = test::paper_login_time();
  std::istringstream a("one"), b("two");
  const auto r1 = store.store("scibsdb", "SpecScan", "ScanLoc", "run_scan.cdf", a, now);
  const auto r2 = store.store("scibsdb", "SpecScan", "ScanLoc", "run_scan.cdf", b, now);
  EXPECT_EQ(r1.stored_path.rfind("scibsdb/SpecScan/ScanLoc/", 0), 0u) << r1.stored_path;
  EXPECT_NE(r1.stored_path, r2.stored_path);
  EXPECT_EQ(r1.stored_path.substr(r1.stored_path.size() - 9), "_scan.cdf");
  EXPECT_EQ(r1.size, 3u);
  EXPECT_EQ(r1.original_name, "run_scan.cdf");
  EXPECT_TRUE(std::filesystem::exists(store.absolute(r1.stored_path)));
  EXPECT_TRUE(std::filesystem::exists(store.absolute(r2.stored_path)));
}

TEST(UploadStore, HostileNamesStayInside) {
  test::TempDir dir("up");
  server::UploadStore store(dir / "u");
  const auto root = std::filesystem::weakly_canonical(store.root());
  std::mt19937_64 rng(5);
  const std::vector<std::string> parts{"..", "/", "\\", ".", "%2e%2e", "\0", "a", "~", "*",
                                       "\n", " ", "C:", "é", "$(x)", ";"};
  for (int i = 0; i < 300; ++i) {
    std::string name;
    for (int n = 1 + static_cast<int>(rng() % 8); n > 0; --n) {
      const auto& p = parts[rng() % parts.size()];
      name += p.empty() ? std::string(1, '\0') : p;
    }
    std::istringstream in("x");
    const auto rec = store.store("scibsdb", "SpecScan", "ScanLoc", name, in,
                                 test::paper_login_time());
    const auto p = std::filesystem::weakly_canonical(store.absolute(rec.stored_path));
    EXPECT_EQ(p.string().rfind(root.string() + "/", 0), 0u) << p;
    EXPECT_TRUE(std::filesystem::is_regular_file(p));
  }
}

TEST(UploadStore, CapEnforced) {
  test::TempDir dir("up");
  server::UploadStore store(dir / "u", 4);
  std::istringstream in("too large");
  EXPECT_ERRC(store.store("d", "t", "c", "f", in, test::paper_login_time()),
              Errc::kUploadTooLarge);
}

TEST(Diagnostics, DrainInOrderOnce) {
  server::DiagnosticStore store;
  const auto now = test::paper_login_time();
  store.push("s1", "first", now);
  store.push_all("s1", {"second", "third"}, now);
  store.push("s2", "other", now);
  EXPECT_EQ(store.pending("s1"), 3u);
  EXPECT_EQ(store.drain("s1"), (std::vector<std::string>{"first", "second", "third"}));
  EXPECT_TRUE(store.drain("s1").empty());
  store.forget("s2");
  EXPECT_EQ(store.pending("s2"), 0u);
}

std::vector<std::string> link_targets(const doc::Page& page, std::string_view cls) {
  std::vector<std::string> out;
  for (const auto* a : test::find_all(page, [&](const doc::Element& e) {
         return e.tag == "a" && test::has_class(e, cls);
       })) {
    out.push_back(*test::attr(*a, "href"));
  }
  return out;
}

std::vector<std::string> link_texts(const doc::Page& page, std::string_view cls) {
  std::vector<std::string> out;
  for (const auto* a : test::find_all(page, [&](const doc::Element& e) {
         return e.tag == "a" && test::has_class(e, cls);
       })) {
    out.push_back(test::text_of(*a));
  }
  return out;
}

class AppTest : public ::testing::Test {
 protected:
  test::DemoSite site_{};
};

TEST_F(AppTest, RootAndUnauthenticated) {
  auto res = site_.get("/");
  EXPECT_EQ(res.status, 303);
  EXPECT_EQ(*res.header("Location"), "/login");
  res = site_.get("/db/scibsdb");
  EXPECT_EQ(res.status, 303);
  EXPECT_EQ(*res.header("Location"), "/login?next=%2Fdb%2Fscibsdb");
  EXPECT_NE(res.body.find("name=\"password\""), std::string::npos);
  const auto cookie = site_.login();
  res = site_.get("/", cookie);
  EXPECT_EQ(res.status, 303);
  EXPECT_EQ(*res.header("Location"), "/home");
}

TEST_F(AppTest, FailedLogin) {
  const auto res = site_.post("/login", {{"user", "nicos"}, {"password", "wrong"}});
  EXPECT_EQ(res.status, 401);
  EXPECT_FALSE(server::session_cookie(res));
  const auto other = site_.post("/login", {{"user", "nobody"}, {"password", "wrong"}});
  EXPECT_EQ(other.status, 401);
  EXPECT_EQ(test::text_of(*test::find_all(*site_.last_page(), [](const doc::Element& e) {
              return test::has_class(e, "notice");
            })[0]),
            "invalid user name or password");
}

TEST_F(AppTest, LoginHonoursNext) {
  const auto res = site_.post(
      "/login", {{"user", "nicos"}, {"password", "nicos-demo"}, {"next", "/db/scibsdb"}});
  EXPECT_EQ(res.status, 303);
  EXPECT_EQ(*res.header("Location"), "/db/scibsdb");
  const auto evil = site_.post(
      "/login", {{"user", "nicos"}, {"password", "nicos-demo"}, {"next", "//evil.example"}});
  EXPECT_EQ(*evil.header("Location"), "/home");
}

TEST_F(AppTest, NotFound) {
  const auto cookie = site_.login();
  for (const char* target : {"/nowhere", "/db/scibsdb/table/Nope", "/db/nope", "/view/nope",
                             "/view/observations/op/nope", "/static/missing.js",
                             "/static/..%2Fhdb.conf", "/files/..%2F..%2Fhdb.conf"}) {
    EXPECT_EQ(site_.get(target, cookie).status, 404) << target;
  }
}

TEST_F(AppTest, HomeListsDatabasesAndViews) {
  const auto cookie = site_.login();
  const auto res = site_.get("/home", cookie);
  EXPECT_EQ(res.status, 200);
  const auto& page = *site_.last_page();
  EXPECT_EQ(link_texts(page, "database"), (std::vector<std::string>{"scibsdb", "ni_lhh"}));
  EXPECT_EQ(link_texts(page, "view"),
            (std::vector<std::string>{"observations", "scans", "compound_mixes"}));
  EXPECT_NE(res.body.find("src=\"/static/hdb.js\""), std::string::npos);
}

TEST_F(AppTest, NavigationOnEveryPage) {
  const auto cookie = site_.login();
  for (const char* target :
       {"/home", "/profile", "/db/scibsdb", "/db/scibsdb/table/Compound",
        "/db/scibsdb/table/Compound/op/query", "/db/ni_lhh/table/Patient/op/input",
        "/view/observations", "/view/observations/op/input", "/view/scans/op/all"}) {
    const auto res = site_.get(target, cookie);
    EXPECT_EQ(res.status, 200) << target;
    const auto& page = *site_.last_page();
    EXPECT_EQ(link_targets(page, "nav-home"), std::vector<std::string>{"/home"}) << target;
    EXPECT_EQ(link_targets(page, "nav-profile"), std::vector<std::string>{"/profile"});
    EXPECT_EQ(link_targets(page, "nav-logout"), std::vector<std::string>{"/logout"});
  }
}

TEST_F(AppTest, DatabasePageGatesOperations) {
  const auto cookie = site_.login();
  site_.get("/db/scibsdb", cookie);
  const auto& page = *site_.last_page();
  std::map<std::string, std::vector<std::string>> ops;
  for (const auto* row : test::find_all(page, [](const doc::Element& e) { return e.tag == "tr"; })) {
    const doc::Node node(*row);
    const auto tables = test::find_all(node, [](const doc::Element& e) {
      return e.tag == "a" && test::has_class(e, "table");
    });
    if (tables.empty()) continue;
    for (const auto* a : test::find_all(node, [](const doc::Element& e) {
           return e.tag == "a" && test::has_class(e, "op");
         })) {
      ops[test::text_of(*tables[0])].push_back(test::text_of(*a));
    }
  }
  const std::vector<std::string> all{"[input]", "[update]", "[delete]", "[query]", "[all]"};
  EXPECT_EQ(ops["Compound"], all);
  EXPECT_EQ(ops["Input"], (std::vector<std::string>{"[query]", "[all]"}));
  EXPECT_EQ(ops.size(), 8u);
}

TEST_F(AppTest, ReadOnlyOpRefused) {
  const auto cookie = site_.login();
  EXPECT_EQ(site_.get("/db/scibsdb/table/Input/op/input", cookie).status, 403);
  EXPECT_EQ(site_.get("/db/scibsdb/table/Compound/op/bogus", cookie).status, 404);
}

TEST_F(AppTest, TablePage) {
  const auto cookie = site_.login();
  const auto res = site_.get("/db/scibsdb/table/Compound", cookie);
  EXPECT_NE(res.body.find("scibsdb.Compound has 210 rows."), std::string::npos);
  EXPECT_NE(res.body.find("Table columns:"), std::string::npos);
}

TEST_F(AppTest, ProfileShowsSession) {
  const auto cookie = site_.login();
  const auto res = site_.get("/profile", cookie);
  EXPECT_NE(res.body.find("With user name: nicos"), std::string::npos);
  EXPECT_NE(res.body.find("Login time: 2007-08-24T14:22:40Z"), std::string::npos);
  EXPECT_NE(res.body.find("Session: " + cookie), std::string::npos);
}

TEST_F(AppTest, LogoutEndsSession) {
  const auto cookie = site_.login();
  EXPECT_EQ(site_.get("/home", cookie).status, 200);
  const auto out = site_.get("/logout", cookie);
  EXPECT_EQ(out.status, 303);
  EXPECT_EQ(site_.get("/home", cookie).status, 303);
}

TEST_F(AppTest, InputThroughHttp) {
  const auto cookie = site_.login();
  const auto before = site_.count("scibsdb", "SELECT COUNT(*) FROM Mix");
  const auto res = site_.post("/db/scibsdb/table/Mix/op/input",
                              {{"MixName", "via http"}, {"MixNote", ""}}, cookie);
  EXPECT_EQ(res.status, 200) << res.body;
  EXPECT_EQ(site_.count("scibsdb", "SELECT COUNT(*) FROM Mix"), before + 1);
  EXPECT_EQ(site_.count("scibsdb", "SELECT COUNT(*) FROM Input WHERE TableName = 'Mix'"), 1);
}

TEST(AppDiagnostics, DeliveredOnce) {
  test::SiteSetup setup;
  setup.demo.ni_lhh_unreachable = true;
  test::DemoSite site(setup);
  const auto cookie = site.login();
  const auto first = site.get("/home", cookie);
  EXPECT_NE(first.body.find("unable_to_connect_to_db_source("), std::string::npos);
  const auto second = site.get("/home", cookie);
  EXPECT_EQ(second.body.find("unable_to_connect_to_db_source("), std::string::npos);
  EXPECT_EQ(site.get("/db/ni_lhh", cookie).status, 503);
}

TEST(AppStatic, ServesStylesheet) {
  test::SiteSetup setup;
  setup.demo.static_dir = HDB_STATIC_DIR;
  test::DemoSite site(setup);
  const auto res = site.get("/static/hdb.css");
  EXPECT_EQ(res.status, 200);
  EXPECT_EQ(res.content_type.rfind("text/css", 0), 0u);
}

}  // namespace
}  // namespace hdb
