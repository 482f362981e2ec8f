#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"
#include "hdb/views.hpp"
#include "site.hpp"
#include "support.hpp"

namespace hdb {
namespace {

using views::BatchInput;
using views::ColumnRef;
using views::Custom;
using views::Standard;
using views::ViewDef;

ColumnRef ref(std::string table, std::string column) {
  return {"scibsdb", std::move(table), std::move(column)};
}

class ViewsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    demo::create_scibsdb(dir_ / "scibsdb.sqlite");
    auto s = test::scratch_source(dir_ / "scibsdb.sqlite", "scibsdb");
    s.read_only_tables = {"Input"};
    pool_ = std::make_unique<catalog::SourcePool>(std::vector<catalog::DataSourceConfig>{s});
    site::register_hooks(hooks_, site::bundled_slave());
    ctx_.pool = pool_.get();
    ctx_.hooks = &hooks_;
    ctx_.audit = ops::AuditTarget{"scibsdb", "Input"};
    ctx_.clock = clock_.as_clock();
    session_.id = "5807-da08-fbaa-fe69";
    session_.user = "nicos";
    session_.db_user = "nicos";
  }

  std::int64_t scalar(const std::string& sql) {
    auto lease = pool_->acquire_admin("scibsdb");
    return std::get<std::int64_t>(lease->query(sql).rows[0][0]);
  }

  ViewDef observations() { return site::site_views()[0]; }

  FormData batch_form(int rows, int corrupt_row = 0) {
    FormData f;
    f.fields["shared.PlateID"] = "2";
    f.fields["shared.StartDate"] = "2007-8-24";
    const char* wells[] = {"A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"};
    for (int i = 1; i <= rows; ++i) {
      const std::string p = "row" + std::to_string(i) + ".";
      f.fields[p + "Well"] = wells[i - 1];
      f.fields[p + "Condition"] = i == corrupt_row ? "boiled" : "treated";
      f.fields[p + "Outcome"] = "none";
      f.fields[p + "ExpNote"] = "";
    }
    return f;
  }

  test::TempDir dir_{"views"};
  std::unique_ptr<catalog::SourcePool> pool_;
  hooks::HookRegistry hooks_;
  ManualClock clock_{test::paper_login_time()};
  ops::OpsContext ctx_;
  auth::Session session_;
  views::ViewRegistry registry_;
};

TEST_F(ViewsTest, SiteViewsRegister) {
  for (auto& v : site::site_views()) registry_.register_view(v, *pool_, hooks_);
  ASSERT_EQ(registry_.views().size(), 3u);
  EXPECT_NE(registry_.find("observations"), nullptr);
  EXPECT_EQ(registry_.find("nope"), nullptr);
}

TEST_F(ViewsTest, RegistrationErrors) {
  ViewDef bad{"bad", {ref("Compound", "NoSuch")}, {}, {Standard{}}};
  EXPECT_ERRC(registry_.register_view(bad, *pool_, hooks_), Errc::kUnknownColumnInView);

  ViewDef sdf{"sdf_3d", {ref("Compound", "CompName")}, {}, {Standard{}}};
  registry_.register_view(sdf, *pool_, hooks_);
  EXPECT_ERRC(registry_.register_view(sdf, *pool_, hooks_), Errc::kDuplicateViewName);

  ViewDef custom{"c", {ref("Compound", "CompName")}, {}, {Custom{"show", "unregistered"}}};
  EXPECT_ERRC(registry_.register_view(custom, *pool_, hooks_), Errc::kUnregisteredHandler);
}

TEST_F(ViewsTest, DecodeBatchSkipsBlankRows) {
  auto op = std::get<BatchInput>(observations().ops[0]);
  auto f = batch_form(3);
  f.fields["row5.Well"] = "";
  auto sub = views::decode_batch(op, f);
  EXPECT_EQ(sub.shared.at("PlateID"), "2");
  ASSERT_EQ(sub.rows.size(), 3u);
  EXPECT_EQ(sub.rows[2].index, 3u);
}

TEST_F(ViewsTest, BatchStoresRowsSharingValues) {
  auto view = observations();
  auto op = std::get<BatchInput>(view.ops[0]);
  auto n = views::batch_input(ctx_, session_, view, op, views::decode_batch(op, batch_form(6)));
  EXPECT_EQ(n, 6u);
  EXPECT_EQ(scalar("SELECT count(*) FROM Experiment WHERE PlateID = 2 AND StartDate = '2007-08-24'"), 6);
  EXPECT_EQ(scalar("SELECT count(DISTINCT PlateID || StartDate) FROM Experiment"), 1);
  EXPECT_EQ(scalar("SELECT count(*) FROM Input WHERE Op = 'input'"), 6);
}

TEST_F(ViewsTest, EmptyBatch) {
  auto view = observations();
  auto op = std::get<BatchInput>(view.ops[0]);
  EXPECT_ERRC(views::batch_input(ctx_, session_, view, op, views::decode_batch(op, batch_form(0))),
              Errc::kEmptyBatch);
}

// A failure injected at any row index leaves every table unchanged.
TEST_F(ViewsTest, BatchIsAtomicAtEveryIndex) {
  auto view = observations();
  auto op = std::get<BatchInput>(view.ops[0]);
  const auto experiments = scalar("SELECT count(*) FROM Experiment");
  const auto audits = scalar("SELECT count(*) FROM Input");
  for (int bad = 1; bad <= 6; ++bad) {
    try {
      views::batch_input(ctx_, session_, view, op, views::decode_batch(op, batch_form(6, bad)));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kRowInvalid);
      EXPECT_NE(std::string(e.what()).find("row " + std::to_string(bad)), std::string::npos);
    }
    EXPECT_EQ(scalar("SELECT count(*) FROM Experiment"), experiments);
    EXPECT_EQ(scalar("SELECT count(*) FROM Input"), audits);
  }
  auto missing = batch_form(6);
  missing.fields["row3.Well"] = "";
  missing.fields["row3.Condition"] = "";
  missing.fields["row3.Outcome"] = "";
  missing.fields["row3.ExpNote"] = "x";
  EXPECT_ERRC(views::batch_input(ctx_, session_, view, op, views::decode_batch(op, missing)),
              Errc::kRowInvalid);
  EXPECT_EQ(scalar("SELECT count(*) FROM Experiment"), experiments);
}

TEST_F(ViewsTest, DispatchUnknownOp) {
  auto view = observations();
  FormData f;
  EXPECT_ERRC(views::dispatch_view_op({ctx_, session_, view, "nope", false, f}),
              Errc::kNoSuchViewOp);
}

TEST_F(ViewsTest, JoinedAllListsIngredients) {
  auto view = site::site_views()[2];
  FormData f;
  auto page = views::dispatch_view_op({ctx_, session_, view, "all", true, f});
  auto tables = test::find_all(page, [](const doc::Element& e) { return test::has_class(e, "results"); });
  ASSERT_EQ(tables.size(), 1u);
  const doc::Node t(*tables[0]);
  auto rows = test::by_tag(t, "tr");
  EXPECT_EQ(rows.size(), 1 + static_cast<std::size_t>(scalar("SELECT count(*) FROM MixIngredient")));
}

TEST_F(ViewsTest, CustomHandlerAndFailure) {
  hooks::HookRegistry reg;
  reg.add_handler("boom", [](const hooks::PageRequest&) -> doc::Page {
    throw std::runtime_error("exploded");
  });
  reg.add_handler("hello", [](const hooks::PageRequest& r) {
    return doc::Page{"hi", {}, {doc::el_text("p", "view " + r.view.name)}};
  });
  ctx_.hooks = &reg;
  ViewDef v{"v", {ref("Compound", "CompName")}, {}, {Custom{"go", "hello"}, Custom{"bad", "boom"}}};
  registry_.register_view(v, *pool_, reg);
  FormData f;
  auto page = views::dispatch_view_op({ctx_, session_, v, "go", true, f});
  EXPECT_EQ(doc::text_content(page.body[0]), "view v");
  EXPECT_ERRC(views::dispatch_view_op({ctx_, session_, v, "bad", true, f}), Errc::kHandlerFailure);
}

TEST_F(ViewsTest, StaleViewRendersDiagnostic) {
  ViewDef v{"stale", {ref("Plate", "PlateLabel")}, {}, {Standard{OperationKind::kAll}}};
  registry_.register_view(v, *pool_, hooks_);
  {
    auto conn = pool_->acquire_admin("scibsdb");
    conn->execute_script("ALTER TABLE Plate RENAME COLUMN PlateLabel TO Label");
  }
  DiagnosticLog log;
  FormData f;
  views::dispatch_view_op({ctx_, session_, v, "all", true, f}, &log);
  ASSERT_EQ(log.messages().size(), 1u);
  EXPECT_NE(log.messages()[0].find("stale_view(stale)"), std::string::npos);
}

TEST_F(ViewsTest, BatchFormUsesFieldNaming) {
  auto view = observations();
  FormData f;
  auto page = views::dispatch_view_op({ctx_, session_, view, "input", false, f});
  std::set<std::string> names;
  for (const auto& n : page.body) {
    test::walk(n, [&](const doc::Element& e) {
      if (const auto* name = test::attr(e, "name")) names.insert(*name);
    });
  }
  EXPECT_TRUE(names.count("shared.PlateID"));
  EXPECT_TRUE(names.count("shared.StartDate"));
  EXPECT_TRUE(names.count("row1.Well"));
  EXPECT_TRUE(names.count("row24.ExpNote"));
  EXPECT_FALSE(names.count("row25.Well"));
  EXPECT_FALSE(names.count("row0.Well"));
}

}  // namespace
}  // namespace hdb
