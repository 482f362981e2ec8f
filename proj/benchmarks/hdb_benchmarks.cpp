#include <benchmark/benchmark.h>

#include <fmt/format.h>

#include "hdb/bridge/expr.hpp"
#include "hdb/catalog.hpp"
#include "hdb/doctree.hpp"
#include "hdb/hooks.hpp"
#include "hdb/sqlgen.hpp"

namespace {

using namespace hdb;

doc::Node result_grid(std::size_t rows, std::size_t cols) {
  std::vector<doc::Node> body;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<doc::Node> cells;
    for (std::size_t c = 0; c < cols; ++c) {
      cells.push_back(doc::el_text("td", fmt::format("r{}c{} <&\"> value", r, c)));
    }
    body.push_back(doc::el("tr", std::move(cells)));
  }
  return doc::el("table", {{"class", "results"}}, {doc::el("tbody", std::move(body))});
}

void BM_RenderResultGrid(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const doc::Page page{"bench", {}, {result_grid(rows, 8)}};
  std::size_t bytes = 0;
  for (auto _ : state) {
    auto html = doc::render_page(page);
    bytes = html.size();
    benchmark::DoNotOptimize(html);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes));
}
BENCHMARK(BM_RenderResultGrid)->Arg(50)->Arg(500);

catalog::TableMeta wide_table(std::size_t n) {
  catalog::TableMeta meta{"bench", "Wide", {}, false};
  meta.columns.push_back({"ID", catalog::parse_declared_type("bigint(20) unsigned"), false,
                          catalog::KeyKind::kPrimary, std::nullopt, true});
  for (std::size_t i = 0; i < n; ++i) {
    meta.columns.push_back({fmt::format("Col{}", i), catalog::parse_declared_type("text"), true,
                            catalog::KeyKind::kNone, std::nullopt, false});
  }
  return meta;
}

void BM_GenInsert(benchmark::State& state) {
  const auto meta = wide_table(static_cast<std::size_t>(state.range(0)));
  sql::Assignments assigns;
  for (std::size_t i = 1; i < meta.columns.size(); ++i) {
    assigns[meta.columns[i].name] = fmt::format("value {}", i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(sql::gen_insert(meta, assigns));
}
BENCHMARK(BM_GenInsert)->Arg(6)->Arg(64);

void BM_GenSelectFiltered(benchmark::State& state) {
  const auto meta = wide_table(18);
  sql::RowFilter filter;
  filter.conjuncts.push_back({"Col1", sql::Relation::kLike, std::string("%x%")});
  filter.conjuncts.push_back({"ID", sql::Relation::kGe, std::int64_t{10}});
  for (auto _ : state) benchmark::DoNotOptimize(sql::gen_select(meta, {}, filter, 500));
}
BENCHMARK(BM_GenSelectFiltered);

void BM_HookResolve(benchmark::State& state) {
  hooks::HookRegistry reg;
  const auto n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    reg.add(hooks::HookKind::kInputDefaultValue,
            hooks::HookMatcher{fmt::format("db{}", i % 4), std::nullopt,
                               hooks::ColumnSuffix{fmt::format("S{}", i)}},
            [](const hooks::HookSite&, TimePoint) { return std::optional<std::string>("x"); });
  }
  reg.add(hooks::HookKind::kInputDefaultValue,
          hooks::HookMatcher{"db1", "T", hooks::ExactColumn{"ColS5"}},
          [](const hooks::HookSite&, TimePoint) { return std::optional<std::string>("y"); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.resolve(hooks::HookKind::kInputDefaultValue, "db1", "T", "ColS5"));
  }
}
BENCHMARK(BM_HookResolve)->Arg(8)->Arg(256);

void BM_SerializeExpr(benchmark::State& state) {
  std::vector<bridge::Expr> elems;
  for (int i = 0; i < state.range(0); ++i) elems.push_back(bridge::num(i * 0.5));
  const auto e = bridge::assign(
      "x", bridge::call("mean", {bridge::vec(std::move(elems)), bridge::str("label \"q\"")}));
  for (auto _ : state) benchmark::DoNotOptimize(bridge::serialize(e));
}
BENCHMARK(BM_SerializeExpr)->Arg(8)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
