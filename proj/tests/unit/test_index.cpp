#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "test_support.h"
#include "trialmatch/common/error.h"
#include "trialmatch/index/vector_index.h"

namespace trialmatch::index {
namespace {

using testing::TempDir;

std::vector<float> random_unit(std::mt19937_64& gen, std::size_t dim) {
  std::normal_distribution<float> d;
  std::vector<float> v(dim);
  double s = 0;
  for (auto& x : v) {
    x = d(gen);
    s += static_cast<double>(x) * x;
  }
  for (auto& x : v) x = static_cast<float>(x / std::sqrt(s));
  return v;
}

IndexedItem patient(const std::string& id, std::vector<float> v, Date anchor, Split split = Split::kTrain) {
  IndexedItem it{id, Side::kPatient, std::move(v), {}};
  it.meta.anchor_date = anchor;
  it.meta.split = split;
  return it;
}

IndexedItem space(const std::string& id, std::vector<float> v, const std::string& nct, Date open,
                  std::optional<Date> close = std::nullopt) {
  IndexedItem it{id, Side::kSpace, std::move(v), {}};
  it.meta.nct_id = nct;
  it.meta.open_date = open;
  it.meta.close_date = close;
  return it;
}

// Independent exhaustive ranking: every score, full sort.
std::vector<Hit> brute_force(const std::vector<IndexedItem>& items, const std::vector<float>& q, std::size_t k) {
  std::vector<Hit> all;
  for (const auto& it : items) {
    double dot = 0;
    for (std::size_t i = 0; i < q.size(); ++i) dot += static_cast<double>(q[i]) * it.vector[i];
    all.push_back({it.item_id, dot});
  }
  std::sort(all.begin(), all.end(), [](const Hit& a, const Hit& b) {
    return a.score != b.score ? a.score > b.score : a.item_id < b.item_id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

const Date kDay = Date::from_ymd(2022, 1, 1);

TEST(Index, ExactAgainstBruteForce) {
  std::mt19937_64 gen(7);
  std::vector<IndexedItem> items;
  for (int i = 0; i < 300; ++i) items.push_back(patient("p" + std::to_string(i), random_unit(gen, 64), kDay));
  const auto idx = VectorIndex::build(64, items);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_unit(gen, 64);
    for (std::size_t k : {1u, 10u, 20u, 500u}) {
      const auto got = idx.top_k(query, Side::kPatient, k);
      const auto want = brute_force(items, query, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].item_id, want[i].item_id);
        EXPECT_NEAR(got[i].score, want[i].score, 1e-12);
      }
    }
  }
}

TEST(Index, TiesBreakByIdAndSidesAreSeparate) {
  VectorIndex idx(2);
  idx.add(patient("b", {1, 0}, kDay));
  idx.add(patient("a", {1, 0}, kDay));
  idx.add(patient("c", {0, 1}, kDay));
  idx.add(space("NCT00000001#1", {1, 0}, "NCT00000001", kDay));
  const std::vector<float> q = {1, 0};
  const auto hits = idx.top_k(q, Side::kPatient, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].item_id, "a");
  EXPECT_EQ(hits[1].item_id, "b");
  EXPECT_EQ(hits[2].item_id, "c");
  EXPECT_EQ(idx.top_k(q, Side::kSpace, 10).size(), 1u);
  EXPECT_EQ(idx.size(Side::kPatient), 3u);
  EXPECT_EQ(idx.ids(Side::kPatient), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(Index, AddValidation) {
  VectorIndex idx(2);
  idx.add(patient("a", {1, 0}, kDay));
  EXPECT_THROW(idx.add(patient("a", {0, 1}, kDay)), ConflictError);
  EXPECT_THROW(idx.add(patient("x", {1, 0, 0}, kDay)), InvalidArgument);
  IndexedItem bare{"y", Side::kSpace, {1, 0}, {}};
  EXPECT_THROW(idx.add(bare), InvalidArgument);
  const std::vector<float> q = {1, 0}, bad = {1};
  EXPECT_THROW(idx.top_k(q, Side::kPatient, 0), InvalidArgument);
  EXPECT_THROW(idx.top_k(bad, Side::kPatient, 1), InvalidArgument);
}

TEST(Filter, TemporalWindowIsInclusive) {
  const auto s = space("NCT00000001#1", {1, 0}, "NCT00000001", Date::from_ymd(2020, 1, 1), Date::from_ymd(2020, 12, 31));
  EXPECT_FALSE(temporal_pass(s, Date::from_ymd(2019, 12, 31)));
  EXPECT_TRUE(temporal_pass(s, Date::from_ymd(2020, 1, 1)));
  EXPECT_TRUE(temporal_pass(s, Date::from_ymd(2020, 12, 31)));
  EXPECT_FALSE(temporal_pass(s, Date::from_ymd(2021, 1, 1)));
  const auto open = space("NCT00000002#1", {1, 0}, "NCT00000002", Date::from_ymd(2020, 1, 1));
  EXPECT_TRUE(temporal_pass(open, Date::from_ymd(2030, 1, 1)));
  const auto p = patient("p", {1, 0}, kDay);
  EXPECT_THROW(temporal_pass(p, kDay), ContractViolation);
}

TEST(Filter, PredicatesCombine) {
  VectorIndex idx(2);
  idx.add(patient("p_train", {1, 0}, Date::from_ymd(2021, 1, 1), Split::kTrain));
  idx.add(patient("p_test", {1, 0}, Date::from_ymd(2021, 6, 1), Split::kTest));
  idx.add(patient("p_late", {1, 0}, Date::from_ymd(2023, 1, 1), Split::kTest));
  idx.add(space("NCT00000001#1", {1, 0}, "NCT00000001", Date::from_ymd(2020, 1, 1)));
  idx.add(space("NCT00000002#1", {1, 0}, "NCT00000002", Date::from_ymd(2022, 1, 1)));
  const std::vector<float> q = {1, 0};

  QueryFilter f;
  f.split_in = std::set<Split>{Split::kTest};
  f.anchor_within = Window{Date::from_ymd(2021, 1, 1), Date::from_ymd(2022, 1, 1)};
  auto hits = idx.top_k(q, Side::kPatient, 10, f);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].item_id, "p_test");

  QueryFilter g;
  g.temporal_as_of = Date::from_ymd(2021, 1, 1);
  EXPECT_EQ(idx.top_k(q, Side::kSpace, 10, g).size(), 1u);
  g.temporal_as_of.reset();
  g.nct_exclude = std::set<std::string>{"NCT00000002"};
  hits = idx.top_k(q, Side::kSpace, 10, g);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].item_id, "NCT00000001#1");
}

TEST(Persistence, SaveLoadRoundTrip) {
  TempDir dir;
  std::mt19937_64 gen(3);
  VectorIndex idx(16);
  idx.add(patient("p1", random_unit(gen, 16), kDay, Split::kValidation));
  idx.add(space("NCT00000001#1", random_unit(gen, 16), "NCT00000001", kDay, Date::from_ymd(2023, 1, 1)));
  idx.save(dir / "index.tmix");
  const auto back = VectorIndex::load(dir / "index.tmix");
  EXPECT_EQ(back.dimension(), 16u);
  EXPECT_EQ(back.get(Side::kPatient, "p1"), idx.get(Side::kPatient, "p1"));
  EXPECT_EQ(back.get(Side::kSpace, "NCT00000001#1"), idx.get(Side::kSpace, "NCT00000001#1"));
  EXPECT_FALSE(back.get(Side::kSpace, "p1").has_value());
  back.save(dir / "again.tmix");
  EXPECT_EQ(read_file(dir / "index.tmix"), read_file(dir / "again.tmix"));
}

TEST(Persistence, CorruptFileRejected) {
  TempDir dir;
  write_file_atomic(dir / "bad.tmix", "TMIXgarbage");
  EXPECT_THROW(VectorIndex::load(dir / "bad.tmix"), ParseError);
  write_file_atomic(dir / "bad2.tmix", "XXXX");
  EXPECT_THROW(VectorIndex::load(dir / "bad2.tmix"), ParseError);
}

TEST(Concurrency, ParallelQueriesMatchSerial) {
  std::mt19937_64 gen(11);
  std::vector<IndexedItem> items;
  for (int i = 0; i < 200; ++i) items.push_back(patient("p" + std::to_string(i), random_unit(gen, 32), kDay));
  const auto idx = VectorIndex::build(32, items);
  std::vector<std::vector<float>> queries;
  for (int i = 0; i < 40; ++i) queries.push_back(random_unit(gen, 32));
  std::vector<std::vector<Hit>> serial;
  for (const auto& q : queries) serial.push_back(idx.top_k(q, Side::kPatient, 10));
  std::vector<std::vector<Hit>> parallel(queries.size());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (std::size_t i = static_cast<std::size_t>(t); i < queries.size(); i += 4) {
        parallel[i] = idx.top_k(queries[i], Side::kPatient, 10);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(parallel, serial);
}

TEST(Snapshot, ReadersKeepOldIndexAcrossSwap) {
  IndexSnapshot snap;
  EXPECT_EQ(snap.current(), nullptr);
  auto first = std::make_shared<VectorIndex>(2);
  snap.swap(first);
  const auto held = snap.current();
  snap.swap(std::make_shared<VectorIndex>(4));
  EXPECT_EQ(held->dimension(), 2u);
  EXPECT_EQ(snap.current()->dimension(), 4u);
}

}  // namespace
}  // namespace trialmatch::index
