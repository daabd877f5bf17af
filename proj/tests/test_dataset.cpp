#include <gtest/gtest.h>

#include <map>
#include <set>

#include "attribeval/dataset.hpp"
#include "test_support.hpp"

namespace attribeval::dataset {
namespace {

using testing::TempDir;
using testing::data_path;
using testing::spit;

std::string record_line(const std::string& id, const std::string& label,
                        const std::string& subset = "LFQA", const std::string& split = "id") {
  return nlohmann::json{{"id", id},
                        {"question", "q " + id},
                        {"response", "r " + id},
                        {"claim", "claim " + id},
                        {"references", {"ref " + id}},
                        {"label", label},
                        {"subset", subset},
                        {"split", split}}
      .dump();
}

std::vector<AttributionRecord> make_pool(std::size_t pos, std::size_t neg) {
  std::vector<AttributionRecord> pool;
  for (std::size_t i = 0; i < pos + neg; ++i) {
    AttributionRecord r;
    r.id = "r" + std::to_string(i);
    r.claim = "c";
    r.references = {"ref"};
    r.label = i < pos ? Label::Attributable : Label::NotAttributable;
    r.subset = "LFQA";
    pool.push_back(r);
  }
  return pool;
}

TEST(LoadDataset, ReadsFixtureInFileOrder) {
  const auto records = load_dataset(data_path("fixture_20.jsonl"));
  ASSERT_EQ(records.size(), 20u);
  EXPECT_EQ(records.front().id, "fx-000");
  EXPECT_EQ(records.back().id, "fx-019");
  EXPECT_EQ(records[1].split, Split::ID);  // upper-case "ID" on disk
  EXPECT_EQ(records[2].split, Split::OOD);
  EXPECT_TRUE(records[5].response.empty());
  EXPECT_EQ(records[0].references.size(), 2u);
}

TEST(LoadDataset, SubsetSizeCountsEveryLine) {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 168; ++i) text += record_line("l" + std::to_string(i), i % 2 ? "Y" : "N") + "\n";
  spit(dir / "lfqa.jsonl", text);
  const auto records = load_dataset(dir / "lfqa.jsonl");
  ASSERT_EQ(records.size(), 168u);
  const auto infos = summarize(records);
  ASSERT_EQ(infos.size(), 1u);
  EXPECT_EQ(infos[0].subset, "LFQA");
  EXPECT_EQ(infos[0].count, 168u);
  EXPECT_EQ(infos[0].positives + infos[0].negatives, infos[0].count);
}

TEST(LoadDataset, EmptyFileGivesEmptyList) {
  TempDir dir;
  spit(dir / "empty.jsonl", "");
  EXPECT_TRUE(load_dataset(dir / "empty.jsonl").empty());
}

TEST(LoadDataset, MissingFieldNamesLineAndField) {
  TempDir dir;
  auto obj = nlohmann::json::parse(record_line("b", "N"));
  obj.erase("claim");
  spit(dir / "bad.jsonl", record_line("a", "Y") + "\n" + obj.dump() + "\n");
  try {
    load_dataset(dir / "bad.jsonl");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "claim");
    EXPECT_NE(std::string(e.what()).find("claim"), std::string::npos);
  }
}

TEST(LoadDataset, SchemaViolations) {
  TempDir dir;
  auto expect_field = [&](nlohmann::json obj, const std::string& field) {
    spit(dir / "bad.jsonl", obj.dump() + "\n");
    try {
      load_dataset(dir / "bad.jsonl");
      ADD_FAILURE() << "expected SchemaError for " << field;
    } catch (const SchemaError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  const auto base = nlohmann::json::parse(record_line("x", "Y"));
  auto label = base;
  label["label"] = "yes";
  expect_field(label, "label");
  auto split = base;
  split["split"] = "test";
  expect_field(split, "split");
  auto refs = base;
  refs["references"] = nlohmann::json::array();
  expect_field(refs, "references");
  auto blank_ref = base;
  blank_ref["references"] = {"ok", "   "};
  expect_field(blank_ref, "references[1]");
  auto extra = base;
  extra["score"] = 1;
  expect_field(extra, "score");
  auto blank_claim = base;
  blank_claim["claim"] = "  ";
  expect_field(blank_claim, "claim");
  auto empty_id = base;
  empty_id["id"] = "";
  expect_field(empty_id, "id");

  spit(dir / "garbage.jsonl", "{not json\n");
  EXPECT_THROW(load_dataset(dir / "garbage.jsonl"), SchemaError);
}

TEST(LoadDataset, NullResponseIsEmpty) {
  TempDir dir;
  auto obj = nlohmann::json::parse(record_line("x", "Y"));
  obj["response"] = nullptr;
  spit(dir / "r.jsonl", obj.dump() + "\n");
  EXPECT_EQ(load_dataset(dir / "r.jsonl").at(0).response, "");
}

TEST(LoadDataset, DuplicateIdRejected) {
  TempDir dir;
  spit(dir / "dup.jsonl", record_line("a", "Y") + "\n" + record_line("a", "N") + "\n");
  EXPECT_THROW(load_dataset(dir / "dup.jsonl"), DuplicateIdError);
}

TEST(LoadDataset, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset("/nonexistent/dir/data.jsonl"), IoError);
}

TEST(LoadDataset, RepeatedLoadsAreIdentical) {
  EXPECT_EQ(load_dataset(data_path("fixture_20.jsonl")), load_dataset(data_path("fixture_20.jsonl")));
}

TEST(LoadDataset, SerializedRecordsReload) {
  TempDir dir;
  const auto records = load_dataset(data_path("fixture_20.jsonl"));
  std::string text;
  for (const auto& r : records) text += to_json_line(r) + "\n";
  spit(dir / "copy.jsonl", text);
  EXPECT_EQ(load_dataset(dir / "copy.jsonl"), records);
}

TEST(Filter, BySplit) {
  std::vector<AttributionRecord> ds = make_pool(4, 4);
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i].split = i < 5 ? Split::ID : Split::OOD;
  const auto ood = filter(ds, std::nullopt, Split::OOD);
  ASSERT_EQ(ood.size(), 3u);
  EXPECT_EQ(ood[0].id, "r5");
  EXPECT_EQ(ood[2].id, "r7");
}

TEST(Filter, SubsetIdentityAndNoMatch) {
  const auto ds = make_pool(3, 3);
  EXPECT_EQ(filter(ds, std::string("LFQA"), std::nullopt), ds);
  EXPECT_TRUE(filter(ds, std::string("XYZ"), std::nullopt).empty());
  EXPECT_EQ(filter(ds, std::nullopt, std::nullopt), ds);
}

TEST(Balance, ExactPerClassCounts) {
  const auto pool = make_pool(120, 95);
  const auto out = balance(pool, 84, 7);
  ASSERT_EQ(out.size(), 168u);
  std::map<Label, int> hist;
  for (const auto& r : out) ++hist[r.label];
  EXPECT_EQ(hist[Label::Attributable], 84);
  EXPECT_EQ(hist[Label::NotAttributable], 84);
}

TEST(Balance, ZeroRequestIsEmpty) {
  EXPECT_TRUE(balance(make_pool(3, 3), 0, 123).empty());
  EXPECT_TRUE(balance(std::vector<AttributionRecord>{}, 0, 1).empty());
}

TEST(Balance, DeterministicForSeedAndVariesAcrossSeeds) {
  const auto pool = make_pool(50, 50);
  auto ids = [](const std::vector<AttributionRecord>& v) {
    std::vector<std::string> out;
    for (const auto& r : v) out.push_back(r.id);
    return out;
  };
  EXPECT_EQ(ids(balance(pool, 20, 7)), ids(balance(pool, 20, 7)));
  EXPECT_NE(ids(balance(pool, 20, 7)), ids(balance(pool, 20, 8)));
}

TEST(Balance, OutputIsShuffled) {
  const auto out = balance(make_pool(40, 40), 40, 3);
  const bool grouped = std::is_partitioned(out.begin(), out.end(), [](const auto& r) {
    return r.label == Label::Attributable;
  });
  EXPECT_FALSE(grouped);
}

TEST(Balance, InsufficientClassReportsAvailable) {
  try {
    balance(make_pool(10, 3), 5, 1);
    FAIL() << "expected InsufficientClassError";
  } catch (const InsufficientClassError& e) {
    EXPECT_EQ(e.available(), 3u);
  }
}

TEST(PipelineProperty, OutputIdsComeFromInput) {
  const auto records = load_dataset(data_path("fixture_20.jsonl"));
  std::set<std::string> input_ids;
  for (const auto& r : records) input_ids.insert(r.id);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto id_only = filter(records, std::nullopt, Split::ID);
    for (const auto& r : balance(id_only, 3, seed)) EXPECT_TRUE(input_ids.contains(r.id));
  }
}

}  // namespace
}  // namespace attribeval::dataset
