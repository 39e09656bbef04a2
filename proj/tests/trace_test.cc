#include "commscope/trace.h"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "commscope/error.h"

namespace commscope {
namespace {

const SequenceSpec kSeq128(128, 128);

std::vector<ObservationRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_observations(in);
}

std::vector<ObservationRecord> fixture(const std::string& name) {
  std::ifstream in(std::string(COMMSCOPE_FIXTURE_DIR) + "/" + name);
  EXPECT_TRUE(in) << name;
  return parse_observations(in);
}

KindTable predicted(std::int64_t t, std::int64_t p, std::int64_t stage = 0) {
  return tabulate(stage_view(
      simulate(preset("llama-3.1-8b"), ParallelismLayout(t, p), kSeq128),
      stage));
}

TEST(ParseObservationsTest, SingleRecord) {
  const auto records = parse(
      R"({"phase":"Prefill","kind":"Allreduce","count":65,"shape":[128,4096],"bytes_per_element":2})"
      "\n");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].phase, Phase::kPrefill);
  EXPECT_EQ(records[0].kind, CollectiveKind::kAllreduce);
  EXPECT_EQ(records[0].count, 65);
  EXPECT_EQ(records[0].shape, (Shape{128, 4096}));
  EXPECT_EQ(records[0].bytes_per_element, 2);
  EXPECT_FALSE(records[0].group_size);
}

TEST(ParseObservationsTest, EmptyAndBlankInput) {
  EXPECT_TRUE(parse("").empty());
  EXPECT_TRUE(parse("\n  \n").empty());
}

TEST(ParseObservationsTest, UnknownKindNamesValidKinds) {
  try {
    parse(R"({"phase":"Decode","kind":"Broadcast","count":1,"shape":[4],"bytes_per_element":2})");
    FAIL() << "expected EnumError";
  } catch (const EnumError& e) {
    const std::string msg = e.what();
    for (const char* kind : {"Allreduce", "Allgather", "Gather", "Send", "Recv"}) {
      EXPECT_NE(msg.find(kind), std::string::npos) << kind;
    }
  }
}

TEST(ParseObservationsTest, MalformedLineCarriesLineNumber) {
  const std::string good =
      R"({"phase":"Decode","kind":"Send","count":1,"shape":[4],"bytes_per_element":2})";
  const std::vector<std::string> bad = {
      "{not json",
      R"({"phase":"Decode","kind":"Send","count":1,"shape":[4]})",
      R"({"phase":"Decode","kind":"Send","count":-1,"shape":[4],"bytes_per_element":2})",
      R"({"phase":"Decode","kind":"Send","count":1,"shape":[],"bytes_per_element":2})",
      R"([1,2,3])",
  };
  for (const std::string& line : bad) {
    try {
      parse(good + "\n\n" + line + "\n");
      FAIL() << "expected ParseError for " << line;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 3u);
      EXPECT_EQ(e.text(), line);
    }
  }
}

TEST(DiffTest, BundledTablesMatchSimulation) {
  EXPECT_TRUE(diff(fixture("llama-3.1-8b_tp2.jsonl"), predicted(2, 1))
                  .exact_match);
  EXPECT_TRUE(diff(fixture("llama-3.1-8b_tp4.jsonl"), predicted(4, 1))
                  .exact_match);
  EXPECT_TRUE(diff(fixture("llama-3.1-8b_pp2.jsonl"), predicted(1, 2))
                  .exact_match);
  EXPECT_TRUE(diff(fixture("llama-3.1-8b_pp4.jsonl"), predicted(1, 4))
                  .exact_match);
  EXPECT_TRUE(diff(fixture("llama-3.1-8b_tp2pp2_stage0.jsonl"),
                   predicted(2, 2, 0))
                  .exact_match);
}

TEST(DiffTest, StageZeroFixtureIsNotTheSecondStage) {
  const auto report = diff(fixture("llama-3.1-8b_tp2pp2_stage0.jsonl"),
                           predicted(2, 2, 1));
  EXPECT_FALSE(report.exact_match);
  EXPECT_EQ(report.rows.at({Phase::kPrefill, CollectiveKind::kAllreduce})
                .count_delta,
            1);
}

TEST(DiffTest, ConstructedMismatch) {
  auto records = fixture("llama-3.1-8b_tp2.jsonl");
  for (auto& r : records) {
    if (r.phase == Phase::kDecode && r.kind == CollectiveKind::kAllreduce) {
      r.count = 8255 - 65;
    }
  }
  const DiffReport report = diff(records, predicted(2, 1));
  EXPECT_FALSE(report.exact_match);
  const DiffRow& row =
      report.rows.at({Phase::kDecode, CollectiveKind::kAllreduce});
  EXPECT_EQ(row.count_delta, -65);
  EXPECT_EQ(row.byte_delta, -65 * 4096 * 2);
  EXPECT_EQ(report.rows.at({Phase::kPrefill, CollectiveKind::kAllreduce})
                .count_delta,
            0);
}

TEST(DiffTest, OneSidedKeysAndShapeMismatch) {
  const auto records = parse(
      R"({"phase":"Decode","kind":"Allgather","count":3,"shape":[1,8],"bytes_per_element":2})"
      "\n"
      R"({"phase":"Prefill","kind":"Allreduce","count":65,"shape":[128,4095],"bytes_per_element":2})");
  KindTable pred;
  pred[{Phase::kPrefill, CollectiveKind::kAllreduce}] =
      KindRow{.count = 65,
              .shape_counts = {{{128, 4096}, 65}},
              .logical_bytes = 65 * 128 * 4096 * 2,
              .wire_bytes = 0};
  const DiffReport report = diff(records, pred);
  EXPECT_FALSE(report.exact_match);
  const DiffRow& extra =
      report.rows.at({Phase::kDecode, CollectiveKind::kAllgather});
  EXPECT_EQ(extra.predicted_count, 0);
  EXPECT_EQ(extra.count_delta, 3);
  EXPECT_TRUE(extra.predicted_shapes.empty());
  const DiffRow& shapes =
      report.rows.at({Phase::kPrefill, CollectiveKind::kAllreduce});
  EXPECT_EQ(shapes.count_delta, 0);
  EXPECT_NE(shapes.predicted_shapes, shapes.observed_shapes);
}

// Round trip: summary -> JSON lines -> parse -> diff is an exact match, and
// swapping sides negates every delta.
TEST(DiffPropertyTest, RoundTripAndAntisymmetry) {
  for (const auto& name : preset_names()) {
    for (auto [t, p] : {std::pair{1, 1}, {2, 1}, {1, 3}, {2, 2}, {4, 2}}) {
      const ParallelismLayout layout(t, p);
      const auto log = simulate(preset(name), layout, SequenceSpec(9, 5));
      const ScheduleSummary summary = summarize(log, layout);
      std::vector<const KindTable*> views = {&summary.whole_run};
      for (const auto& s : summary.stages) views.push_back(&s);
      for (const auto& r : summary.ranks) views.push_back(&r);
      for (const KindTable* view : views) {
        std::stringstream buffer;
        write_observations(buffer, to_observations(*view));
        EXPECT_TRUE(diff(parse_observations(buffer), *view).exact_match);
      }

      const KindTable& a = summary.stages.front();
      const KindTable& b = summary.ranks.back();
      const DiffReport ab = diff(tabulate(to_observations(a)), b);
      const DiffReport ba = diff(tabulate(to_observations(b)), a);
      ASSERT_EQ(ab.rows.size(), ba.rows.size());
      for (const auto& [key, row] : ab.rows) {
        const DiffRow& other = ba.rows.at(key);
        EXPECT_EQ(row.count_delta, -other.count_delta);
        EXPECT_EQ(row.byte_delta, -other.byte_delta);
        EXPECT_EQ(row.predicted_shapes, other.observed_shapes);
      }
    }
  }
}

TEST(DiffReportTest, Renderings) {
  const DiffReport report =
      diff(fixture("llama-3.1-8b_tp4.jsonl"), predicted(2, 1));
  std::ostringstream md;
  write_markdown(md, report);
  EXPECT_NE(md.str().find("| Decode | Gather | 127 | 127 | 0 | [64128] | [32064] |"),
            std::string::npos)
      << md.str();
  EXPECT_NE(md.str().find("exact match: no"), std::string::npos);
  const nlohmann::json j = to_json(report);
  EXPECT_FALSE(j.at("exact_match").get<bool>());
  EXPECT_EQ(j.at("rows").size(), 4u);
}

}  // namespace
}  // namespace commscope
