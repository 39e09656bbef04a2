#include "commscope/analytic.h"

#include <random>

#include <gtest/gtest.h>

#include "commscope/error.h"

namespace commscope {
namespace {

const SequenceSpec kSeq128(128, 128);

TEST(CorrectionFactorTest, PerKind) {
  EXPECT_EQ(correction_factor(CollectiveKind::kAllreduce, 2), Ratio(1));
  EXPECT_EQ(correction_factor(CollectiveKind::kAllreduce, 1), Ratio(0));
  EXPECT_EQ(correction_factor(CollectiveKind::kAllreduce, 4), Ratio(3, 2));
  EXPECT_EQ(correction_factor(CollectiveKind::kAllgather, 4), Ratio(3, 4));
  EXPECT_EQ(correction_factor(CollectiveKind::kAllgather, 1), Ratio(0));
  for (std::int64_t d : {1, 2, 3, 8}) {
    EXPECT_EQ(correction_factor(CollectiveKind::kGather, d), Ratio(1));
    EXPECT_EQ(correction_factor(CollectiveKind::kSend, d), Ratio(1));
    EXPECT_EQ(correction_factor(CollectiveKind::kRecv, d), Ratio(1));
  }
  EXPECT_EQ(correction_factor(CollectiveKind::kGather, 4,
                              GatherAccounting::kWireLevel),
            Ratio(3));
}

TEST(CorrectionFactorTest, KindNames) {
  for (CollectiveKind kind : kAllKinds) {
    EXPECT_EQ(parse_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_kind("Broadcast"), EnumError);
}

TEST(ScaleBytesTest, RoundsToNearest) {
  EXPECT_EQ(scale_bytes(8192, Ratio(3, 2)), 12288);
  EXPECT_EQ(scale_bytes(10, Ratio(4, 3)), 13);
  EXPECT_EQ(scale_bytes(11, Ratio(4, 3)), 15);
  EXPECT_EQ(scale_bytes(123, Ratio(0)), 0);
}

TEST(TpVolumeTest, Llama8bTp2) {
  const auto v = tp_volume(preset("llama-3.1-8b"), 2, kSeq128);
  EXPECT_EQ(v.allreduce_bytes, 135782400);
  EXPECT_EQ(v.gather_bytes, 16416768);
  EXPECT_EQ(v.allgather_bytes, 0);
  EXPECT_EQ(v.p2p_bytes, 0);
  EXPECT_EQ(v.total_bytes, 152199168);
}

TEST(TpVolumeTest, Llama8bTp4GatherSlice) {
  EXPECT_EQ(tp_volume(preset("llama-3.1-8b"), 4, kSeq128).gather_bytes,
            128 * 32064 * 2);
}

TEST(TpVolumeTest, SingleRankMovesNothing) {
  for (const auto& name : preset_names()) {
    const auto v = tp_volume(preset(name), 1, SequenceSpec(37, 5));
    EXPECT_EQ(v.allreduce_bytes, 0);
    EXPECT_EQ(v.total_bytes, 0);
  }
}

TEST(TpVolumeTest, WireLevelGatherChargesEverySender) {
  const auto arch = preset("llama-3.1-8b");
  EXPECT_EQ(tp_volume(arch, 4, kSeq128, GatherAccounting::kWireLevel)
                .gather_bytes,
            3 * 128 * 32064 * 2);
}

TEST(TpVolumeTest, VocabSliceRoundsUp) {
  const ModelArch arch("odd", 64, 2, 1001);
  EXPECT_EQ(tp_volume(arch, 4, SequenceSpec(1, 3)).gather_bytes, 3 * 251 * 2);
}

TEST(PpVolumeTest, Llama8b) {
  const auto arch = preset("llama-3.1-8b");
  EXPECT_EQ(pp_volume(arch, 2, kSeq128).p2p_bytes, 4177920);
  EXPECT_EQ(pp_volume(arch, 4, kSeq128).total_bytes, 12533760);
  EXPECT_EQ(pp_volume(arch, 1, kSeq128).total_bytes, 0);
}

TEST(HybridVolumeTest, Llama8bTp2Pp2) {
  const auto arch = preset("llama-3.1-8b");
  const auto v = hybrid_volume(arch, ParallelismLayout(2, 2), kSeq128);
  EXPECT_EQ(v.allgather_bytes, 2088960);
  EXPECT_EQ(v.p2p_bytes, 2088960);
  EXPECT_EQ(v.gather_bytes, 16416768);
  EXPECT_EQ(v.allreduce_bytes, 66846720 + 2088960);

  const auto no_embedding =
      hybrid_volume(arch, ParallelismLayout(2, 2), kSeq128,
                    {.include_first_rank_embedding = false});
  EXPECT_EQ(no_embedding.allreduce_bytes, 66846720);
}

TEST(HybridVolumeTest, ReducesToPureStrategies) {
  for (const auto& name : preset_names()) {
    const auto arch = preset(name);
    for (std::int64_t t : {1, 2, 4, 8}) {
      EXPECT_EQ(hybrid_volume(arch, ParallelismLayout(t, 1), kSeq128),
                tp_volume(arch, t, kSeq128));
    }
    for (std::int64_t p : {1, 2, 4}) {
      const auto v = hybrid_volume(arch, ParallelismLayout(1, p), kSeq128);
      EXPECT_EQ(v, pp_volume(arch, p, kSeq128));
    }
  }
}

TEST(HybridVolumeTest, DegenerateLayoutIsZero) {
  for (const auto& name : preset_names()) {
    EXPECT_EQ(hybrid_volume(preset(name), ParallelismLayout(1, 1),
                            SequenceSpec(512, 512))
                  .total_bytes,
              0);
  }
}

TEST(GrowthFactorTest, PipelineScalesWithTokenRows) {
  const auto arch = preset("llama-3.1-8b");
  const ParallelismLayout pp4(1, 4);
  EXPECT_EQ(growth_factor(arch, pp4, SequenceSpec(128, 128),
                          SequenceSpec(128, 256)),
            Ratio(383, 255));
  EXPECT_EQ(growth_factor(arch, pp4, SequenceSpec(128, 256),
                          SequenceSpec(128, 512)),
            Ratio(639, 383));
  EXPECT_NEAR(boost::rational_cast<double>(Ratio(383, 255)), 1.502, 5e-4);
  EXPECT_NEAR(boost::rational_cast<double>(Ratio(639, 383)), 1.668, 5e-4);
}

TEST(GrowthFactorTest, IdentityAndDegenerate) {
  const auto arch = preset("llama-2-13b");
  EXPECT_EQ(growth_factor(arch, ParallelismLayout(2, 2), kSeq128, kSeq128),
            Ratio(1));
  EXPECT_THROW(
      growth_factor(arch, ParallelismLayout(1, 1), kSeq128, kSeq128),
      DegenerateLayoutError);
}

// Random architectures and layouts for the property checks below.
struct Sample {
  ModelArch arch;
  ParallelismLayout layout;
  SequenceSpec seq;
};

Sample random_sample(std::mt19937_64& rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  const std::int64_t t = std::int64_t{1} << pick(0, 3);
  const std::int64_t p = pick(1, 4);
  return Sample{
      ModelArch("rand", 8 * pick(1, 512), pick(p, 48), pick(1, 200000),
                std::nullopt, std::nullopt, pick(1, 4)),
      ParallelismLayout(t, p), SequenceSpec(pick(1, 600), pick(1, 600))};
}

TEST(VolumePropertyTest, MonotoneInSequenceAndModelSize) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const Sample s = random_sample(rng);
    const auto& a = s.arch;
    const auto base = hybrid_volume(a, s.layout, s.seq).total_bytes;
    const SequenceSpec longer_prefill(s.seq.prefill_len() + 1,
                                      s.seq.decode_len());
    const SequenceSpec longer_decode(s.seq.prefill_len(),
                                     s.seq.decode_len() + 1);
    EXPECT_LE(base, hybrid_volume(a, s.layout, longer_prefill).total_bytes);
    EXPECT_LE(base, hybrid_volume(a, s.layout, longer_decode).total_bytes);
    const ModelArch deeper(a.name(), a.hidden_size(), a.num_layers() + 1,
                           a.vocab_size(), std::nullopt, std::nullopt,
                           a.bytes_per_element());
    const ModelArch wider(a.name(), a.hidden_size() + 8, a.num_layers(),
                          a.vocab_size(), std::nullopt, std::nullopt,
                          a.bytes_per_element());
    EXPECT_LE(base, hybrid_volume(deeper, s.layout, s.seq).total_bytes);
    EXPECT_LE(base, hybrid_volume(wider, s.layout, s.seq).total_bytes);
    EXPECT_LE(base,
              hybrid_volume(a.with_bytes_per_element(a.bytes_per_element() + 1),
                            s.layout, s.seq)
                  .total_bytes);
  }
}

TEST(VolumePropertyTest, AffineInDecodeLength) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Sample s = random_sample(rng);
    auto total = [&](std::int64_t decode) {
      return hybrid_volume(s.arch, s.layout,
                           SequenceSpec(s.seq.prefill_len(), decode))
          .total_bytes;
    };
    const std::int64_t x = s.seq.decode_len();
    const std::int64_t step = total(x + 1) - total(x);
    for (std::int64_t y : {2, 5, 17}) {
      EXPECT_EQ(total(x + y) - total(x), y * step);
    }
  }
}

TEST(VolumePropertyTest, TotalIsSumOfParts) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Sample s = random_sample(rng);
    const auto v = hybrid_volume(s.arch, s.layout, s.seq);
    EXPECT_EQ(v.total_bytes, v.allreduce_bytes + v.allgather_bytes +
                                 v.gather_bytes + v.p2p_bytes);
    EXPECT_GE(v.allreduce_bytes, 0);
    EXPECT_GE(v.allgather_bytes, 0);
    EXPECT_GE(v.gather_bytes, 0);
    EXPECT_GE(v.p2p_bytes, 0);
  }
}

}  // namespace
}  // namespace commscope
