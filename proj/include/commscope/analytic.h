#ifndef COMMSCOPE_ANALYTIC_H_
#define COMMSCOPE_ANALYTIC_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

#include "commscope/arch.h"

namespace commscope {

using Ratio = boost::rational<std::int64_t>;

// Send and Recv are the two ends of one point-to-point transfer.
enum class CollectiveKind { kAllreduce, kAllgather, kGather, kSend, kRecv };

inline constexpr std::array<CollectiveKind, 5> kAllKinds = {
    CollectiveKind::kAllreduce, CollectiveKind::kAllgather,
    CollectiveKind::kGather, CollectiveKind::kSend, CollectiveKind::kRecv};

// "Allreduce", "Allgather", "Gather", "Send", "Recv".
std::string_view to_string(CollectiveKind kind);
// Inverse of to_string; EnumError listing the valid names otherwise.
CollectiveKind parse_kind(std::string_view name);

// How the logits Gather is charged.
//   kSenderSlice: one vocabulary slice (v/t elements) per pass.
//   kWireLevel:   every non-root rank's slice, (t-1) * v/t per pass.
enum class GatherAccounting { kSenderSlice, kWireLevel };

// Bytes moved on the wire per byte of logical message:
// 2(d-1)/d for Allreduce, (d-1)/d for Allgather, 1 for Send/Recv/Gather.
// Under kWireLevel a Gather over d ranks moves d-1 slices.
Ratio correction_factor(
    CollectiveKind kind, std::int64_t group_size,
    GatherAccounting gather = GatherAccounting::kSenderSlice);

// logical_bytes * factor, rounded to the nearest byte. Exact for every
// power-of-two group size when logical_bytes is a multiple of the group.
std::int64_t scale_bytes(std::int64_t logical_bytes, Ratio factor);

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

// Wire volume per collective family. p2p_bytes counts each transfer once.
struct VolumeBreakdown {
  std::int64_t allreduce_bytes = 0;
  std::int64_t allgather_bytes = 0;
  std::int64_t gather_bytes = 0;
  std::int64_t p2p_bytes = 0;
  std::int64_t total_bytes = 0;

  // Recomputes total_bytes from the components.
  VolumeBreakdown& finalize();

  bool operator==(const VolumeBreakdown&) const = default;
};

nlohmann::json to_json(const VolumeBreakdown& v);

struct VolumeOptions {
  // Adds the vocabulary-embedding Allreduce owned by the first stage.
  bool include_first_rank_embedding = true;
  GatherAccounting gather = GatherAccounting::kSenderSlice;
};

// Pure tensor parallelism over t ranks:
//   allreduce = (2L+1)(S_p+S_d-1) h b 2(t-1)/t,  gather = S_d ceil(v/t) b.
// A single rank gathers nothing, so gather_bytes is 0 at t = 1.
VolumeBreakdown tp_volume(const ModelArch& arch, std::int64_t t,
                          const SequenceSpec& seq,
                          GatherAccounting gather = GatherAccounting::kSenderSlice);

// Pure pipeline parallelism over p stages: (p-1) * 2 * (S_p+S_d-1) h b.
VolumeBreakdown pp_volume(const ModelArch& arch, std::int64_t p,
                          const SequenceSpec& seq);

// TP inside each of p pipeline stages. Allreduce is charged for the first
// stage's TP group (its share of layers, plus the embedding when enabled);
// Allgather, point-to-point and Gather are charged over the whole pipeline.
// Reduces to tp_volume at p = 1 and to pp_volume at t = 1.
VolumeBreakdown hybrid_volume(const ModelArch& arch,
                              const ParallelismLayout& layout,
                              const SequenceSpec& seq,
                              const VolumeOptions& options = {});

// total_bytes(seq_b) / total_bytes(seq_a). DegenerateLayoutError when
// seq_a moves no bytes.
Ratio growth_factor(const ModelArch& arch, const ParallelismLayout& layout,
                    const SequenceSpec& seq_a, const SequenceSpec& seq_b,
                    const VolumeOptions& options = {});

}  // namespace commscope

#endif  // COMMSCOPE_ANALYTIC_H_
