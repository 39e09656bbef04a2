#include "commscope/analytic.h"

#include "commscope/error.h"

namespace commscope {

std::string_view to_string(CollectiveKind kind) {
  switch (kind) {
    case CollectiveKind::kAllreduce:
      return "Allreduce";
    case CollectiveKind::kAllgather:
      return "Allgather";
    case CollectiveKind::kGather:
      return "Gather";
    case CollectiveKind::kSend:
      return "Send";
    case CollectiveKind::kRecv:
      return "Recv";
  }
  return "?";
}

CollectiveKind parse_kind(std::string_view name) {
  for (CollectiveKind kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw EnumError("unknown collective kind '" + std::string(name) +
                  "'; valid kinds: Allreduce, Allgather, Gather, Send, Recv");
}

Ratio correction_factor(CollectiveKind kind, std::int64_t group_size,
                        GatherAccounting gather) {
  if (group_size < 1) {
    throw ConfigError("group_size must be >= 1, got " +
                      std::to_string(group_size));
  }
  const std::int64_t d = group_size;
  switch (kind) {
    case CollectiveKind::kAllreduce:
      return Ratio(2 * (d - 1), d);
    case CollectiveKind::kAllgather:
      return Ratio(d - 1, d);
    case CollectiveKind::kGather:
      return gather == GatherAccounting::kWireLevel ? Ratio(d - 1) : Ratio(1);
    case CollectiveKind::kSend:
    case CollectiveKind::kRecv:
      return Ratio(1);
  }
  return Ratio(0);
}

std::int64_t scale_bytes(std::int64_t logical_bytes, Ratio factor) {
  const auto num = static_cast<__int128>(logical_bytes) * factor.numerator();
  const auto den = static_cast<__int128>(factor.denominator());
  return static_cast<std::int64_t>((num + den / 2) / den);
}

VolumeBreakdown& VolumeBreakdown::finalize() {
  total_bytes = allreduce_bytes + allgather_bytes + gather_bytes + p2p_bytes;
  return *this;
}

nlohmann::json to_json(const VolumeBreakdown& v) {
  return {{"allreduce_bytes", v.allreduce_bytes},
          {"allgather_bytes", v.allgather_bytes},
          {"gather_bytes", v.gather_bytes},
          {"p2p_bytes", v.p2p_bytes},
          {"total_bytes", v.total_bytes}};
}

namespace {

std::int64_t gather_volume(const ModelArch& arch, std::int64_t t,
                           const SequenceSpec& seq, GatherAccounting gather) {
  if (t == 1) return 0;
  const std::int64_t slice = ceil_div(arch.vocab_size(), t);
  return scale_bytes(seq.decode_len() * slice * arch.bytes_per_element(),
                     correction_factor(CollectiveKind::kGather, t, gather));
}

}  // namespace

VolumeBreakdown tp_volume(const ModelArch& arch, std::int64_t t,
                          const SequenceSpec& seq, GatherAccounting gather) {
  if (t < 1) throw ConfigError("tp must be >= 1");
  const std::int64_t row_bytes = arch.hidden_size() * arch.bytes_per_element();
  VolumeBreakdown v;
  v.allreduce_bytes =
      scale_bytes((2 * arch.num_layers() + 1) * seq.token_rows() * row_bytes,
                  correction_factor(CollectiveKind::kAllreduce, t));
  v.gather_bytes = gather_volume(arch, t, seq, gather);
  return v.finalize();
}

VolumeBreakdown pp_volume(const ModelArch& arch, std::int64_t p,
                          const SequenceSpec& seq) {
  if (p < 1) throw ConfigError("pp must be >= 1");
  VolumeBreakdown v;
  v.p2p_bytes = (p - 1) * 2 * seq.token_rows() * arch.hidden_size() *
                arch.bytes_per_element();
  return v.finalize();
}

VolumeBreakdown hybrid_volume(const ModelArch& arch,
                              const ParallelismLayout& layout,
                              const SequenceSpec& seq,
                              const VolumeOptions& options) {
  const std::int64_t t = layout.tp();
  const std::int64_t p = layout.pp();
  const std::int64_t b = arch.bytes_per_element();
  const std::int64_t rows = seq.token_rows();
  const std::int64_t row_bytes = arch.hidden_size() * b;
  // First stage holds ceil(L/p) layers, which is L/p when p divides L.
  const std::int64_t first_stage_layers = stage_layers(arch.num_layers(), p)[0];
  const std::int64_t allreduce_ops =
      2 * first_stage_layers + (options.include_first_rank_embedding ? 1 : 0);

  VolumeBreakdown v;
  v.allreduce_bytes =
      scale_bytes(allreduce_ops * rows * row_bytes,
                  correction_factor(CollectiveKind::kAllreduce, t));
  v.allgather_bytes =
      scale_bytes(2 * (p - 1) * rows * row_bytes,
                  correction_factor(CollectiveKind::kAllgather, t));
  v.gather_bytes = gather_volume(arch, t, seq, options.gather);
  v.p2p_bytes =
      (p - 1) * 2 * rows * ceil_div(arch.hidden_size(), t) * b;
  return v.finalize();
}

Ratio growth_factor(const ModelArch& arch, const ParallelismLayout& layout,
                    const SequenceSpec& seq_a, const SequenceSpec& seq_b,
                    const VolumeOptions& options) {
  const std::int64_t a = hybrid_volume(arch, layout, seq_a, options).total_bytes;
  if (a == 0) {
    throw DegenerateLayoutError(
        "growth factor undefined: baseline configuration moves no bytes (tp=" +
        std::to_string(layout.tp()) + ", pp=" + std::to_string(layout.pp()) +
        ")");
  }
  return Ratio(hybrid_volume(arch, layout, seq_b, options).total_bytes, a);
}

}  // namespace commscope
