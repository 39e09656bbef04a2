#include "commscope/latency.h"

#include <algorithm>
#include <future>
#include <map>
#include <ostream>

#include "commscope/error.h"

namespace commscope {

void HardwareProfile::validate() const {
  if (!(intra_alpha > 0 && intra_beta > 0 && inter_alpha > 0 &&
        inter_beta > 0 && gpus_per_node > 0)) {
    throw ConfigError("hardware profile fields must all be > 0");
  }
}

HardwareProfile flat_profile() {
  return {.intra_alpha = 5e-6,
          .intra_beta = 200e9,
          .inter_alpha = 5e-6,
          .inter_beta = 200e9,
          .gpus_per_node = 4};
}

HardwareProfile hierarchical_profile() {
  return {.intra_alpha = 5e-6,
          .intra_beta = 200e9,
          .inter_alpha = 1e-5,
          .inter_beta = 20e9,
          .gpus_per_node = 4};
}

HardwareProfile profile_from_json(const nlohmann::json& j) {
  HardwareProfile hw;
  try {
    hw = {.intra_alpha = j.at("intra_alpha").get<double>(),
          .intra_beta = j.at("intra_beta").get<double>(),
          .inter_alpha = j.at("inter_alpha").get<double>(),
          .inter_beta = j.at("inter_beta").get<double>(),
          .gpus_per_node = j.at("gpus_per_node").get<std::int64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("hardware profile: ") + e.what());
  }
  hw.validate();
  return hw;
}

nlohmann::json to_json(const HardwareProfile& hw) {
  return {{"intra_alpha", hw.intra_alpha},
          {"intra_beta", hw.intra_beta},
          {"inter_alpha", hw.inter_alpha},
          {"inter_beta", hw.inter_beta},
          {"gpus_per_node", hw.gpus_per_node}};
}

std::string_view to_string(LinkClass link) {
  return link == LinkClass::kIntraNode ? "intra" : "inter";
}

void check_placement(const ParallelismLayout& layout,
                     const HardwareProfile& hw) {
  std::map<std::int64_t, std::int64_t> per_node;
  for (std::int64_t node : layout.placement()) {
    if (++per_node[node] > hw.gpus_per_node) {
      throw LayoutError("node " + std::to_string(node) + " hosts more than " +
                        std::to_string(hw.gpus_per_node) + " ranks");
    }
  }
}

namespace {

LinkClass classify_unchecked(const CommEvent& event,
                             const ParallelismLayout& layout) {
  // Stages whose TP groups the event touches.
  std::int64_t first_stage = event.stage;
  std::int64_t last_stage = event.stage;
  if (event.kind == CollectiveKind::kSend) last_stage = event.stage + 1;
  if (event.kind == CollectiveKind::kRecv) first_stage = event.stage - 1;
  const std::int64_t node = layout.node_of(layout.rank_of(first_stage, 0));
  for (std::int64_t s = first_stage; s <= last_stage; ++s) {
    for (std::int64_t j = 0; j < layout.tp(); ++j) {
      if (layout.node_of(layout.rank_of(s, j)) != node) {
        return LinkClass::kInterNode;
      }
    }
  }
  return LinkClass::kIntraNode;
}

}  // namespace

LinkClass classify_link(const CommEvent& event, const ParallelismLayout& layout,
                        const HardwareProfile& hw) {
  check_placement(layout, hw);
  return classify_unchecked(event, layout);
}

double event_cost(const CommEvent& event, LinkClass link,
                  const HardwareProfile& hw) {
  const bool intra = link == LinkClass::kIntraNode;
  const double alpha = intra ? hw.intra_alpha : hw.inter_alpha;
  const double beta = intra ? hw.intra_beta : hw.inter_beta;
  return alpha + static_cast<double>(event.bytes_on_wire) / beta;
}

SloEstimate estimate_slo(const EventLog& log, const ParallelismLayout& layout,
                         const HardwareProfile& hw) {
  hw.validate();
  check_placement(layout, hw);
  double prefill = 0;
  double decode = 0;
  std::int64_t decode_passes = 0;
  for (const CommEvent& e : log) {
    decode_passes = std::max(decode_passes, e.step);
    if (e.kind == CollectiveKind::kRecv) continue;
    const double cost = event_cost(e, classify_unchecked(e, layout), hw);
    (e.phase == Phase::kPrefill ? prefill : decode) += cost;
  }
  SloEstimate slo;
  slo.ttft_comm = prefill;
  slo.tpot_comm = decode_passes > 0 ? decode / decode_passes : 0.0;
  slo.e2e_comm = prefill + decode;
  return slo;
}

std::vector<SweepRow> sweep_decode_len(
    const ModelArch& arch, const std::vector<ParallelismLayout>& layouts,
    std::int64_t prefill_len, const std::vector<std::int64_t>& decode_lens,
    const HardwareProfile& hw, const VolumeOptions& options) {
  if (layouts.empty() || decode_lens.empty()) {
    throw ConfigError("sweep needs at least one layout and one decode length");
  }
  hw.validate();
  auto run_layout = [&](const ParallelismLayout& layout) {
    std::vector<SweepRow> rows;
    for (std::int64_t decode_len : decode_lens) {
      const SequenceSpec seq(prefill_len, decode_len);
      rows.push_back(SweepRow{
          .model = arch.name(),
          .tp = layout.tp(),
          .pp = layout.pp(),
          .prefill_len = prefill_len,
          .decode_len = decode_len,
          .volume = hybrid_volume(arch, layout, seq, options),
          .slo = estimate_slo(simulate(arch, layout, seq, options.gather),
                              layout, hw),
      });
    }
    return rows;
  };
  std::vector<std::future<std::vector<SweepRow>>> pending;
  for (const ParallelismLayout& layout : layouts) {
    pending.push_back(std::async(std::launch::async, run_layout, layout));
  }
  std::vector<SweepRow> rows;
  for (auto& f : pending) {
    auto part = f.get();
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "model,tp,pp,S_p,S_d,kind,bytes,ttft_comm,tpot_comm\n";
  const auto old_precision = out.precision(9);
  for (const SweepRow& row : rows) {
    const std::pair<const char*, std::int64_t> kinds[] = {
        {"allreduce", row.volume.allreduce_bytes},
        {"allgather", row.volume.allgather_bytes},
        {"gather", row.volume.gather_bytes},
        {"p2p", row.volume.p2p_bytes},
        {"total", row.volume.total_bytes}};
    for (const auto& [kind, bytes] : kinds) {
      out << row.model << ',' << row.tp << ',' << row.pp << ','
          << row.prefill_len << ',' << row.decode_len << ',' << kind << ','
          << bytes << ',' << row.slo.ttft_comm << ',' << row.slo.tpot_comm
          << '\n';
    }
  }
  out.precision(old_precision);
}

std::vector<Advice> advise(const ModelArch& arch, const HardwareProfile& hw,
                           const SequenceSpec& seq, std::int64_t gpus,
                           const AdviceWeights& weights) {
  hw.validate();
  if (gpus < 1) throw ConfigError("gpu count must be >= 1");
  if (weights.ttft < 0 || weights.tpot < 0 || weights.e2e < 0 ||
      weights.volume < 0) {
    throw ConfigError("advice weights must be non-negative");
  }
  if (weights.ttft + weights.tpot + weights.e2e + weights.volume == 0) {
    throw ConfigError("advice weights must not all be zero");
  }

  std::vector<Advice> ranked;
  for (std::int64_t t = 1; t <= gpus; ++t) {
    if (gpus % t != 0) continue;
    const std::int64_t p = gpus / t;
    if (p > arch.num_layers()) continue;
    auto layout = ParallelismLayout::packed(t, p, hw.gpus_per_node);
    const SloEstimate slo = estimate_slo(simulate(arch, layout, seq), layout, hw);
    const std::int64_t total = hybrid_volume(arch, layout, seq).total_bytes;
    const double score = weights.ttft * slo.ttft_comm +
                         weights.tpot * slo.tpot_comm +
                         weights.e2e * slo.e2e_comm +
                         weights.volume * static_cast<double>(total) / 1e9;
    ranked.push_back(Advice{.layout = std::move(layout),
                            .slo = slo,
                            .total_bytes = total,
                            .score = score});
  }
  if (ranked.empty()) {
    throw LayoutError("no feasible layout for " + std::to_string(gpus) +
                      " GPUs");
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Advice& a, const Advice& b) {
                     if (a.score != b.score) return a.score < b.score;
                     if (a.total_bytes != b.total_bytes) {
                       return a.total_bytes < b.total_bytes;
                     }
                     return a.layout.tp() < b.layout.tp();
                   });
  return ranked;
}

}  // namespace commscope
