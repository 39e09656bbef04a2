#ifndef COMMSCOPE_LATENCY_H_
#define COMMSCOPE_LATENCY_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "commscope/analytic.h"
#include "commscope/arch.h"
#include "commscope/schedule.h"

namespace commscope {

// Alpha-beta link parameters: alpha in seconds, beta in bytes/second.
struct HardwareProfile {
  double intra_alpha;
  double intra_beta;
  double inter_alpha;
  double inter_beta;
  std::int64_t gpus_per_node;

  // ConfigError unless every field is strictly positive.
  void validate() const;
  bool hierarchical() const { return inter_beta < intra_beta; }
};

// Same parameters inside and across nodes.
HardwareProfile flat_profile();
// Inter-node bandwidth one tenth of intra-node.
HardwareProfile hierarchical_profile();

HardwareProfile profile_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HardwareProfile& hw);

enum class LinkClass { kIntraNode, kInterNode };

std::string_view to_string(LinkClass link);

// LayoutError when some node hosts more ranks than hw.gpus_per_node.
void check_placement(const ParallelismLayout& layout,
                     const HardwareProfile& hw);

// Intra-node when every rank the event touches shares one node. Collectives
// touch their stage's TP group; Send/Recv touch the TP groups on both sides
// of the boundary.
LinkClass classify_link(const CommEvent& event, const ParallelismLayout& layout,
                        const HardwareProfile& hw);

double event_cost(const CommEvent& event, LinkClass link,
                  const HardwareProfile& hw);

// Communication share of the serving latency metrics, in seconds.
struct SloEstimate {
  double ttft_comm = 0;
  double tpot_comm = 0;  // mean over decode passes
  double e2e_comm = 0;   // ttft_comm + sum of decode pass costs
};

// Stages run back to back for a single request, so every event in a pass
// adds to that pass's time. Recv events are the receiving end of a Send
// that is already charged and cost nothing extra.
SloEstimate estimate_slo(const EventLog& log, const ParallelismLayout& layout,
                         const HardwareProfile& hw);

struct SweepRow {
  std::string model;
  std::int64_t tp;
  std::int64_t pp;
  std::int64_t prefill_len;
  std::int64_t decode_len;
  VolumeBreakdown volume;
  SloEstimate slo;
};

// One row per (layout, decode length), in argument order. Layouts are
// evaluated concurrently.
std::vector<SweepRow> sweep_decode_len(
    const ModelArch& arch, const std::vector<ParallelismLayout>& layouts,
    std::int64_t prefill_len, const std::vector<std::int64_t>& decode_lens,
    const HardwareProfile& hw, const VolumeOptions& options = {});

// Header: model,tp,pp,S_p,S_d,kind,bytes,ttft_comm,tpot_comm. Each sweep row
// expands to one line per family (allreduce, allgather, gather, p2p) and a
// total line.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

struct AdviceWeights {
  double ttft = 0;
  double tpot = 0;
  double e2e = 0;
  // Per gigabyte of total_bytes.
  double volume = 0;
};

struct Advice {
  ParallelismLayout layout;
  SloEstimate slo;
  std::int64_t total_bytes;
  double score;
};

// Scores every (t, p) with t * p == gpus, ranks packed gpus_per_node to a
// node, lowest score first. Ties go to lower total_bytes, then lower t.
// Layouts with more stages than layers are infeasible.
std::vector<Advice> advise(const ModelArch& arch, const HardwareProfile& hw,
                           const SequenceSpec& seq, std::int64_t gpus,
                           const AdviceWeights& weights);

}  // namespace commscope

#endif  // COMMSCOPE_LATENCY_H_
