#ifndef COMMSCOPE_SCHEDULE_H_
#define COMMSCOPE_SCHEDULE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "commscope/analytic.h"
#include "commscope/arch.h"

namespace commscope {

enum class Phase { kPrefill, kDecode };

std::string_view to_string(Phase phase);
Phase parse_phase(std::string_view name);

using Shape = std::vector<std::int64_t>;

std::string format_shape(const Shape& shape);  // "[128,4096]"

// One communication operation as seen by one participating rank.
//
// step is 0 for the prefill pass and k for the k-th decode pass. stage is the
// pipeline stage the event belongs to: the reducing stage for Allreduce, the
// receiving stage for Allgather and Recv, the sending stage for Send, the
// last stage for Gather. layer is the stage-local layer index, absent for the
// embedding Allreduce and for non-layer traffic.
struct CommEvent {
  CollectiveKind kind;
  Phase phase;
  std::int64_t step;
  std::int64_t stage;
  std::optional<std::int64_t> layer;
  Shape shape;
  std::int64_t element_count;
  std::int64_t bytes_per_element;
  // element_count * bytes_per_element * correction_factor(kind, group_size).
  std::int64_t bytes_on_wire;
  std::int64_t group_size;

  std::int64_t logical_bytes() const {
    return element_count * bytes_per_element;
  }

  bool operator==(const CommEvent&) const = default;
};

using EventLog = std::vector<CommEvent>;

// Replays one request (a prefill pass over S_p tokens followed by S_d - 1
// single-token decode passes) and returns every communication event in
// execution order. Within a pass, stage by stage: embedding Allreduce (stage
// 0, t > 1), two Allreduce per layer (t > 1); then at the boundary to the
// next stage two Send/Recv pairs of [S, h/t] (p > 1) followed by two
// Allgather of [S, h] on the receiving stage (t > 1). A pass ends with one
// Gather of [ceil(v/t)] over the last stage (t > 1).
EventLog simulate(const ModelArch& arch, const ParallelismLayout& layout,
                  const SequenceSpec& seq,
                  GatherAccounting gather = GatherAccounting::kSenderSlice);

// Per-direction point-to-point operation count for one phase:
// (p-1)*2 in prefill, (p-1)*2*(S_d-1) in decode.
std::int64_t kv_factor_count(std::int64_t p, const SequenceSpec& seq,
                             Phase phase);

// Aggregate of events sharing (phase, kind).
struct KindRow {
  std::int64_t count = 0;
  std::map<Shape, std::int64_t> shape_counts;
  std::int64_t logical_bytes = 0;  // element_count * bytes_per_element
  std::int64_t wire_bytes = 0;

  bool operator==(const KindRow&) const = default;
};

using KindKey = std::pair<Phase, CollectiveKind>;
using KindTable = std::map<KindKey, KindRow>;

KindTable tabulate(const EventLog& log);

// Events as they appear in one stage's profile: that stage's Allreduce
// events plus all pipeline-wide traffic (Allgather, Send, Recv, Gather).
EventLog stage_view(const EventLog& log, std::int64_t stage);

// Events a single rank takes part in: everything tagged with its stage.
EventLog rank_view(const EventLog& log, const ParallelismLayout& layout,
                   std::int64_t rank);

struct ScheduleSummary {
  KindTable whole_run;
  std::vector<KindTable> stages;
  std::vector<KindTable> ranks;
};

ScheduleSummary summarize(const EventLog& log, const ParallelismLayout& layout);

// Wire bytes per family over a stage view. Send carries the point-to-point
// bytes; Recv is the other end of the same transfer and is not added again.
// For stage 0 this equals hybrid_volume with the embedding term included.
VolumeBreakdown event_volume(const EventLog& log, std::int64_t stage = 0);

// JSON-lines export: one CommEvent object per line.
nlohmann::json to_json(const CommEvent& event);
CommEvent event_from_json(const nlohmann::json& j);
void write_jsonl(std::ostream& out, const EventLog& log);

// Summary tables. Markdown uses the two-phase layout
// | Collective | Count | Shape | Collective | Count | Shape |.
void write_markdown(std::ostream& out, const KindTable& table);
void write_csv(std::ostream& out, const KindTable& table);
nlohmann::json to_json(const KindTable& table);

}  // namespace commscope

#endif  // COMMSCOPE_SCHEDULE_H_
