#include "commscope/schedule.h"

#include <ostream>
#include <sstream>

#include "commscope/error.h"

namespace commscope {

std::string_view to_string(Phase phase) {
  return phase == Phase::kPrefill ? "Prefill" : "Decode";
}

Phase parse_phase(std::string_view name) {
  if (name == "Prefill") return Phase::kPrefill;
  if (name == "Decode") return Phase::kDecode;
  throw EnumError("unknown phase '" + std::string(name) +
                  "'; valid phases: Prefill, Decode");
}

std::string format_shape(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

class EventEmitter {
 public:
  EventEmitter(EventLog& log, std::int64_t bytes_per_element,
               GatherAccounting gather)
      : log_(log), bytes_per_element_(bytes_per_element), gather_(gather) {}

  void emit(CollectiveKind kind, Phase phase, std::int64_t step,
            std::int64_t stage, std::optional<std::int64_t> layer,
            Shape shape, std::int64_t group_size) {
    std::int64_t elements = 1;
    for (std::int64_t dim : shape) elements *= dim;
    const std::int64_t logical = elements * bytes_per_element_;
    log_.push_back(CommEvent{
        .kind = kind,
        .phase = phase,
        .step = step,
        .stage = stage,
        .layer = layer,
        .shape = std::move(shape),
        .element_count = elements,
        .bytes_per_element = bytes_per_element_,
        .bytes_on_wire = scale_bytes(
            logical, correction_factor(kind, group_size, gather_)),
        .group_size = group_size,
    });
  }

 private:
  EventLog& log_;
  std::int64_t bytes_per_element_;
  GatherAccounting gather_;
};

}  // namespace

EventLog simulate(const ModelArch& arch, const ParallelismLayout& layout,
                  const SequenceSpec& seq, GatherAccounting gather) {
  const std::int64_t t = layout.tp();
  const std::int64_t p = layout.pp();
  const std::int64_t h = arch.hidden_size();
  const std::int64_t h_slice = ceil_div(h, t);
  const std::int64_t v_slice = ceil_div(arch.vocab_size(), t);
  const std::vector<std::int64_t> layers = stage_layers(arch.num_layers(), p);

  EventLog log;
  EventEmitter out(log, arch.bytes_per_element(), gather);
  for (std::int64_t step = 0; step < seq.passes(); ++step) {
    const Phase phase = step == 0 ? Phase::kPrefill : Phase::kDecode;
    const std::int64_t rows = step == 0 ? seq.prefill_len() : 1;
    for (std::int64_t stage = 0; stage < p; ++stage) {
      if (stage > 0) {
        for (int i = 0; i < 2; ++i) {
          out.emit(CollectiveKind::kSend, phase, step, stage - 1, std::nullopt,
                   {rows, h_slice}, 2);
          out.emit(CollectiveKind::kRecv, phase, step, stage, std::nullopt,
                   {rows, h_slice}, 2);
        }
        if (t > 1) {
          for (int i = 0; i < 2; ++i) {
            out.emit(CollectiveKind::kAllgather, phase, step, stage,
                     std::nullopt, {rows, h}, t);
          }
        }
      }
      if (t == 1) continue;
      if (stage == 0) {
        out.emit(CollectiveKind::kAllreduce, phase, step, stage, std::nullopt,
                 {rows, h}, t);
      }
      for (std::int64_t layer = 0; layer < layers[stage]; ++layer) {
        // Attention output projection, then MLP down projection.
        out.emit(CollectiveKind::kAllreduce, phase, step, stage, layer,
                 {rows, h}, t);
        out.emit(CollectiveKind::kAllreduce, phase, step, stage, layer,
                 {rows, h}, t);
      }
    }
    if (t > 1) {
      out.emit(CollectiveKind::kGather, phase, step, p - 1, std::nullopt,
               {v_slice}, t);
    }
  }
  return log;
}

std::int64_t kv_factor_count(std::int64_t p, const SequenceSpec& seq,
                             Phase phase) {
  if (p < 1) throw ConfigError("pp must be >= 1");
  const std::int64_t per_pass = (p - 1) * 2;
  return phase == Phase::kPrefill ? per_pass
                                  : per_pass * (seq.decode_len() - 1);
}

KindTable tabulate(const EventLog& log) {
  KindTable table;
  for (const CommEvent& e : log) {
    KindRow& row = table[{e.phase, e.kind}];
    ++row.count;
    ++row.shape_counts[e.shape];
    row.logical_bytes += e.logical_bytes();
    row.wire_bytes += e.bytes_on_wire;
  }
  return table;
}

EventLog stage_view(const EventLog& log, std::int64_t stage) {
  EventLog view;
  for (const CommEvent& e : log) {
    if (e.kind != CollectiveKind::kAllreduce || e.stage == stage) {
      view.push_back(e);
    }
  }
  return view;
}

EventLog rank_view(const EventLog& log, const ParallelismLayout& layout,
                   std::int64_t rank) {
  if (rank < 0 || rank >= layout.world_size()) {
    throw ConfigError("rank " + std::to_string(rank) + " out of range [0, " +
                      std::to_string(layout.world_size()) + ")");
  }
  const std::int64_t stage = layout.stage_of(rank);
  EventLog view;
  for (const CommEvent& e : log) {
    if (e.stage == stage) view.push_back(e);
  }
  return view;
}

ScheduleSummary summarize(const EventLog& log,
                          const ParallelismLayout& layout) {
  ScheduleSummary summary;
  summary.whole_run = tabulate(log);
  for (std::int64_t s = 0; s < layout.pp(); ++s) {
    summary.stages.push_back(tabulate(stage_view(log, s)));
  }
  for (std::int64_t r = 0; r < layout.world_size(); ++r) {
    summary.ranks.push_back(tabulate(rank_view(log, layout, r)));
  }
  return summary;
}

VolumeBreakdown event_volume(const EventLog& log, std::int64_t stage) {
  VolumeBreakdown v;
  for (const CommEvent& e : log) {
    switch (e.kind) {
      case CollectiveKind::kAllreduce:
        if (e.stage == stage) v.allreduce_bytes += e.bytes_on_wire;
        break;
      case CollectiveKind::kAllgather:
        v.allgather_bytes += e.bytes_on_wire;
        break;
      case CollectiveKind::kGather:
        v.gather_bytes += e.bytes_on_wire;
        break;
      case CollectiveKind::kSend:
        v.p2p_bytes += e.bytes_on_wire;
        break;
      case CollectiveKind::kRecv:
        break;
    }
  }
  return v.finalize();
}

nlohmann::json to_json(const CommEvent& e) {
  nlohmann::json j = {{"kind", to_string(e.kind)},
                      {"phase", to_string(e.phase)},
                      {"step", e.step},
                      {"stage", e.stage},
                      {"layer", nullptr},
                      {"shape", e.shape},
                      {"element_count", e.element_count},
                      {"bytes_per_element", e.bytes_per_element},
                      {"bytes_on_wire", e.bytes_on_wire},
                      {"group_size", e.group_size}};
  if (e.layer) j["layer"] = *e.layer;
  return j;
}

CommEvent event_from_json(const nlohmann::json& j) {
  CommEvent e{
      .kind = parse_kind(j.at("kind").get<std::string>()),
      .phase = parse_phase(j.at("phase").get<std::string>()),
      .step = j.at("step").get<std::int64_t>(),
      .stage = j.at("stage").get<std::int64_t>(),
      .layer = std::nullopt,
      .shape = j.at("shape").get<Shape>(),
      .element_count = j.at("element_count").get<std::int64_t>(),
      .bytes_per_element = j.at("bytes_per_element").get<std::int64_t>(),
      .bytes_on_wire = j.at("bytes_on_wire").get<std::int64_t>(),
      .group_size = j.at("group_size").get<std::int64_t>(),
  };
  if (j.contains("layer") && !j.at("layer").is_null()) {
    e.layer = j.at("layer").get<std::int64_t>();
  }
  return e;
}

void write_jsonl(std::ostream& out, const EventLog& log) {
  for (const CommEvent& e : log) out << to_json(e).dump() << '\n';
}

namespace {

std::string shape_list(const KindRow& row) {
  std::string out;
  for (const auto& [shape, count] : row.shape_counts) {
    if (!out.empty()) out += ';';
    out += format_shape(shape);
  }
  return out;
}

}  // namespace

void write_markdown(std::ostream& out, const KindTable& table) {
  out << "| Prefill Collective | Count | Shape "
         "| Decode Collective | Count | Shape |\n"
      << "|---|---|---|---|---|---|\n";
  for (CollectiveKind kind : kAllKinds) {
    auto prefill = table.find({Phase::kPrefill, kind});
    auto decode = table.find({Phase::kDecode, kind});
    if (prefill == table.end() && decode == table.end()) continue;
    auto cells = [&](KindTable::const_iterator it) {
      if (it == table.end()) return std::string("- | 0 | - ");
      std::ostringstream s;
      s << to_string(kind) << " | " << it->second.count << " | "
        << shape_list(it->second) << ' ';
      return s.str();
    };
    out << "| " << cells(prefill) << "| " << cells(decode) << "|\n";
  }
}

void write_csv(std::ostream& out, const KindTable& table) {
  out << "phase,kind,count,shape,logical_bytes,wire_bytes\n";
  for (const auto& [key, row] : table) {
    out << to_string(key.first) << ',' << to_string(key.second) << ','
        << row.count << ",\"" << shape_list(row) << "\"," << row.logical_bytes
        << ',' << row.wire_bytes << '\n';
  }
}

nlohmann::json to_json(const KindTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, row] : table) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const auto& [shape, count] : row.shape_counts) {
      shapes.push_back({{"shape", shape}, {"count", count}});
    }
    rows.push_back({{"phase", to_string(key.first)},
                    {"kind", to_string(key.second)},
                    {"count", row.count},
                    {"shapes", shapes},
                    {"logical_bytes", row.logical_bytes},
                    {"wire_bytes", row.wire_bytes}});
  }
  return rows;
}

}  // namespace commscope
