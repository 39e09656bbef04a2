#include "commscope/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "commscope/error.h"
#include "commscope/schedule.h"
#include "commscope/trace.h"

namespace commscope::cli {

Format parse_format(const std::string& name) {
  if (name == "table") return Format::kTable;
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  throw ConfigError("unknown format '" + name + "'; expected table, csv, json");
}

ModelArch RunConfig::arch() const { return resolve_model(model); }

ParallelismLayout RunConfig::layout() const {
  if (hardware) return ParallelismLayout::packed(tp, pp, profile().gpus_per_node);
  return ParallelismLayout(tp, pp);
}

SequenceSpec RunConfig::sequence() const {
  return SequenceSpec(prefill_len, decode_len);
}

HardwareProfile RunConfig::profile() const {
  if (!hardware || *hardware == "flat") return flat_profile();
  if (*hardware == "hierarchical") return hierarchical_profile();
  return profile_from_json(read_json_file(*hardware));
}

VolumeOptions RunConfig::volume_options() const {
  return {.include_first_rank_embedding = include_first_rank_embedding,
          .gather = gather};
}

void apply_config_json(const nlohmann::json& j, RunConfig& config) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    if (j.contains("model")) config.model = j.at("model").get<std::string>();
    if (j.contains("tp")) config.tp = j.at("tp").get<std::int64_t>();
    if (j.contains("pp")) config.pp = j.at("pp").get<std::int64_t>();
    if (j.contains("prefill_len")) {
      config.prefill_len = j.at("prefill_len").get<std::int64_t>();
    }
    if (j.contains("decode_len")) {
      config.decode_len = j.at("decode_len").get<std::int64_t>();
    }
    if (j.contains("hardware") && !j.at("hardware").is_null()) {
      config.hardware = j.at("hardware").get<std::string>();
    }
    if (j.contains("format")) {
      config.format = parse_format(j.at("format").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

View parse_view(const std::string& text) {
  if (text == "global") return {View::Scope::kGlobal, 0};
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string scope = text.substr(0, colon);
    const std::string index = text.substr(colon + 1);
    const bool numeric =
        !index.empty() && std::all_of(index.begin(), index.end(), ::isdigit);
    if (numeric && scope == "stage") {
      return {View::Scope::kStage, std::stoll(index)};
    }
    if (numeric && scope == "rank") {
      return {View::Scope::kRank, std::stoll(index)};
    }
  }
  throw ConfigError("bad view '" + text +
                    "'; expected global, stage:N or rank:N");
}

namespace {

EventLog select_view(const EventLog& log, const ParallelismLayout& layout,
                     const View& view) {
  switch (view.scope) {
    case View::Scope::kGlobal:
      return log;
    case View::Scope::kStage:
      if (view.index >= layout.pp()) {
        throw ConfigError("stage " + std::to_string(view.index) +
                          " out of range for pp=" +
                          std::to_string(layout.pp()));
      }
      return stage_view(log, view.index);
    case View::Scope::kRank:
      return rank_view(log, layout, view.index);
  }
  return log;
}

std::string ratio_text(Ratio r) {
  std::ostringstream s;
  s << r.numerator();
  if (r.denominator() != 1) s << '/' << r.denominator();
  return s.str();
}

void write_header(std::ostream& out, const RunConfig& config,
                  const ModelArch& arch) {
  out << "model " << arch.name() << "  tp=" << config.tp
      << " pp=" << config.pp << "  S_p=" << config.prefill_len
      << " S_d=" << config.decode_len << "\n\n";
}

}  // namespace

int cmd_predict(const RunConfig& config, std::ostream& out) {
  const ModelArch arch = config.arch();
  const VolumeBreakdown v = hybrid_volume(arch, config.layout(),
                                          config.sequence(),
                                          config.volume_options());
  const std::pair<const char*, std::int64_t> rows[] = {
      {"allreduce", v.allreduce_bytes},
      {"allgather", v.allgather_bytes},
      {"gather", v.gather_bytes},
      {"p2p", v.p2p_bytes},
      {"total", v.total_bytes}};
  switch (config.format) {
    case Format::kJson: {
      nlohmann::json j = to_json(v);
      j["model"] = arch.name();
      j["tp"] = config.tp;
      j["pp"] = config.pp;
      j["prefill_len"] = config.prefill_len;
      j["decode_len"] = config.decode_len;
      out << j.dump(2) << '\n';
      break;
    }
    case Format::kCsv:
      out << "kind,bytes\n";
      for (const auto& [kind, bytes] : rows) out << kind << ',' << bytes << '\n';
      break;
    case Format::kTable: {
      write_header(out, config, arch);
      for (const auto& [kind, bytes] : rows) {
        out << std::left << std::setw(12) << kind << std::right
            << std::setw(16) << bytes << " bytes\n";
      }
      const std::int64_t t = config.tp;
      out << "\ncorrection factors (d=" << t << "): Allreduce 2(d-1)/d = "
          << ratio_text(correction_factor(CollectiveKind::kAllreduce, t))
          << ", Allgather (d-1)/d = "
          << ratio_text(correction_factor(CollectiveKind::kAllgather, t))
          << ", Gather "
          << ratio_text(
                 correction_factor(CollectiveKind::kGather, t, config.gather))
          << ", Send/Recv 1\n";
      break;
    }
  }
  return kOk;
}

int cmd_simulate(const RunConfig& config, const View& view,
                 const std::optional<std::string>& events_path,
                 std::ostream& out) {
  const ModelArch arch = config.arch();
  const ParallelismLayout layout = config.layout();
  const EventLog log = simulate(arch, layout, config.sequence(), config.gather);
  if (events_path) {
    std::ofstream file(*events_path);
    if (!file) throw IoError("cannot write " + *events_path);
    write_jsonl(file, log);
  }
  const KindTable table = tabulate(select_view(log, layout, view));
  switch (config.format) {
    case Format::kJson:
      out << to_json(table).dump(2) << '\n';
      break;
    case Format::kCsv:
      write_csv(out, table);
      break;
    case Format::kTable:
      write_header(out, config, arch);
      write_markdown(out, table);
      break;
  }
  return kOk;
}

int cmd_compare(const RunConfig& config, const View& view,
                const std::string& observations_path, std::ostream& out) {
  std::ifstream in(observations_path);
  if (!in) throw IoError("cannot read " + observations_path);
  std::vector<ObservationRecord> observed;
  try {
    observed = parse_observations(in);
  } catch (const EnumError& e) {
    throw IoError(observations_path + ": " + e.what());
  } catch (const ParseError& e) {
    throw IoError(observations_path + ": " + e.what());
  }

  const ParallelismLayout layout = config.layout();
  const EventLog log =
      simulate(config.arch(), layout, config.sequence(), config.gather);
  const DiffReport report =
      diff(observed, tabulate(select_view(log, layout, view)));
  if (config.format == Format::kJson) {
    out << to_json(report).dump(2) << '\n';
  } else {
    write_markdown(out, report);
  }
  return report.exact_match ? kOk : kMismatch;
}

int cmd_sweep(const RunConfig& config,
              const std::vector<std::int64_t>& decode_lens,
              const std::vector<ParallelismLayout>& layouts,
              std::ostream& out) {
  const auto rows =
      sweep_decode_len(config.arch(), layouts, config.prefill_len, decode_lens,
                       config.profile(), config.volume_options());
  if (config.format == Format::kJson) {
    nlohmann::json j = nlohmann::json::array();
    for (const SweepRow& row : rows) {
      nlohmann::json r = to_json(row.volume);
      r["model"] = row.model;
      r["tp"] = row.tp;
      r["pp"] = row.pp;
      r["S_p"] = row.prefill_len;
      r["S_d"] = row.decode_len;
      r["ttft_comm"] = row.slo.ttft_comm;
      r["tpot_comm"] = row.slo.tpot_comm;
      j.push_back(r);
    }
    out << j.dump(2) << '\n';
  } else {
    write_sweep_csv(out, rows);
  }
  return kOk;
}

int cmd_advise(const RunConfig& config, std::int64_t gpus,
               const AdviceWeights& weights, std::ostream& out) {
  const auto ranked = advise(config.arch(), config.profile(),
                             config.sequence(), gpus, weights);
  switch (config.format) {
    case Format::kJson: {
      nlohmann::json j = nlohmann::json::array();
      for (const Advice& a : ranked) {
        j.push_back({{"tp", a.layout.tp()},
                     {"pp", a.layout.pp()},
                     {"ttft_comm", a.slo.ttft_comm},
                     {"tpot_comm", a.slo.tpot_comm},
                     {"e2e_comm", a.slo.e2e_comm},
                     {"total_bytes", a.total_bytes},
                     {"score", a.score}});
      }
      out << j.dump(2) << '\n';
      break;
    }
    case Format::kCsv:
    case Format::kTable: {
      const bool csv = config.format == Format::kCsv;
      const char* sep = csv ? "," : " | ";
      if (!csv) out << "| ";
      out << "rank" << sep << "tp" << sep << "pp" << sep << "ttft_comm" << sep
          << "tpot_comm" << sep << "e2e_comm" << sep << "total_bytes" << sep
          << "score" << (csv ? "\n" : " |\n");
      if (!csv) out << "|---|---|---|---|---|---|---|---|\n";
      const auto old_precision = out.precision(9);
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        const Advice& a = ranked[i];
        if (!csv) out << "| ";
        out << i + 1 << sep << a.layout.tp() << sep << a.layout.pp() << sep
            << a.slo.ttft_comm << sep << a.slo.tpot_comm << sep
            << a.slo.e2e_comm << sep << a.total_bytes << sep << a.score
            << (csv ? "\n" : " |\n");
      }
      out.precision(old_precision);
      break;
    }
  }
  return kOk;
}

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream s(text);
  std::string part;
  while (std::getline(s, part, sep)) parts.push_back(part);
  return parts;
}

std::int64_t parse_int(const std::string& text, const char* what) {
  std::size_t used = 0;
  std::int64_t value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError(std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError("bad weight '" + text + "'");
  }
  return value;
}

AdviceWeights parse_weights(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() < 3 || parts.size() > 4) {
    throw ConfigError("--weights expects ttft,tpot,e2e[,volume]");
  }
  AdviceWeights w{.ttft = parse_double(parts[0]),
                  .tpot = parse_double(parts[1]),
                  .e2e = parse_double(parts[2])};
  if (parts.size() == 4) w.volume = parse_double(parts[3]);
  return w;
}

// "4x1,1x4,2x2" as tp x pp.
std::vector<ParallelismLayout> parse_layouts(const std::string& text,
                                             std::int64_t gpus_per_node) {
  std::vector<ParallelismLayout> layouts;
  for (const std::string& item : split(text, ',')) {
    const auto dims = split(item, 'x');
    if (dims.size() != 2) {
      throw ConfigError("bad layout '" + item + "'; expected TPxPP");
    }
    layouts.push_back(ParallelismLayout::packed(
        parse_int(dims[0], "tp"), parse_int(dims[1], "pp"), gpus_per_node));
  }
  return layouts;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Communication volume, schedule and latency model for "
               "distributed LLM inference",
               "commscope"};
  app.require_subcommand(1);

  RunConfig config;
  std::string format = "table";
  std::string config_path;
  bool wire_gather = false;
  bool no_embedding = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file with RunConfig keys");
    cmd->add_option("--model", config.model, "Preset name or model JSON path");
    cmd->add_option("--tp", config.tp, "Tensor-parallel degree");
    cmd->add_option("--pp", config.pp, "Pipeline-parallel degree");
    cmd->add_option("--prefill", config.prefill_len, "Prompt tokens (S_p)");
    cmd->add_option("--decode", config.decode_len,
                    "Generated tokens (S_d), including the first");
    cmd->add_option("--hardware", config.hardware,
                    "flat, hierarchical, or a profile JSON path");
    cmd->add_option("--format", format, "table, csv or json")
        ->check(CLI::IsMember({"table", "csv", "json"}));
    cmd->add_flag("--wire-gather", wire_gather,
                  "Charge the logits Gather for every sending rank");
    cmd->add_flag("--no-embedding", no_embedding,
                  "Leave out the first stage's embedding Allreduce");
  };

  auto* predict = app.add_subcommand("predict", "Closed-form volumes");
  add_common(predict);

  std::string view_text = "stage:0";
  std::optional<std::string> events_path;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Event-level schedule and summary");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--view", view_text, "global, stage:N or rank:N");
  simulate_cmd->add_option("--events", events_path,
                           "Write the event log as JSON lines");

  std::string observations_path;
  auto* compare = app.add_subcommand(
      "compare", "Diff observed counts against the simulated schedule");
  add_common(compare);
  compare->add_option("--view", view_text, "global, stage:N or rank:N");
  compare->add_option("--observations", observations_path,
                      "Observation JSON-lines file")
      ->required();

  std::string decode_lens_text;
  std::string layouts_text;
  auto* sweep = app.add_subcommand("sweep", "Volume and latency sweep as CSV");
  add_common(sweep);
  sweep->add_option("--decode-lens", decode_lens_text,
                    "Comma-separated decode lengths");
  sweep->add_option("--layouts", layouts_text,
                    "Comma-separated TPxPP layouts, e.g. 4x1,1x4,2x2");

  std::int64_t gpus = 0;
  std::string weights_text = "1,0,0";
  auto* advise_cmd = app.add_subcommand("advise", "Rank parallelism layouts");
  add_common(advise_cmd);
  advise_cmd->add_option("--gpus", gpus, "Total GPU count")->required();
  advise_cmd->add_option("--weights", weights_text,
                         "ttft,tpot,e2e[,volume] weights");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!config_path.empty()) {
      RunConfig from_file;
      apply_config_json(read_json_file(config_path), from_file);
      // Explicit flags win over the file.
      if (cmd->count("--model") == 0) config.model = from_file.model;
      if (cmd->count("--tp") == 0) config.tp = from_file.tp;
      if (cmd->count("--pp") == 0) config.pp = from_file.pp;
      if (cmd->count("--prefill") == 0) {
        config.prefill_len = from_file.prefill_len;
      }
      if (cmd->count("--decode") == 0) config.decode_len = from_file.decode_len;
      if (cmd->count("--hardware") == 0) config.hardware = from_file.hardware;
      if (cmd->count("--format") == 0) config.format = from_file.format;
    }
    if (cmd->count("--format") > 0) config.format = parse_format(format);
    if (wire_gather) config.gather = GatherAccounting::kWireLevel;
    if (no_embedding) config.include_first_rank_embedding = false;

    if (cmd == predict) return cmd_predict(config, out);
    if (cmd == simulate_cmd) {
      return cmd_simulate(config, parse_view(view_text), events_path, out);
    }
    if (cmd == compare) {
      return cmd_compare(config, parse_view(view_text), observations_path, out);
    }
    if (cmd == sweep) {
      std::vector<std::int64_t> decode_lens;
      if (decode_lens_text.empty()) {
        decode_lens.push_back(config.decode_len);
      } else {
        for (const auto& item : split(decode_lens_text, ',')) {
          decode_lens.push_back(parse_int(item, "decode length"));
        }
      }
      const std::int64_t gpn = config.profile().gpus_per_node;
      std::vector<ParallelismLayout> layouts =
          layouts_text.empty()
              ? std::vector{ParallelismLayout::packed(config.tp, config.pp, gpn)}
              : parse_layouts(layouts_text, gpn);
      return cmd_sweep(config, decode_lens, layouts, out);
    }
    return cmd_advise(config, gpus, parse_weights(weights_text), out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace commscope::cli
