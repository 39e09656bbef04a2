#ifndef COMMSCOPE_CLI_H_
#define COMMSCOPE_CLI_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "commscope/analytic.h"
#include "commscope/arch.h"
#include "commscope/latency.h"

namespace commscope::cli {

enum ExitCode : int {
  kOk = 0,
  kMismatch = 1,
  kUsage = 2,
  kIoError = 3,
};

enum class Format { kTable, kCsv, kJson };

Format parse_format(const std::string& name);

struct RunConfig {
  // Preset name or path to a model JSON file.
  std::string model = "llama-3.1-8b";
  std::int64_t tp = 1;
  std::int64_t pp = 1;
  std::int64_t prefill_len = 128;
  std::int64_t decode_len = 128;
  // "flat", "hierarchical" or a profile JSON path. Unset means flat.
  std::optional<std::string> hardware;
  Format format = Format::kTable;
  GatherAccounting gather = GatherAccounting::kSenderSlice;
  bool include_first_rank_embedding = true;

  ModelArch arch() const;
  ParallelismLayout layout() const;
  SequenceSpec sequence() const;
  HardwareProfile profile() const;
  VolumeOptions volume_options() const;
};

// Overlays keys of a --config JSON object onto `config`. Keys match the
// RunConfig field names; "format" is one of table, csv, json.
void apply_config_json(const nlohmann::json& j, RunConfig& config);

// Which events a simulate/compare run reports on: "global", "stage:N" or
// "rank:N".
struct View {
  enum class Scope { kGlobal, kStage, kRank } scope = Scope::kStage;
  std::int64_t index = 0;
};

View parse_view(const std::string& text);

int cmd_predict(const RunConfig& config, std::ostream& out);
int cmd_simulate(const RunConfig& config, const View& view,
                 const std::optional<std::string>& events_path,
                 std::ostream& out);
int cmd_compare(const RunConfig& config, const View& view,
                const std::string& observations_path, std::ostream& out);
int cmd_sweep(const RunConfig& config,
              const std::vector<std::int64_t>& decode_lens,
              const std::vector<ParallelismLayout>& layouts, std::ostream& out);
int cmd_advise(const RunConfig& config, std::int64_t gpus,
               const AdviceWeights& weights, std::ostream& out);

// Full command line (args[0] is the program name). Library errors are mapped
// onto ExitCode and reported on `err`.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace commscope::cli

#endif  // COMMSCOPE_CLI_H_
