#ifndef COMMSCOPE_ARCH_H_
#define COMMSCOPE_ARCH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace commscope {

// Dense decoder-only transformer. All sizes are element counts except
// bytes_per_element. num_heads and head_dim are optional; when both are
// present their product must equal hidden_size.
class ModelArch {
 public:
  ModelArch(std::string name, std::int64_t hidden_size, std::int64_t num_layers,
            std::int64_t vocab_size,
            std::optional<std::int64_t> num_heads = std::nullopt,
            std::optional<std::int64_t> head_dim = std::nullopt,
            std::int64_t bytes_per_element = 2);

  const std::string& name() const { return name_; }
  std::int64_t hidden_size() const { return hidden_size_; }
  std::int64_t num_layers() const { return num_layers_; }
  std::int64_t vocab_size() const { return vocab_size_; }
  std::optional<std::int64_t> num_heads() const { return num_heads_; }
  std::optional<std::int64_t> head_dim() const { return head_dim_; }
  std::int64_t bytes_per_element() const { return bytes_per_element_; }

  // Same architecture at a different precision.
  ModelArch with_bytes_per_element(std::int64_t bytes) const;

  bool operator==(const ModelArch&) const = default;

 private:
  std::string name_;
  std::int64_t hidden_size_;
  std::int64_t num_layers_;
  std::int64_t vocab_size_;
  std::optional<std::int64_t> num_heads_;
  std::optional<std::int64_t> head_dim_;
  std::int64_t bytes_per_element_;
};

// tp ranks per pipeline stage, pp stages. Global ranks are grouped
// TP-major: stage s owns ranks [s*tp, s*tp + tp). placement[r] is the node
// hosting rank r; node ids are contiguous from 0.
class ParallelismLayout {
 public:
  // Every rank on node 0.
  ParallelismLayout(std::int64_t tp, std::int64_t pp);
  ParallelismLayout(std::int64_t tp, std::int64_t pp,
                    std::vector<std::int64_t> placement);

  // Ranks filled onto nodes in order, gpus_per_node at a time.
  static ParallelismLayout packed(std::int64_t tp, std::int64_t pp,
                                  std::int64_t gpus_per_node);

  std::int64_t tp() const { return tp_; }
  std::int64_t pp() const { return pp_; }
  std::int64_t world_size() const { return tp_ * pp_; }
  const std::vector<std::int64_t>& placement() const { return placement_; }
  std::int64_t num_nodes() const;

  std::int64_t stage_of(std::int64_t rank) const { return rank / tp_; }
  std::int64_t node_of(std::int64_t rank) const { return placement_.at(rank); }
  // Global rank of TP-local index `local` within `stage`.
  std::int64_t rank_of(std::int64_t stage, std::int64_t local) const {
    return stage * tp_ + local;
  }

  bool operator==(const ParallelismLayout&) const = default;

 private:
  std::int64_t tp_;
  std::int64_t pp_;
  std::vector<std::int64_t> placement_;
};

// Layers owned by each of `stages` pipeline stages. When num_layers is not a
// multiple of stages, the first (num_layers % stages) stages get one extra.
std::vector<std::int64_t> stage_layers(std::int64_t num_layers,
                                       std::int64_t stages);

class SequenceSpec {
 public:
  SequenceSpec(std::int64_t prefill_len, std::int64_t decode_len);

  std::int64_t prefill_len() const { return prefill_len_; }
  // Generated tokens, including the one sampled at the end of prefill.
  std::int64_t decode_len() const { return decode_len_; }
  // Forward passes: one prefill pass plus decode_len - 1 decode passes.
  std::int64_t passes() const { return decode_len_; }
  // Token rows pushed through the network over the whole request,
  // S_p + S_d - 1.
  std::int64_t token_rows() const { return prefill_len_ + decode_len_ - 1; }

  bool operator==(const SequenceSpec&) const = default;

 private:
  std::int64_t prefill_len_;
  std::int64_t decode_len_;
};

// Built-in presets: llama-3.2-3b, llama-3.1-8b, llama-2-13b.
ModelArch preset(std::string_view name);
std::vector<std::string> preset_names();

// Resolves a --model argument: an existing JSON file path, then
// $COMMSCOPE_PRESET_DIR/<name>.json when that variable is set, then the
// built-in presets.
ModelArch resolve_model(const std::string& ref);

// JSON keys mirror the accessor names (snake_case).
ModelArch model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelArch& arch);
ParallelismLayout layout_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ParallelismLayout& layout);
SequenceSpec sequence_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SequenceSpec& seq);

// Reads and parses a JSON document; IoError if unreadable, ConfigError if
// not valid JSON.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace commscope

#endif  // COMMSCOPE_ARCH_H_
