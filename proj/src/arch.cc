#include "commscope/arch.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "commscope/error.h"

namespace commscope {
namespace {

void require_positive(std::int64_t value, const char* field) {
  if (value < 1) {
    throw ConfigError(std::string(field) + " must be >= 1, got " +
                      std::to_string(value));
  }
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(std::string("missing key '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::optional<std::int64_t> optional_int(const nlohmann::json& j,
                                         const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return required<std::int64_t>(j, key);
}

}  // namespace

ModelArch::ModelArch(std::string name, std::int64_t hidden_size,
                     std::int64_t num_layers, std::int64_t vocab_size,
                     std::optional<std::int64_t> num_heads,
                     std::optional<std::int64_t> head_dim,
                     std::int64_t bytes_per_element)
    : name_(std::move(name)),
      hidden_size_(hidden_size),
      num_layers_(num_layers),
      vocab_size_(vocab_size),
      num_heads_(num_heads),
      head_dim_(head_dim),
      bytes_per_element_(bytes_per_element) {
  require_positive(hidden_size_, "hidden_size");
  require_positive(num_layers_, "num_layers");
  require_positive(vocab_size_, "vocab_size");
  require_positive(bytes_per_element_, "bytes_per_element");
  if (num_heads_) require_positive(*num_heads_, "num_heads");
  if (head_dim_) require_positive(*head_dim_, "head_dim");
  if (num_heads_ && head_dim_ && *num_heads_ * *head_dim_ != hidden_size_) {
    throw ConfigError("num_heads * head_dim (" +
                      std::to_string(*num_heads_ * *head_dim_) +
                      ") != hidden_size (" + std::to_string(hidden_size_) +
                      ")");
  }
}

ModelArch ModelArch::with_bytes_per_element(std::int64_t bytes) const {
  return ModelArch(name_, hidden_size_, num_layers_, vocab_size_, num_heads_,
                   head_dim_, bytes);
}

ParallelismLayout::ParallelismLayout(std::int64_t tp, std::int64_t pp)
    : ParallelismLayout(tp, pp,
                        std::vector<std::int64_t>(
                            static_cast<std::size_t>(std::max<std::int64_t>(
                                tp * pp, 0)),
                            0)) {}

ParallelismLayout::ParallelismLayout(std::int64_t tp, std::int64_t pp,
                                     std::vector<std::int64_t> placement)
    : tp_(tp), pp_(pp), placement_(std::move(placement)) {
  require_positive(tp_, "tp");
  require_positive(pp_, "pp");
  if (static_cast<std::int64_t>(placement_.size()) != tp_ * pp_) {
    throw ConfigError("placement has " + std::to_string(placement_.size()) +
                      " entries, expected tp*pp = " +
                      std::to_string(tp_ * pp_));
  }
  std::set<std::int64_t> nodes(placement_.begin(), placement_.end());
  if (*nodes.begin() != 0 ||
      *nodes.rbegin() != static_cast<std::int64_t>(nodes.size()) - 1) {
    throw ConfigError("placement node ids must be contiguous from 0");
  }
}

ParallelismLayout ParallelismLayout::packed(std::int64_t tp, std::int64_t pp,
                                            std::int64_t gpus_per_node) {
  require_positive(tp, "tp");
  require_positive(pp, "pp");
  require_positive(gpus_per_node, "gpus_per_node");
  std::vector<std::int64_t> placement(static_cast<std::size_t>(tp * pp));
  for (std::size_t r = 0; r < placement.size(); ++r) {
    placement[r] = static_cast<std::int64_t>(r) / gpus_per_node;
  }
  return ParallelismLayout(tp, pp, std::move(placement));
}

std::int64_t ParallelismLayout::num_nodes() const {
  return *std::max_element(placement_.begin(), placement_.end()) + 1;
}

std::vector<std::int64_t> stage_layers(std::int64_t num_layers,
                                       std::int64_t stages) {
  require_positive(stages, "pp");
  std::vector<std::int64_t> layers(static_cast<std::size_t>(stages),
                                   num_layers / stages);
  for (std::int64_t s = 0; s < num_layers % stages; ++s) ++layers[s];
  return layers;
}

SequenceSpec::SequenceSpec(std::int64_t prefill_len, std::int64_t decode_len)
    : prefill_len_(prefill_len), decode_len_(decode_len) {
  require_positive(prefill_len_, "prefill_len");
  require_positive(decode_len_, "decode_len");
}

// hidden_size, num_layers and vocab_size (8B) follow from the observed
// message sizes and counts; the remaining fields come from the public model
// cards.
ModelArch preset(std::string_view name) {
  if (name == "llama-3.2-3b") {
    return ModelArch("llama-3.2-3b", 3072, 28, 128256, 24, 128);
  }
  if (name == "llama-3.1-8b") {
    return ModelArch("llama-3.1-8b", 4096, 32, 128256, 32, 128);
  }
  if (name == "llama-2-13b") {
    return ModelArch("llama-2-13b", 5120, 40, 32000, 40, 128);
  }
  std::ostringstream msg;
  msg << "unknown preset '" << name << "'; known presets:";
  for (const auto& known : preset_names()) msg << ' ' << known;
  throw LookupError(msg.str());
}

std::vector<std::string> preset_names() {
  return {"llama-3.2-3b", "llama-3.1-8b", "llama-2-13b"};
}

ModelArch resolve_model(const std::string& ref) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(ref, ec)) {
    return model_from_json(read_json_file(ref));
  }
  if (const char* dir = std::getenv("COMMSCOPE_PRESET_DIR");
      dir != nullptr && *dir != '\0') {
    fs::path candidate = fs::path(dir) / (ref + ".json");
    if (fs::is_regular_file(candidate, ec)) {
      return model_from_json(read_json_file(candidate));
    }
  }
  return preset(ref);
}

ModelArch model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model definition must be an object");
  return ModelArch(
      j.contains("name") ? required<std::string>(j, "name") : "custom",
      required<std::int64_t>(j, "hidden_size"),
      required<std::int64_t>(j, "num_layers"),
      required<std::int64_t>(j, "vocab_size"), optional_int(j, "num_heads"),
      optional_int(j, "head_dim"),
      optional_int(j, "bytes_per_element").value_or(2));
}

nlohmann::json to_json(const ModelArch& arch) {
  nlohmann::json j = {{"name", arch.name()},
                      {"hidden_size", arch.hidden_size()},
                      {"num_layers", arch.num_layers()},
                      {"vocab_size", arch.vocab_size()},
                      {"bytes_per_element", arch.bytes_per_element()}};
  if (arch.num_heads()) j["num_heads"] = *arch.num_heads();
  if (arch.head_dim()) j["head_dim"] = *arch.head_dim();
  return j;
}

ParallelismLayout layout_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("layout definition must be an object");
  auto tp = required<std::int64_t>(j, "tp");
  auto pp = required<std::int64_t>(j, "pp");
  if (j.contains("placement")) {
    return ParallelismLayout(
        tp, pp, required<std::vector<std::int64_t>>(j, "placement"));
  }
  return ParallelismLayout(tp, pp);
}

nlohmann::json to_json(const ParallelismLayout& layout) {
  return {{"tp", layout.tp()},
          {"pp", layout.pp()},
          {"placement", layout.placement()}};
}

SequenceSpec sequence_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("sequence definition must be an object");
  }
  return SequenceSpec(required<std::int64_t>(j, "prefill_len"),
                      required<std::int64_t>(j, "decode_len"));
}

nlohmann::json to_json(const SequenceSpec& seq) {
  return {{"prefill_len", seq.prefill_len()},
          {"decode_len", seq.decode_len()}};
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace commscope
