#include "commscope/trace.h"

#include <istream>
#include <ostream>

#include "commscope/error.h"

namespace commscope {
namespace {

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

ObservationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  ObservationRecord r{
      .phase = parse_phase(j.at("phase").get<std::string>()),
      .kind = parse_kind(j.at("kind").get<std::string>()),
      .count = j.at("count").get<std::int64_t>(),
      .shape = j.at("shape").get<Shape>(),
      .bytes_per_element = j.at("bytes_per_element").get<std::int64_t>(),
      .group_size = std::nullopt,
  };
  if (j.contains("group_size") && !j.at("group_size").is_null()) {
    r.group_size = j.at("group_size").get<std::int64_t>();
  }
  if (r.count < 0) throw std::invalid_argument("count must be >= 0");
  if (r.shape.empty()) throw std::invalid_argument("shape must be nonempty");
  for (std::int64_t dim : r.shape) {
    if (dim < 1) throw std::invalid_argument("shape entries must be >= 1");
  }
  if (r.bytes_per_element < 1) {
    throw std::invalid_argument("bytes_per_element must be >= 1");
  }
  if (r.group_size && *r.group_size < 1) {
    throw std::invalid_argument("group_size must be >= 1");
  }
  return r;
}

}  // namespace

std::vector<ObservationRecord> parse_observations(std::istream& in) {
  std::vector<ObservationRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      records.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const EnumError&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, line, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, line, e.what());
    }
  }
  return records;
}

nlohmann::json to_json(const ObservationRecord& r) {
  nlohmann::json j = {{"phase", to_string(r.phase)},
                      {"kind", to_string(r.kind)},
                      {"count", r.count},
                      {"shape", r.shape},
                      {"bytes_per_element", r.bytes_per_element}};
  if (r.group_size) j["group_size"] = *r.group_size;
  return j;
}

void write_observations(std::ostream& out,
                        const std::vector<ObservationRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<ObservationRecord> to_observations(const KindTable& table) {
  std::vector<ObservationRecord> records;
  for (const auto& [key, row] : table) {
    // Element size is uniform within a row for simulated logs.
    std::int64_t elements = 0;
    for (const auto& [shape, count] : row.shape_counts) {
      std::int64_t n = 1;
      for (std::int64_t dim : shape) n *= dim;
      elements += n * count;
    }
    const std::int64_t bpe = elements > 0 ? row.logical_bytes / elements : 1;
    for (const auto& [shape, count] : row.shape_counts) {
      records.push_back(ObservationRecord{.phase = key.first,
                                          .kind = key.second,
                                          .count = count,
                                          .shape = shape,
                                          .bytes_per_element = bpe,
                                          .group_size = std::nullopt});
    }
  }
  return records;
}

KindTable tabulate(const std::vector<ObservationRecord>& records) {
  KindTable table;
  for (const ObservationRecord& r : records) {
    KindRow& row = table[{r.phase, r.kind}];
    std::int64_t elements = 1;
    for (std::int64_t dim : r.shape) elements *= dim;
    row.count += r.count;
    row.shape_counts[r.shape] += r.count;
    row.logical_bytes += r.count * elements * r.bytes_per_element;
  }
  return table;
}

DiffReport diff(const KindTable& observed, const KindTable& predicted) {
  DiffReport report;
  auto shapes_of = [](const KindRow& row) {
    std::set<Shape> shapes;
    for (const auto& [shape, count] : row.shape_counts) shapes.insert(shape);
    return shapes;
  };
  const KindRow empty;
  auto visit = [&](const KindKey& key) {
    if (report.rows.contains(key)) return;
    auto o = observed.find(key);
    auto p = predicted.find(key);
    const KindRow& obs = o == observed.end() ? empty : o->second;
    const KindRow& pred = p == predicted.end() ? empty : p->second;
    DiffRow row{.predicted_count = pred.count,
                .observed_count = obs.count,
                .count_delta = obs.count - pred.count,
                .predicted_shapes = shapes_of(pred),
                .observed_shapes = shapes_of(obs),
                .byte_delta = obs.logical_bytes - pred.logical_bytes};
    if (row.count_delta != 0 || row.byte_delta != 0 ||
        row.predicted_shapes != row.observed_shapes) {
      report.exact_match = false;
    }
    report.rows.emplace(key, std::move(row));
  };
  for (const auto& [key, row] : observed) visit(key);
  for (const auto& [key, row] : predicted) visit(key);
  return report;
}

DiffReport diff(const std::vector<ObservationRecord>& observed,
                const KindTable& predicted) {
  return diff(tabulate(observed), predicted);
}

namespace {

std::string shape_set(const std::set<Shape>& shapes) {
  if (shapes.empty()) return "-";
  std::string out;
  for (const Shape& s : shapes) {
    if (!out.empty()) out += ';';
    out += format_shape(s);
  }
  return out;
}

}  // namespace

void write_markdown(std::ostream& out, const DiffReport& report) {
  out << "| Phase | Collective | Predicted | Observed | Delta "
         "| Predicted Shape | Observed Shape | Byte Delta |\n"
      << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& [key, row] : report.rows) {
    out << "| " << to_string(key.first) << " | " << to_string(key.second)
        << " | " << row.predicted_count << " | " << row.observed_count << " | "
        << row.count_delta << " | " << shape_set(row.predicted_shapes) << " | "
        << shape_set(row.observed_shapes) << " | " << row.byte_delta << " |\n";
  }
  out << "\nexact match: " << (report.exact_match ? "yes" : "no") << '\n';
}

nlohmann::json to_json(const DiffReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& [key, row] : report.rows) {
    rows.push_back({{"phase", to_string(key.first)},
                    {"kind", to_string(key.second)},
                    {"predicted_count", row.predicted_count},
                    {"observed_count", row.observed_count},
                    {"count_delta", row.count_delta},
                    {"predicted_shapes", row.predicted_shapes},
                    {"observed_shapes", row.observed_shapes},
                    {"byte_delta", row.byte_delta}});
  }
  return {{"exact_match", report.exact_match}, {"rows", rows}};
}

}  // namespace commscope
