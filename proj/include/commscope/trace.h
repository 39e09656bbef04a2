#ifndef COMMSCOPE_TRACE_H_
#define COMMSCOPE_TRACE_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

#include "commscope/schedule.h"

namespace commscope {

// One observed (phase, kind, shape) bucket, e.g. from a profiler trace.
struct ObservationRecord {
  Phase phase;
  CollectiveKind kind;
  std::int64_t count;
  Shape shape;
  std::int64_t bytes_per_element;
  std::optional<std::int64_t> group_size;

  bool operator==(const ObservationRecord&) const = default;
};

// JSON-lines, one record per line. Blank lines are skipped. Throws
// ParseError (with the 1-based line number) for malformed lines, EnumError
// for unknown phase or kind names.
std::vector<ObservationRecord> parse_observations(std::istream& in);

nlohmann::json to_json(const ObservationRecord& record);
void write_observations(std::ostream& out,
                        const std::vector<ObservationRecord>& records);

// One record per (phase, kind, shape) of a summary table.
std::vector<ObservationRecord> to_observations(const KindTable& table);

// Aggregates records into the same table layout summarize() produces.
// wire_bytes is left at 0: observations carry no correction factors.
KindTable tabulate(const std::vector<ObservationRecord>& records);

struct DiffRow {
  std::int64_t predicted_count = 0;
  std::int64_t observed_count = 0;
  std::int64_t count_delta = 0;  // observed - predicted
  std::set<Shape> predicted_shapes;
  std::set<Shape> observed_shapes;
  std::int64_t byte_delta = 0;  // observed - predicted logical bytes
};

struct DiffReport {
  std::map<KindKey, DiffRow> rows;
  bool exact_match = true;
};

// Keys present on only one side are compared against an empty row.
DiffReport diff(const KindTable& observed, const KindTable& predicted);
DiffReport diff(const std::vector<ObservationRecord>& observed,
                const KindTable& predicted);

void write_markdown(std::ostream& out, const DiffReport& report);
nlohmann::json to_json(const DiffReport& report);

}  // namespace commscope

#endif  // COMMSCOPE_TRACE_H_
