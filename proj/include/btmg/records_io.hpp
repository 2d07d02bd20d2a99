#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "btmg/types.hpp"

namespace btmg {

// Formats a double as decimal text that round-trips bit-exactly (%.17g).
std::string format_double(double v);

// Parses a double; throws std::invalid_argument on trailing garbage.
double parse_double(const std::string& text);

// CSV persistence for evaluation records.  Header layout:
//   task_id, v_0..v_{M-1}, theta_0..theta_{N-1}, reward, feasible, <metrics>
// The task argument fixes the header even when records is empty.
void write_records(const std::filesystem::path& path, TaskId task,
                   const std::vector<EvalRecord>& records);

// Reads a record CSV; malformed content raises std::runtime_error naming the
// 1-based line number.
std::vector<EvalRecord> read_records(const std::filesystem::path& path);

// Variation files: header task_id, v_0..v_{M-1}.
void write_variations(const std::filesystem::path& path, TaskId task,
                      const std::vector<TaskVariation>& variations);
std::vector<TaskVariation> read_variations(const std::filesystem::path& path);

}  // namespace btmg
