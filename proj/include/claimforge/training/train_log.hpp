#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "claimforge/training/error.hpp"

namespace claimforge::training {

struct StepRecord {
  std::size_t step = 0;
  int level = 1;
  double tau = 0.0;
  std::map<std::string, double> losses;
  double grad_norm = 0.0;
};

// One JSON object per line.
std::string to_json_line(const StepRecord& record);
StepRecord parse_json_line(const std::string& line);

class TrainLog {
 public:
  TrainLog() = default;
  // Records are also appended to `path` when given.
  explicit TrainLog(const std::filesystem::path& path);

  void record(StepRecord r);
  const std::vector<StepRecord>& records() const { return records_; }

 private:
  std::vector<StepRecord> records_;
  std::optional<std::ofstream> file_;
};

/// First step at which the trailing moving average of `loss` (over `window`
/// records) is at or below `target`.
std::optional<std::size_t> steps_to_target(const std::vector<StepRecord>& records, const std::string& loss,
                                           double target, std::size_t window = 1);

}  // namespace claimforge::training
