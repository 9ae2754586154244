#include "claimforge/training/train_log.hpp"

#include <nlohmann/json.hpp>

#include "claimforge/training/curriculum.hpp"

namespace claimforge::training {

std::string to_json_line(const StepRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["level"] = r.level;
  j["tau"] = r.tau;
  j["losses"] = r.losses;
  j["grad_norm"] = r.grad_norm;
  return j.dump();
}

StepRecord parse_json_line(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  StepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.level = j.at("level").get<int>();
  r.tau = j.at("tau").get<double>();
  r.losses = j.at("losses").get<std::map<std::string, double>>();
  r.grad_norm = j.at("grad_norm").get<double>();
  return r;
}

TrainLog::TrainLog(const std::filesystem::path& path) {
  file_.emplace(path, std::ios::trunc);
  if (!*file_) throw TrainingError("cannot open training log " + path.string());
}

void TrainLog::record(StepRecord r) {
  if (file_) *file_ << to_json_line(r) << '\n';
  records_.push_back(std::move(r));
}

std::optional<std::size_t> steps_to_target(const std::vector<StepRecord>& records, const std::string& loss,
                                           double target, std::size_t window) {
  if (window == 0) window = 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    acc += records[i].losses.at(loss);
    if (i >= window) acc -= records[i - window].losses.at(loss);
    if (i + 1 >= window && acc / static_cast<double>(window) <= target) return records[i].step;
  }
  return std::nullopt;
}

}  // namespace claimforge::training
