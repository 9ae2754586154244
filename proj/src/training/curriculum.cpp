#include "claimforge/training/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace claimforge::training {

void CurriculumSchedule::validate() const {
  if (!(gamma > 0.0)) throw TrainingError("curriculum gamma must be positive");
  if (!(t0 >= 0.0)) throw TrainingError("curriculum midpoint must be non-negative");
  if (!(level3_tau_threshold > 0.5 && level3_tau_threshold <= 1.0)) {
    throw TrainingError("level-3 threshold must lie in (0.5, 1]");
  }
}

double curriculum_progress(double t, const CurriculumSchedule& schedule) {
  return 1.0 / (1.0 + std::exp(-schedule.gamma * (t - schedule.t0)));
}

int difficulty_level(double t, const CurriculumSchedule& schedule) {
  double tau = curriculum_progress(t, schedule);
  if (!schedule.verbatim_mode && tau >= schedule.level3_tau_threshold) return 3;
  return std::min(3, static_cast<int>(std::floor(1.0 + 2.0 * tau)));
}

double difficulty_key(std::size_t target_tokens, std::size_t dependent_claims) {
  return static_cast<double>(target_tokens) * static_cast<double>(1 + dependent_claims);
}

std::array<DifficultyBucket, 3> bucket_corpus(const std::vector<SampleKey>& samples) {
  if (samples.size() < 3) throw TrainingError("bucketing needs at least 3 samples");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a].key != samples[b].key) return samples[a].key < samples[b].key;
    return samples[a].id < samples[b].id;
  });
  std::array<DifficultyBucket, 3> buckets;
  std::size_t n = samples.size(), pos = 0;
  for (std::size_t b = 0; b < 3; ++b) {
    std::size_t size = n / 3 + (b < n % 3 ? 1 : 0);
    buckets[b].level = static_cast<int>(b + 1);
    buckets[b].members.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return buckets;
}

namespace {

std::vector<std::size_t> draw(const std::array<DifficultyBucket, 3>& buckets, int level, std::size_t batch_size,
                              numerics::Rng& rng) {
  std::vector<std::size_t> pool;
  for (int l = 0; l < level; ++l) {
    if (buckets[l].members.empty()) {
      throw TrainingError("difficulty bucket " + std::to_string(l + 1) + " is empty");
    }
    pool.insert(pool.end(), buckets[l].members.begin(), buckets[l].members.end());
  }
  std::vector<std::size_t> batch(batch_size);
  for (auto& id : batch) id = pool[rng.below(pool.size())];
  return batch;
}

}  // namespace

std::vector<std::size_t> sample_batch(const std::array<DifficultyBucket, 3>& buckets, double t,
                                      const CurriculumSchedule& schedule, std::size_t batch_size,
                                      numerics::Rng& rng) {
  return draw(buckets, difficulty_level(t, schedule), batch_size, rng);
}

std::vector<std::size_t> sample_uniform(const std::array<DifficultyBucket, 3>& buckets, std::size_t batch_size,
                                        numerics::Rng& rng) {
  return draw(buckets, 3, batch_size, rng);
}

}  // namespace claimforge::training
