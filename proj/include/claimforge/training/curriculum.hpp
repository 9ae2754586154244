#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "claimforge/numerics/rng.hpp"
#include "claimforge/training/error.hpp"

namespace claimforge::training {

struct CurriculumSchedule {
  double gamma = 0.01;
  double t0 = 5000.0;
  double level3_tau_threshold = 0.999;
  // Use floor(1 + 2τ) capped at 3 with no threshold; level 3 then only
  // appears once τ rounds to 1.0.
  bool verbatim_mode = false;

  void validate() const;
};

// 1 / (1 + exp(-γ (t - t0))).
double curriculum_progress(double t, const CurriculumSchedule& schedule = {});

int difficulty_level(double t, const CurriculumSchedule& schedule = {});

struct SampleKey {
  std::string id;
  double key = 0.0;
};

// Token length of the target claims times (1 + number of dependent claims).
double difficulty_key(std::size_t target_tokens, std::size_t dependent_claims);

struct DifficultyBucket {
  int level = 1;
  std::vector<std::size_t> members;  // indices into the bucketed corpus
};

/// Sorts by (key, id) and cuts at terciles. Sizes differ by at most one, the
/// lower levels taking the extra samples.
std::array<DifficultyBucket, 3> bucket_corpus(const std::vector<SampleKey>& samples);

/// Uniform draws with replacement from the union of buckets 1..ℓ(t).
std::vector<std::size_t> sample_batch(const std::array<DifficultyBucket, 3>& buckets, double t,
                                      const CurriculumSchedule& schedule, std::size_t batch_size,
                                      numerics::Rng& rng);

// Uniform draws with replacement from all buckets (no curriculum).
std::vector<std::size_t> sample_uniform(const std::array<DifficultyBucket, 3>& buckets, std::size_t batch_size,
                                        numerics::Rng& rng);

}  // namespace claimforge::training
