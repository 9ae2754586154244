#pragma once

#include <stdexcept>

namespace claimforge::training {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace claimforge::training
