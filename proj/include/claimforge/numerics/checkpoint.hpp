#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "claimforge/numerics/tensor.hpp"

namespace claimforge::numerics {

class CheckpointError : public NumericsError {
 public:
  using NumericsError::NumericsError;
};

inline constexpr const char* kCheckpointMagic = "CFKP1";

/// Named-tensor archive.
///
/// Layout: the line "CFKP1", a line holding the manifest byte length, the JSON
/// manifest (name, shape, dtype, byte offset per tensor, plus string metadata),
/// a newline, then raw little-endian float32 arrays. Offsets are relative to
/// the start of the raw section.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;

  const Tensor& at(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace claimforge::numerics
