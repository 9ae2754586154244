#include "claimforge/numerics/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace claimforge::numerics {

namespace {

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
}

}  // namespace

const Tensor& Checkpoint::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw CheckpointError("checkpoint has no tensor named '" + name + "'");
  return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  nlohmann::json manifest;
  manifest["meta"] = checkpoint.meta;
  manifest["tensors"] = nlohmann::json::array();
  std::string raw;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    manifest["tensors"].push_back(
        {{"name", name}, {"shape", tensor.shape()}, {"dtype", "f32"}, {"offset", raw.size()}});
    for (double v : tensor.data()) {
      auto f = static_cast<float>(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, sizeof bits);
      bits = to_little(bits);
      raw.append(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
  const std::string text = manifest.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << kCheckpointMagic << '\n' << text.size() << '\n' << text << '\n';
  out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string magic;
  std::getline(in, magic);
  if (magic != kCheckpointMagic) {
    throw CheckpointError(path.string() + ": bad magic header '" + magic + "', expected " + kCheckpointMagic);
  }
  std::string length_line;
  std::getline(in, length_line);
  std::size_t length = 0;
  try {
    length = std::stoull(length_line);
  } catch (const std::exception&) {
    throw CheckpointError(path.string() + ": malformed manifest length");
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (in.get() != '\n') throw CheckpointError(path.string() + ": truncated manifest");
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": manifest parse error: " + e.what());
  }
  Checkpoint result;
  if (manifest.contains("meta")) result.meta = manifest["meta"].get<std::map<std::string, std::string>>();
  for (const auto& entry : manifest.at("tensors")) {
    if (entry.at("dtype") != "f32") throw CheckpointError("unsupported dtype " + entry.at("dtype").dump());
    Shape shape = entry.at("shape").get<Shape>();
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    const std::size_t count = product(shape);
    if (offset + count * 4 > raw.size()) throw CheckpointError(path.string() + ": tensor data out of bounds");
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, raw.data() + offset + i * 4, sizeof bits);
      bits = to_little(bits);
      float f;
      std::memcpy(&f, &bits, sizeof f);
      data[i] = f;
    }
    result.tensors.emplace(entry.at("name").get<std::string>(), Tensor(std::move(shape), std::move(data)));
  }
  return result;
}

}  // namespace claimforge::numerics
