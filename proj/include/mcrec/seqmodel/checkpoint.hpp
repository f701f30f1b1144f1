#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mcrec/seqmodel/tensor.hpp"

namespace mcrec::seqmodel {

// MCKP1 container: the 5 magic bytes "MCKP1", a 4-byte little-endian manifest
// length, a UTF-8 JSON manifest (tensor names, shapes, byte offsets into the
// payload, plus string metadata) and the concatenated row-major
// little-endian float32 payload.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Matrix>> tensors;

  void add(std::string name, Matrix m) { tensors.emplace_back(std::move(name), std::move(m)); }
  const Matrix& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;

  bool operator==(const Checkpoint&) const = default;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace mcrec::seqmodel
