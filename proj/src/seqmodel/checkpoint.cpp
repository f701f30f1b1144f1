#include "mcrec/seqmodel/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mcrec::seqmodel {

namespace {

constexpr char kMagic[5] = {'M', 'C', 'K', 'P', '1'};

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32_le(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f32_le(std::string& out, float f) { put_u32_le(out, std::bit_cast<std::uint32_t>(f)); }

}  // namespace

const Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw std::out_of_range("checkpoint has no metadata key '" + key + "'");
  return it->second;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json manifest;
  manifest["meta"] = ckpt.meta;
  manifest["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    manifest["tensors"].push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 4;
  }
  const std::string text = manifest.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& [name, m] : ckpt.tensors) {
    for (float f : m.values()) put_f32_le(out, f);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not an MCKP1 checkpoint (bad magic)");
  }
  const std::uint32_t len = get_u32_le(bytes, 5);
  if (9 + static_cast<std::size_t>(len) > bytes.size()) throw std::runtime_error("MCKP1: truncated manifest");
  const auto manifest = nlohmann::json::parse(bytes.substr(9, len));
  const std::size_t base = 9 + len;

  Checkpoint ckpt;
  ckpt.meta = manifest.at("meta").get<std::map<std::string, std::string>>();
  for (const auto& t : manifest.at("tensors")) {
    const auto rows = t.at("shape").at(0).get<std::size_t>();
    const auto cols = t.at("shape").at(1).get<std::size_t>();
    const auto offset = t.at("offset").get<std::size_t>();
    if (base + offset + rows * cols * 4 > bytes.size()) throw std::runtime_error("MCKP1: truncated payload");
    Matrix m(rows, cols);
    auto values = m.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::bit_cast<float>(get_u32_le(bytes, base + offset + 4 * i));
    }
    ckpt.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace mcrec::seqmodel
