#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mcrec {

using ItemId = std::uint32_t;
using UserId = std::uint32_t;

// The three serving mechanisms. Numeric order is also cost order.
enum class Mechanism : int {
  Cloud = 0,    // session ranking by the cloud model on H_cloud
  Device = 1,   // on-device re-rank of the cached cloud list
  Refresh = 2,  // cloud model re-invoked with H_device over the full pool
};

inline constexpr std::size_t kNumMechanisms = 3;

inline constexpr std::size_t index_of(Mechanism m) {
  return static_cast<std::size_t>(m);
}

inline Mechanism mechanism_from_index(std::size_t i) {
  if (i >= kNumMechanisms) throw std::out_of_range("mechanism index out of range");
  return static_cast<Mechanism>(i);
}

inline const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::Cloud: return "cloud";
    case Mechanism::Device: return "device";
    case Mechanism::Refresh: return "refresh";
  }
  return "?";
}

// Subset of mechanisms a pipeline is allowed to choose from.
struct MechanismMask {
  std::array<bool, kNumMechanisms> allowed{true, true, true};

  bool contains(Mechanism m) const { return allowed[index_of(m)]; }
  std::size_t count() const {
    return static_cast<std::size_t>(allowed[0]) + allowed[1] + allowed[2];
  }
  static MechanismMask all() { return {}; }
  static MechanismMask pair(Mechanism a, Mechanism b) {
    MechanismMask m;
    m.allowed = {false, false, false};
    m.allowed[index_of(a)] = true;
    m.allowed[index_of(b)] = true;
    return m;
  }
};

// "110" style flags in mechanism order.
inline std::string mask_to_string(MechanismMask m) {
  std::string s;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) s += m.allowed[t] ? '1' : '0';
  return s;
}

inline MechanismMask mask_from_string(const std::string& s) {
  if (s.size() != kNumMechanisms || s.find_first_not_of("01") != std::string::npos) {
    throw std::invalid_argument("bad mechanism mask '" + s + "'");
  }
  MechanismMask m;
  for (std::size_t t = 0; t < kNumMechanisms; ++t) m.allowed[t] = s[t] == '1';
  return m;
}

// splitmix64 finalizer; used to derive named sub-seeds from one root seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, const std::string& stage) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stage name
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix_seed(root ^ mix_seed(h));
}

}  // namespace mcrec
