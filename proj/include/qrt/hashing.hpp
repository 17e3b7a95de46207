#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace qrt {

/// 64-bit FNV-1a over the raw bytes of `data`.
std::uint64_t fnv1a64(std::string_view data) noexcept;

/// Lower-case hex SHA-256 digest of the raw bytes of `data`.
std::string sha256_hex(std::string_view data);

/// One round of the splitmix64 finalizer; used to derive independent seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives a sub-stream seed from a master seed and a list of stream labels.
template <typename... Labels>
std::uint64_t derive_seed(std::uint64_t master, Labels... labels) noexcept {
  std::uint64_t s = splitmix64(master);
  ((s = splitmix64(s ^ static_cast<std::uint64_t>(labels))), ...);
  return s;
}

}  // namespace qrt
