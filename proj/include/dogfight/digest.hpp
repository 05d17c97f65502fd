#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace dogfight {

/// Streaming SHA-256.
class Digest {
 public:
  Digest();
  ~Digest();
  Digest(Digest&&) noexcept;
  Digest& operator=(Digest&&) noexcept;
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  Digest& update(std::span<const std::byte> bytes);
  Digest& update(std::string_view text);
  template <typename T>
  Digest& update_values(std::span<const T> values) {
    return update(std::as_bytes(values));
  }
  /// Lower-case hex of the 32-byte digest. The object cannot be reused afterwards.
  std::string hex();
  std::array<std::uint8_t, 32> bytes();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view text);

}  // namespace dogfight
