#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sutrack {

/// MSB-first bit string. Quantizer indices are serialized through this and
/// split into per-slot payload chunks; sizes at play are tens of bits, so a
/// byte-per-bit representation is fine and keeps the wire format obvious.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t nbits) : bits_(nbits, 0) {}

  static BitVec from_uint(std::uint64_t value, int nbits) {
    if (nbits < 0 || nbits > 64) throw std::invalid_argument("BitVec: nbits out of range");
    if (nbits < 64 && (value >> nbits) != 0) {
      throw std::invalid_argument("BitVec: value does not fit in nbits");
    }
    BitVec b(static_cast<std::size_t>(nbits));
    for (int i = 0; i < nbits; ++i) {
      b.bits_[i] = static_cast<std::uint8_t>((value >> (nbits - 1 - i)) & 1u);
    }
    return b;
  }

  [[nodiscard]] std::uint64_t to_uint() const {
    if (size() > 64) throw std::invalid_argument("BitVec: wider than 64 bits");
    std::uint64_t v = 0;
    for (std::uint8_t b : bits_) v = (v << 1) | b;
    return v;
  }

  void append(const BitVec& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
  }

  [[nodiscard]] BitVec slice(std::size_t pos, std::size_t len) const {
    if (pos + len > size()) throw std::out_of_range("BitVec: slice out of range");
    BitVec b(len);
    for (std::size_t i = 0; i < len; ++i) b.bits_[i] = bits_[pos + i];
    return b;
  }

  [[nodiscard]] std::size_t size() const { return bits_.size(); }
  [[nodiscard]] bool empty() const { return bits_.empty(); }
  [[nodiscard]] std::uint8_t bit(std::size_t i) const { return bits_.at(i); }

  bool operator==(const BitVec&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Splits `all` into `chunks` consecutive pieces, big-endian order. Sizes are
/// as equal as possible with the leading chunks one bit longer; when the
/// total divides evenly (the nR-per-slot case) all chunks are equal.
inline std::vector<BitVec> split_chunks(const BitVec& all, int chunks) {
  if (chunks <= 0) throw std::invalid_argument("split_chunks: chunks must be positive");
  const std::size_t total = all.size();
  const std::size_t base = total / static_cast<std::size_t>(chunks);
  const std::size_t extra = total % static_cast<std::size_t>(chunks);
  std::vector<BitVec> out;
  out.reserve(static_cast<std::size_t>(chunks));
  std::size_t pos = 0;
  for (int i = 0; i < chunks; ++i) {
    const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
    out.push_back(all.slice(pos, len));
    pos += len;
  }
  return out;
}

}  // namespace sutrack
