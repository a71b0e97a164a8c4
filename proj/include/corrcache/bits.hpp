#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace corrcache {

/// Packed bit array. Bits past size() in the last word are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n_bits);

  static BitVector random(std::size_t n_bits, std::mt19937_64& rng);

  std::size_t size() const { return n_bits_; }
  bool empty() const { return n_bits_ == 0; }

  bool get(std::size_t i) const {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  void set(std::size_t i, bool value);
  void flip(std::size_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  /// Copy of bits [offset, offset + length).
  BitVector slice(std::size_t offset, std::size_t length) const;
  /// Overwrite bits [offset, offset + src.size()) with src.
  void write(std::size_t offset, const BitVector& src);
  void append(const BitVector& tail);

  /// Element-wise XOR; both operands must have the same length.
  BitVector& operator^=(const BitVector& other);
  BitVector& operator&=(const BitVector& other);
  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

  bool operator==(const BitVector& other) const = default;

  /// GF(2) inner product.
  bool dot(const BitVector& other) const;
  std::size_t popcount() const;
  bool none() const;
  /// Index of the lowest set bit, or size() when none is set.
  std::size_t first_set() const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  std::string to_string() const;

 private:
  void clear_tail();

  std::size_t n_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace corrcache
