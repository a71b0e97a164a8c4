#include "corrcache/bits.hpp"

#include <bit>
#include <stdexcept>

namespace corrcache {

namespace {

std::size_t word_count(std::size_t n_bits) { return (n_bits + 63) / 64; }

std::uint64_t low_mask(std::size_t count) {
  return count >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << count) - 1);
}

}  // namespace

BitVector::BitVector(std::size_t n_bits) : n_bits_(n_bits), words_(word_count(n_bits), 0) {}

BitVector BitVector::random(std::size_t n_bits, std::mt19937_64& rng) {
  BitVector out(n_bits);
  for (auto& w : out.words_) w = rng();
  out.clear_tail();
  return out;
}

void BitVector::set(std::size_t i, bool value) {
  const std::uint64_t bit = std::uint64_t{1} << (i & 63);
  if (value)
    words_[i >> 6] |= bit;
  else
    words_[i >> 6] &= ~bit;
}

BitVector BitVector::slice(std::size_t offset, std::size_t length) const {
  if (offset + length > n_bits_) throw std::out_of_range("BitVector::slice past end");
  BitVector out(length);
  const std::size_t shift = offset & 63;
  const std::size_t base = offset >> 6;
  for (std::size_t w = 0; w < out.words_.size(); ++w) {
    const std::size_t q = base + w;
    std::uint64_t v = words_[q] >> shift;
    if (shift != 0 && q + 1 < words_.size()) v |= words_[q + 1] << (64 - shift);
    out.words_[w] = v;
  }
  out.clear_tail();
  return out;
}

void BitVector::write(std::size_t offset, const BitVector& src) {
  if (offset + src.n_bits_ > n_bits_) throw std::out_of_range("BitVector::write past end");
  const std::size_t shift = offset & 63;
  const std::size_t base = offset >> 6;
  for (std::size_t w = 0; w < src.words_.size(); ++w) {
    const std::size_t count = std::min<std::size_t>(64, src.n_bits_ - 64 * w);
    const std::uint64_t mask = low_mask(count);
    const std::uint64_t value = src.words_[w] & mask;
    const std::size_t q = base + w;
    words_[q] = (words_[q] & ~(mask << shift)) | (value << shift);
    if (shift != 0 && shift + count > 64) {
      const std::uint64_t hi_mask = mask >> (64 - shift);
      words_[q + 1] = (words_[q + 1] & ~hi_mask) | (value >> (64 - shift));
    }
  }
}

void BitVector::append(const BitVector& tail) {
  const std::size_t old = n_bits_;
  n_bits_ += tail.n_bits_;
  words_.resize(word_count(n_bits_), 0);
  write(old, tail);
}

BitVector& BitVector::operator^=(const BitVector& other) {
  if (other.n_bits_ != n_bits_) throw std::invalid_argument("BitVector xor: length mismatch");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
  return *this;
}

BitVector& BitVector::operator&=(const BitVector& other) {
  if (other.n_bits_ != n_bits_) throw std::invalid_argument("BitVector and: length mismatch");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= other.words_[w];
  return *this;
}

bool BitVector::dot(const BitVector& other) const {
  if (other.n_bits_ != n_bits_) throw std::invalid_argument("BitVector dot: length mismatch");
  std::uint64_t acc = 0;
  for (std::size_t w = 0; w < words_.size(); ++w) acc ^= words_[w] & other.words_[w];
  return std::popcount(acc) & 1;
}

std::size_t BitVector::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool BitVector::none() const {
  for (auto w : words_)
    if (w != 0) return false;
  return true;
}

std::size_t BitVector::first_set() const {
  for (std::size_t w = 0; w < words_.size(); ++w)
    if (words_[w] != 0) return 64 * w + static_cast<std::size_t>(std::countr_zero(words_[w]));
  return n_bits_;
}

std::string BitVector::to_string() const {
  std::string s(n_bits_, '0');
  for (std::size_t i = 0; i < n_bits_; ++i)
    if (get(i)) s[i] = '1';
  return s;
}

void BitVector::clear_tail() {
  if (!words_.empty()) words_.back() &= low_mask(n_bits_ - 64 * (words_.size() - 1));
}

}  // namespace corrcache
