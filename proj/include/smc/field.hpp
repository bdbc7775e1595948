#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smc/rng.hpp"

namespace smc {

__extension__ typedef unsigned __int128 u128;

// A prime p < 2^127. Immutable after construction; copies are cheap and
// compare equal iff they describe the same prime.
class PrimeModulus {
 public:
  // 2^61 - 1, the default share field.
  static PrimeModulus mersenne61();

  // Parses a decimal prime and verifies it with 64 Miller-Rabin rounds.
  // Throws ConfigError on malformed text, composites, or p >= 2^127.
  static PrimeModulus from_decimal(std::string_view text);

  // Verifies primality of p (Miller-Rabin, 64 rounds). Throws ConfigError.
  explicit PrimeModulus(u128 p);

  u128 value() const noexcept { return p_; }
  int bit_length() const noexcept { return bits_; }
  // Serialized width of an element: ceil(bit_length / 8).
  std::size_t byte_width() const noexcept { return static_cast<std::size_t>((bits_ + 7) / 8); }

  std::string to_decimal() const;

  friend bool operator==(const PrimeModulus& a, const PrimeModulus& b) noexcept { return a.p_ == b.p_; }

 private:
  struct Trusted {};
  PrimeModulus(u128 p, Trusted);

  u128 p_;
  int bits_;
};

bool is_probable_prime(u128 n, int rounds = 64);

class FieldElement {
 public:
  // Reduces value modulo p.
  FieldElement(u128 value, const PrimeModulus& modulus);
  // Maps a signed integer into Z_p (negative values wrap).
  static FieldElement from_signed(std::int64_t value, const PrimeModulus& modulus);

  u128 value() const noexcept { return value_; }
  std::uint64_t value_u64() const;
  const PrimeModulus& modulus() const noexcept { return modulus_; }
  bool is_zero() const noexcept { return value_ == 0; }

  friend bool operator==(const FieldElement& a, const FieldElement& b) noexcept {
    return a.value_ == b.value_ && a.modulus_ == b.modulus_;
  }

 private:
  struct Reduced {};
  FieldElement(u128 value, const PrimeModulus& modulus, Reduced) : value_(value), modulus_(modulus) {}

  friend FieldElement fe_add(const FieldElement&, const FieldElement&);
  friend FieldElement fe_sub(const FieldElement&, const FieldElement&);
  friend FieldElement fe_mul(const FieldElement&, const FieldElement&);
  friend FieldElement fe_neg(const FieldElement&);
  friend FieldElement fe_inv(const FieldElement&);
  friend FieldElement fe_random(SeededRng&, const PrimeModulus&);

  u128 value_;
  PrimeModulus modulus_;
};

// Binary operations throw UsageError when the moduli differ.
FieldElement fe_add(const FieldElement& a, const FieldElement& b);
FieldElement fe_sub(const FieldElement& a, const FieldElement& b);
FieldElement fe_mul(const FieldElement& a, const FieldElement& b);
FieldElement fe_neg(const FieldElement& a);
// Extended Euclid. Throws DomainError for zero.
FieldElement fe_inv(const FieldElement& a);
// Uniform in [0, p) by rejection sampling.
FieldElement fe_random(SeededRng& rng, const PrimeModulus& modulus);

inline FieldElement operator+(const FieldElement& a, const FieldElement& b) { return fe_add(a, b); }
inline FieldElement operator-(const FieldElement& a, const FieldElement& b) { return fe_sub(a, b); }
inline FieldElement operator*(const FieldElement& a, const FieldElement& b) { return fe_mul(a, b); }
inline FieldElement operator-(const FieldElement& a) { return fe_neg(a); }

// Big-endian, exactly modulus.byte_width() bytes.
std::vector<std::uint8_t> to_bytes(const FieldElement& e);
void write_bytes(const FieldElement& e, std::span<std::uint8_t> out);
// Throws InputError on wrong length or value >= p.
FieldElement from_bytes(std::span<const std::uint8_t> bytes, const PrimeModulus& modulus);

std::string to_decimal(u128 v);

}  // namespace smc
