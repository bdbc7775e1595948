#include "smc/field.hpp"

#include <algorithm>

#include "smc/errors.hpp"

namespace smc {

namespace {

constexpr u128 kOne = 1;

int bit_length_of(u128 v) {
  int bits = 0;
  while (v != 0) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

u128 add_mod(u128 a, u128 b, u128 p) {
  // a, b < p < 2^127 so the sum cannot overflow.
  const u128 s = a + b;
  return s >= p ? s - p : s;
}

u128 mul_mod(u128 a, u128 b, u128 p) {
  if (p <= (kOne << 64)) {
    return (a * b) % p;
  }
  u128 result = 0;
  while (b != 0) {
    if (b & 1) result = add_mod(result, a, p);
    a = add_mod(a, a, p);
    b >>= 1;
  }
  return result;
}

u128 pow_mod(u128 base, u128 exp, u128 p) {
  u128 result = 1 % p;
  base %= p;
  while (exp != 0) {
    if (exp & 1) result = mul_mod(result, base, p);
    base = mul_mod(base, base, p);
    exp >>= 1;
  }
  return result;
}

u128 random_below(SeededRng& rng, u128 bound, int bits) {
  const u128 mask = bits >= 128 ? ~u128{0} : (kOne << bits) - 1;
  for (;;) {
    u128 r = (static_cast<u128>(rng.next_u64()) << 64) | rng.next_u64();
    r &= mask;
    if (r < bound) return r;
  }
}

void require_same_modulus(const FieldElement& a, const FieldElement& b) {
  if (!(a.modulus() == b.modulus())) {
    throw UsageError("field elements belong to different moduli");
  }
}

}  // namespace

bool is_probable_prime(u128 n, int rounds) {
  if (n < 2) return false;
  static constexpr unsigned kSmall[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61};
  for (unsigned q : kSmall) {
    if (n == q) return true;
    if (n % q == 0) return false;
  }
  u128 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Fixed seed: primality verdicts are reproducible.
  SeededRng rng(0x5eedf1e1dULL);
  const int bits = bit_length_of(n);
  for (int i = 0; i < rounds; ++i) {
    const u128 a = 2 + random_below(rng, n - 3, bits);
    u128 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int r = 1; r < s; ++r) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

PrimeModulus::PrimeModulus(u128 p, Trusted) : p_(p), bits_(bit_length_of(p)) {}

PrimeModulus::PrimeModulus(u128 p) : p_(p), bits_(bit_length_of(p)) {
  if (p >= (kOne << 127)) throw ConfigError("modulus must be below 2^127");
  if (!is_probable_prime(p)) throw ConfigError("modulus " + smc::to_decimal(p) + " is not prime");
}

PrimeModulus PrimeModulus::mersenne61() { return PrimeModulus((kOne << 61) - 1, Trusted{}); }

PrimeModulus PrimeModulus::from_decimal(std::string_view text) {
  if (text.empty()) throw ConfigError("empty modulus");
  u128 v = 0;
  for (char c : text) {
    if (c < '0' || c > '9') throw ConfigError("modulus is not a decimal integer: " + std::string(text));
    const u128 digit = static_cast<u128>(c - '0');
    if (v > ((kOne << 127) - digit) / 10) throw ConfigError("modulus must be below 2^127");
    v = v * 10 + digit;
  }
  return PrimeModulus(v);
}

std::string PrimeModulus::to_decimal() const { return smc::to_decimal(p_); }

std::string to_decimal(u128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

FieldElement::FieldElement(u128 value, const PrimeModulus& modulus)
    : value_(value % modulus.value()), modulus_(modulus) {}

FieldElement FieldElement::from_signed(std::int64_t value, const PrimeModulus& modulus) {
  if (value >= 0) return FieldElement(static_cast<u128>(value), modulus);
  const u128 magnitude = static_cast<u128>(-(value + 1)) + 1;
  return fe_neg(FieldElement(magnitude, modulus));
}

std::uint64_t FieldElement::value_u64() const {
  if (value_ > ~std::uint64_t{0}) throw UsageError("field element does not fit in 64 bits");
  return static_cast<std::uint64_t>(value_);
}

FieldElement fe_add(const FieldElement& a, const FieldElement& b) {
  require_same_modulus(a, b);
  return FieldElement(add_mod(a.value_, b.value_, a.modulus_.value()), a.modulus_, FieldElement::Reduced{});
}

FieldElement fe_sub(const FieldElement& a, const FieldElement& b) {
  require_same_modulus(a, b);
  const u128 p = a.modulus_.value();
  const u128 v = a.value_ >= b.value_ ? a.value_ - b.value_ : p - (b.value_ - a.value_);
  return FieldElement(v, a.modulus_, FieldElement::Reduced{});
}

FieldElement fe_mul(const FieldElement& a, const FieldElement& b) {
  require_same_modulus(a, b);
  return FieldElement(mul_mod(a.value_, b.value_, a.modulus_.value()), a.modulus_, FieldElement::Reduced{});
}

FieldElement fe_neg(const FieldElement& a) {
  const u128 v = a.value_ == 0 ? 0 : a.modulus_.value() - a.value_;
  return FieldElement(v, a.modulus_, FieldElement::Reduced{});
}

FieldElement fe_inv(const FieldElement& a) {
  if (a.value_ == 0) throw DomainError("zero has no multiplicative inverse");
  const u128 p = a.modulus_.value();
  u128 r0 = p, r1 = a.value_;
  u128 t0 = 0, t1 = 1;
  while (r1 != 0) {
    const u128 q = r0 / r1;
    const u128 r2 = r0 - q * r1;
    r0 = r1;
    r1 = r2;
    const u128 qt = mul_mod(q % p, t1, p);
    const u128 t2 = t0 >= qt ? t0 - qt : p - (qt - t0);
    t0 = t1;
    t1 = t2;
  }
  return FieldElement(t0, a.modulus_, FieldElement::Reduced{});
}

FieldElement fe_random(SeededRng& rng, const PrimeModulus& modulus) {
  return FieldElement(random_below(rng, modulus.value(), modulus.bit_length()), modulus, FieldElement::Reduced{});
}

void write_bytes(const FieldElement& e, std::span<std::uint8_t> out) {
  const std::size_t width = e.modulus().byte_width();
  if (out.size() != width) throw UsageError("output span does not match element width");
  u128 v = e.value();
  for (std::size_t i = width; i-- > 0;) {
    out[i] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
}

std::vector<std::uint8_t> to_bytes(const FieldElement& e) {
  std::vector<std::uint8_t> out(e.modulus().byte_width());
  write_bytes(e, out);
  return out;
}

FieldElement from_bytes(std::span<const std::uint8_t> bytes, const PrimeModulus& modulus) {
  if (bytes.size() != modulus.byte_width()) {
    throw InputError("field element encoding has " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(modulus.byte_width()));
  }
  u128 v = 0;
  for (std::uint8_t b : bytes) v = (v << 8) | b;
  if (v >= modulus.value()) throw InputError("encoded field element is not reduced");
  return FieldElement(v, modulus);
}

}  // namespace smc
