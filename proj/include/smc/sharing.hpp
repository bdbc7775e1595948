#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smc/field.hpp"
#include "smc/rng.hpp"

namespace smc {

using SessionTag = std::uint32_t;

// n parties, polynomials of degree t. Multiplication needs 2t < n.
struct ThresholdConfig {
  int n = 3;
  int t = 1;

  // t = floor((n - 1) / 2), the largest threshold that still permits
  // degree reduction.
  static ThresholdConfig for_parties(int n);

  // Throws UsageError unless 3 <= n <= 255, t >= 1 and 2t < n.
  void validate() const;
};

struct Share {
  int x;  // evaluation point, 1-based party index; never 0
  FieldElement y;
  SessionTag session = 0;
};

// P(x) = c0 + c1 x + ... + ct x^t with c0 the secret.
struct SharePolynomial {
  std::vector<FieldElement> coefficients;

  int degree_bound() const { return static_cast<int>(coefficients.size()) - 1; }
  FieldElement evaluate(const FieldElement& x) const;
  FieldElement evaluate(int x) const;
};

SharePolynomial random_polynomial(const FieldElement& secret, int degree, SeededRng& rng);

// Shares P(1..n) of the given polynomial.
std::vector<Share> share_polynomial(const SharePolynomial& poly, int n, SessionTag session = 0);

std::vector<Share> share_secret(const FieldElement& secret, const ThresholdConfig& cfg, SeededRng& rng,
                                SessionTag session = 0);

// Lagrange basis values at zero for the given evaluation points:
// sum_i out[i] * Q(xs[i]) = Q(0) for every Q of degree < xs.size().
std::vector<FieldElement> lagrange_at_zero(std::span<const int> xs, const PrimeModulus& modulus);

// Interpolates all given shares at zero. Throws InputError on duplicate or
// zero x, or an empty set.
FieldElement interpolate_at_zero(std::span<const Share> shares);

// Requires at least t + 1 shares; uses all of them.
FieldElement reconstruct(std::span<const Share> shares, const ThresholdConfig& cfg);

Share local_add(const Share& a, const Share& b);
// Pointwise product; the result lies on a degree-2t polynomial.
Share local_mul_raw(const Share& a, const Share& b);

// Recombination constants for degree reduction: lambda_i for points 1..n.
std::vector<FieldElement> reduction_coefficients(const ThresholdConfig& cfg, const PrimeModulus& modulus);

// Share wire encoding: x (1 byte) | y (big-endian, byte_width) | session (4) | round (2).
struct EncodedShare {
  Share share;
  std::uint16_t round;
};

std::size_t share_encoding_size(const PrimeModulus& modulus);
void append_share(std::vector<std::uint8_t>& out, const Share& share, std::uint16_t round);
std::vector<std::uint8_t> encode_share(const Share& share, std::uint16_t round);
// Decodes one or more back-to-back encodings. Throws InputError on a
// truncated payload or an invalid x / y.
std::vector<EncodedShare> decode_shares(std::span<const std::uint8_t> payload, const PrimeModulus& modulus);

}  // namespace smc
