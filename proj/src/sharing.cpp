#include "smc/sharing.hpp"

#include <algorithm>
#include <string>

#include "smc/errors.hpp"

namespace smc {

ThresholdConfig ThresholdConfig::for_parties(int n) { return ThresholdConfig{n, (n - 1) / 2}; }

void ThresholdConfig::validate() const {
  if (n < 3 || n > 255) throw UsageError("party count must be in [3, 255], got " + std::to_string(n));
  if (t < 1) throw UsageError("threshold must be at least 1");
  if (2 * t >= n) {
    throw UsageError("threshold " + std::to_string(t) + " too large for " + std::to_string(n) +
                     " parties (need 2t < n)");
  }
}

FieldElement SharePolynomial::evaluate(const FieldElement& x) const {
  // Horner.
  FieldElement acc = coefficients.back();
  for (auto it = coefficients.rbegin() + 1; it != coefficients.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

FieldElement SharePolynomial::evaluate(int x) const {
  return evaluate(FieldElement(static_cast<u128>(x), coefficients.front().modulus()));
}

SharePolynomial random_polynomial(const FieldElement& secret, int degree, SeededRng& rng) {
  SharePolynomial poly;
  poly.coefficients.reserve(static_cast<std::size_t>(degree) + 1);
  poly.coefficients.push_back(secret);
  for (int i = 0; i < degree; ++i) poly.coefficients.push_back(fe_random(rng, secret.modulus()));
  return poly;
}

std::vector<Share> share_polynomial(const SharePolynomial& poly, int n, SessionTag session) {
  std::vector<Share> shares;
  shares.reserve(static_cast<std::size_t>(n));
  for (int x = 1; x <= n; ++x) shares.push_back(Share{x, poly.evaluate(x), session});
  return shares;
}

std::vector<Share> share_secret(const FieldElement& secret, const ThresholdConfig& cfg, SeededRng& rng,
                                SessionTag session) {
  cfg.validate();
  return share_polynomial(random_polynomial(secret, cfg.t, rng), cfg.n, session);
}

std::vector<FieldElement> lagrange_at_zero(std::span<const int> xs, const PrimeModulus& modulus) {
  std::vector<FieldElement> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    FieldElement num(1, modulus);
    FieldElement den(1, modulus);
    const FieldElement xi(static_cast<u128>(xs[i]), modulus);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (i == j) continue;
      const FieldElement xj(static_cast<u128>(xs[j]), modulus);
      // l_i(0) = prod_j (0 - x_j) / (x_i - x_j)
      num = num * fe_neg(xj);
      den = den * (xi - xj);
    }
    out.push_back(num * fe_inv(den));
  }
  return out;
}

FieldElement interpolate_at_zero(std::span<const Share> shares) {
  if (shares.empty()) throw InputError("cannot interpolate an empty share set");
  std::vector<int> xs;
  xs.reserve(shares.size());
  for (const Share& s : shares) {
    if (s.x <= 0) throw InputError("share x-coordinate must be positive, got " + std::to_string(s.x));
    if (std::find(xs.begin(), xs.end(), s.x) != xs.end()) {
      throw InputError("duplicate share x-coordinate " + std::to_string(s.x));
    }
    xs.push_back(s.x);
  }
  const PrimeModulus& modulus = shares.front().y.modulus();
  const auto lambda = lagrange_at_zero(xs, modulus);
  FieldElement acc(0, modulus);
  for (std::size_t i = 0; i < shares.size(); ++i) acc = acc + lambda[i] * shares[i].y;
  return acc;
}

FieldElement reconstruct(std::span<const Share> shares, const ThresholdConfig& cfg) {
  if (static_cast<int>(shares.size()) < cfg.t + 1) {
    throw InputError("need at least " + std::to_string(cfg.t + 1) + " shares, got " +
                     std::to_string(shares.size()));
  }
  return interpolate_at_zero(shares);
}

Share local_add(const Share& a, const Share& b) {
  if (a.x != b.x) throw UsageError("local_add on shares of different parties");
  return Share{a.x, a.y + b.y, a.session};
}

Share local_mul_raw(const Share& a, const Share& b) {
  if (a.x != b.x) throw UsageError("local_mul_raw on shares of different parties");
  return Share{a.x, a.y * b.y, a.session};
}

std::vector<FieldElement> reduction_coefficients(const ThresholdConfig& cfg, const PrimeModulus& modulus) {
  cfg.validate();
  std::vector<int> xs(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) xs[static_cast<std::size_t>(i)] = i + 1;
  return lagrange_at_zero(xs, modulus);
}

std::size_t share_encoding_size(const PrimeModulus& modulus) { return 1 + modulus.byte_width() + 4 + 2; }

void append_share(std::vector<std::uint8_t>& out, const Share& share, std::uint16_t round) {
  if (share.x < 1 || share.x > 255) throw UsageError("share x does not fit the 1-byte wire field");
  const std::size_t width = share.y.modulus().byte_width();
  const std::size_t start = out.size();
  out.resize(start + 1 + width + 6);
  out[start] = static_cast<std::uint8_t>(share.x);
  write_bytes(share.y, std::span<std::uint8_t>(out).subspan(start + 1, width));
  std::size_t pos = start + 1 + width;
  for (int shift = 24; shift >= 0; shift -= 8) out[pos++] = static_cast<std::uint8_t>(share.session >> shift);
  out[pos++] = static_cast<std::uint8_t>(round >> 8);
  out[pos] = static_cast<std::uint8_t>(round & 0xff);
}

std::vector<std::uint8_t> encode_share(const Share& share, std::uint16_t round) {
  std::vector<std::uint8_t> out;
  append_share(out, share, round);
  return out;
}

std::vector<EncodedShare> decode_shares(std::span<const std::uint8_t> payload, const PrimeModulus& modulus) {
  const std::size_t unit = share_encoding_size(modulus);
  if (payload.empty() || payload.size() % unit != 0) {
    throw InputError("share payload of " + std::to_string(payload.size()) + " bytes is not a multiple of " +
                     std::to_string(unit));
  }
  const std::size_t width = modulus.byte_width();
  std::vector<EncodedShare> out;
  out.reserve(payload.size() / unit);
  for (std::size_t off = 0; off < payload.size(); off += unit) {
    const auto rec = payload.subspan(off, unit);
    const int x = rec[0];
    if (x == 0) throw InputError("share x-coordinate 0 is reserved for the secret");
    FieldElement y = from_bytes(rec.subspan(1, width), modulus);
    std::size_t pos = 1 + width;
    SessionTag session = 0;
    for (int i = 0; i < 4; ++i) session = (session << 8) | rec[pos++];
    const auto round = static_cast<std::uint16_t>((rec[pos] << 8) | rec[pos + 1]);
    out.push_back(EncodedShare{Share{x, std::move(y), session}, round});
  }
  return out;
}

}  // namespace smc
