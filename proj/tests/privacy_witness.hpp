#pragma once

// Exhaustive privacy check over a small prime field. For every set of t
// evaluation points and every candidate secret, each possible tuple of t
// observed shares must be produced by exactly one degree-t polynomial.

#include <cstdint>
#include <vector>

namespace smc::testing {

inline std::uint64_t pow_mod(std::uint64_t b, int e, std::uint64_t p) {
  std::uint64_t r = 1 % p;
  for (int i = 0; i < e; ++i) r = r * b % p;
  return r;
}

// Counts polynomials with constant term `secret` hitting each share tuple.
inline bool every_tuple_hit_once(const std::vector<int>& xs, std::uint64_t secret, std::uint64_t p) {
  const int t = static_cast<int>(xs.size());
  std::size_t cells = 1;
  for (int i = 0; i < t; ++i) cells *= p;
  std::vector<std::uint32_t> hits(cells, 0);
  std::vector<std::uint64_t> coeff(static_cast<std::size_t>(t), 0);
  std::vector<std::uint64_t> pw(static_cast<std::size_t>(t * t));
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j)
      pw[static_cast<std::size_t>(i * t + j)] = pow_mod(static_cast<std::uint64_t>(xs[static_cast<std::size_t>(i)]) % p, j + 1, p);
  for (std::size_t c = 0; c < cells; ++c) {
    std::size_t rest = c;
    for (int j = 0; j < t; ++j) {
      coeff[static_cast<std::size_t>(j)] = rest % p;
      rest /= p;
    }
    std::size_t key = 0;
    for (int i = t - 1; i >= 0; --i) {
      std::uint64_t y = secret;
      for (int j = 0; j < t; ++j)
        y = (y + coeff[static_cast<std::size_t>(j)] * pw[static_cast<std::size_t>(i * t + j)]) % p;
      key = key * p + y;
    }
    ++hits[key];
  }
  for (auto h : hits)
    if (h != 1) return false;
  return true;
}

// Rank of the map from the t random coefficients to t shares, by
// elimination mod p. Full rank means the exhaustive property holds for
// every secret.
inline bool coefficient_map_invertible(const std::vector<int>& xs, std::uint64_t p) {
  const std::size_t t = xs.size();
  std::vector<std::vector<std::uint64_t>> a(t, std::vector<std::uint64_t>(t));
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j < t; ++j) a[i][j] = pow_mod(static_cast<std::uint64_t>(xs[i]) % p, static_cast<int>(j) + 1, p);
  for (std::size_t col = 0; col < t; ++col) {
    std::size_t pivot = col;
    while (pivot < t && a[pivot][col] == 0) ++pivot;
    if (pivot == t) return false;
    std::swap(a[pivot], a[col]);
    const std::uint64_t inv = pow_mod(a[col][col], static_cast<int>(p - 2), p);
    for (std::size_t r = 0; r < t; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const std::uint64_t f = a[r][col] * inv % p;
      for (std::size_t j = col; j < t; ++j) a[r][j] = (a[r][j] + (p - f) * a[col][j]) % p;
    }
  }
  return true;
}

// All t-subsets of {1..n}; t <= 2 enumerated exhaustively, larger t by rank.
inline bool privacy_holds(int n, int t, std::uint64_t p) {
  std::vector<int> pick;
  bool ok = true;
  auto visit = [&](auto&& self, int next) -> void {
    if (!ok) return;
    if (static_cast<int>(pick.size()) == t) {
      if (t <= 2) {
        for (std::uint64_t s = 0; s < p && ok; ++s) ok = every_tuple_hit_once(pick, s, p);
      } else {
        ok = coefficient_map_invertible(pick, p);
      }
      return;
    }
    for (int x = next; x <= n; ++x) {
      pick.push_back(x);
      self(self, x + 1);
      pick.pop_back();
    }
  };
  visit(visit, 1);
  return ok;
}

}  // namespace smc::testing
