#pragma once

// Brute-force BLEU: linear scans over n-gram lists, no maps, no shared code
// with the library scorer.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace capgen::testing {

using Words = std::vector<std::string>;

struct OracleSegment {
  Words hyp;
  std::vector<Words> refs;
};

inline std::vector<Words> ngrams_of(const Words& w, std::size_t n) {
  std::vector<Words> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) out.emplace_back(w.begin() + i, w.begin() + i + n);
  return out;
}

inline std::size_t occurrences(const std::vector<Words>& grams, const Words& g) {
  std::size_t c = 0;
  for (const auto& x : grams) c += x == g ? 1 : 0;
  return c;
}

// Returns {clipped, total} for one segment and order n.
inline std::pair<std::size_t, std::size_t> oracle_counts(const OracleSegment& s, std::size_t n) {
  const auto hyp = ngrams_of(s.hyp, n);
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    bool first = true;
    for (std::size_t j = 0; j < i; ++j) first = first && hyp[j] != hyp[i];
    if (!first) continue;
    std::size_t best_ref = 0;
    for (const auto& r : s.refs) best_ref = std::max(best_ref, occurrences(ngrams_of(r, n), hyp[i]));
    clipped += std::min(occurrences(hyp, hyp[i]), best_ref);
  }
  return {clipped, hyp.size()};
}

// Pooled corpus BLEU-n, uniform weights, closest-reference brevity penalty
// (shorter reference on ties), no smoothing.
inline double oracle_bleu(const std::vector<OracleSegment>& segs, std::size_t n) {
  double c = 0, r = 0;
  for (const auto& s : segs) {
    const double h = static_cast<double>(s.hyp.size());
    double best = -1;
    for (const auto& ref : s.refs) {
      const double len = static_cast<double>(ref.size());
      if (best < 0 || std::abs(len - h) < std::abs(best - h) || (std::abs(len - h) == std::abs(best - h) && len < best))
        best = len;
    }
    c += h;
    r += best;
  }
  if (c == 0) return 0.0;
  double log_p = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    double m = 0, t = 0;
    for (const auto& s : segs) {
      const auto [cl, tot] = oracle_counts(s, k);
      m += static_cast<double>(cl);
      t += static_cast<double>(tot);
    }
    if (m == 0) return 0.0;
    log_p += std::log(m / t) / static_cast<double>(n);
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_p);
}

}  // namespace capgen::testing
