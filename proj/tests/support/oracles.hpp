#pragma once

// Reference computations used by both the unit tests and the acceptance
// binary. None of them call into the library beyond plain data types.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "amscreen/metrics.hpp"
#include "amscreen/types.hpp"

namespace amscreen::oracle {

// One-vs-rest collapse that walks every cell instead of using the row and
// column helpers the library uses.
struct Binary {
  double tp = 0, fp = 0, fn = 0;
};

inline Binary collapse(const metrics::ConfusionMatrix3::Counts& cells, std::size_t c) {
  Binary b;
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::size_t a = 0; a < 3; ++a) {
      const double n = static_cast<double>(cells[p][a]);
      if (p == c && a == c) b.tp += n;
      else if (p == c) b.fp += n;
      else if (a == c) b.fn += n;
    }
  }
  return b;
}

// 1000 matrices with cells in [0, 50]; every 7th has an empty positive row
// and every 11th an empty negative column, so undefined values show up.
inline std::vector<metrics::ConfusionMatrix3> random_matrices(std::uint64_t seed = 20240611, int count = 1000) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> cell(0, 50);
  std::vector<metrics::ConfusionMatrix3> out;
  for (int i = 0; i < count; ++i) {
    metrics::ConfusionMatrix3::Counts c{};
    for (auto& row : c) {
      for (auto& v : row) v = cell(rng);
    }
    if (i % 7 == 0) c[2] = {0, 0, 0};
    if (i % 11 == 0) c[0][0] = c[1][0] = c[2][0] = 0;
    out.emplace_back(c);
  }
  return out;
}

// Round half up in long double.
inline std::size_t round_half_up(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<long double>(n) * fraction + 0.5L));
}

// Whitespace split: the naive-Bayes oracle corpora only use lowercase words.
inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + " ") {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

struct NbCounts {
  std::array<std::uint64_t, 3> docs{}, totals{};
  std::array<std::map<std::string, std::uint64_t>, 3> counts;
  std::set<std::string> vocab;
  std::size_t n = 0;

  std::uint64_t count(std::size_t c, const std::string& w) const {
    const auto it = counts[c].find(w);
    return it == counts[c].end() ? 0 : it->second;
  }
};

inline NbCounts nb_counts(const std::vector<Fragment>& train) {
  NbCounts k;
  for (const Fragment& f : train) {
    const std::size_t c = index_of(*f.label);
    ++k.docs[c];
    ++k.n;
    for (const std::string& w : words(f.text)) {
      ++k.counts[c][w];
      ++k.totals[c];
      k.vocab.insert(w);
    }
  }
  return k;
}

using u128 = unsigned __int128;

// Exact naive-Bayes decision with alpha = 1. The unnormalized posterior of
// class c for a k-token query is
//   docs_c * prod_t (count_c(t) + 1) / (N * (total_c + |V|)^k)
// and classes are compared by cross-multiplying, so ties are exact and go to
// the earlier class.
inline SentimentLabel nb_label(const std::vector<Fragment>& train, const std::vector<std::string>& query) {
  const NbCounts k = nb_counts(train);
  std::array<u128, 3> num{}, den{};
  for (std::size_t c = 0; c < 3; ++c) {
    num[c] = k.docs[c];
    den[c] = 1;
    for (const std::string& w : query) {
      num[c] *= k.count(c, w) + 1;
      den[c] *= k.totals[c] + k.vocab.size();
    }
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < 3; ++c) {
    if (num[c] * den[best] > num[best] * den[c]) best = c;
  }
  return kAllLabels[best];
}

inline std::array<long double, 3> nb_posteriors(const std::vector<Fragment>& train,
                                                const std::vector<std::string>& query) {
  const NbCounts k = nb_counts(train);
  std::array<long double, 3> p{};
  long double sum = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    p[c] = static_cast<long double>(k.docs[c]) / k.n;
    for (const std::string& w : query) {
      p[c] *= (k.count(c, w) + 1.0L) / (k.totals[c] + k.vocab.size());
    }
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

}  // namespace amscreen::oracle
