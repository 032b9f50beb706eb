#include <algorithm>
#include <cmath>
#include <random>

#include "amscreen/corpus.hpp"
#include "amscreen/error.hpp"

namespace amscreen::corpus {

using nlohmann::json;

namespace {

// Unbiased draw from [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would make splits differ across standard libraries.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = 0;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

void seeded_shuffle(std::vector<std::string>& ids, std::mt19937_64& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace

std::size_t round_half_up_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 0.5 + 1e-9));
}

DatasetSplit stratified_split(std::span<const Fragment> fragments, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::invalid_argument,
                "test fraction must lie strictly between 0 and 1, got " + std::to_string(test_fraction));
  }

  std::array<std::vector<std::string>, kNumClasses> by_class;
  for (const Fragment& f : fragments) {
    if (f.label) by_class[index_of(*f.label)].push_back(f.id);
  }

  std::size_t total = 0;
  std::array<std::size_t, kNumClasses> quota{};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::sort(by_class[c].begin(), by_class[c].end());
    total += by_class[c].size();
    quota[c] = round_half_up_count(by_class[c].size(), test_fraction);
  }

  // Keep the global test size within one of round(N * fraction). Each class
  // quota is within 1/2 of exact, so with three classes this never fires.
  const std::size_t target = round_half_up_count(total, test_fraction);
  std::size_t allocated = quota[0] + quota[1] + quota[2];
  if (allocated > target + 1 || allocated + 1 < target) {
    const auto largest = static_cast<std::size_t>(
        std::max_element(by_class.begin(), by_class.end(),
                         [](const auto& a, const auto& b) { return a.size() < b.size(); }) -
        by_class.begin());
    if (allocated > target && quota[largest] > 0) {
      --quota[largest];
    } else if (allocated < target && quota[largest] < by_class[largest].size()) {
      ++quota[largest];
    }
  }

  DatasetSplit split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::vector<std::string>& ids = by_class[c];
    if (ids.empty()) continue;
    seeded_shuffle(ids, rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (i < quota[c] ? split.test_ids : split.train_ids).insert(std::move(ids[i]));
    }
  }
  return split;
}

json to_json(const DatasetSplit& split) {
  return json{{"seed", split.seed},
              {"test_fraction", split.test_fraction},
              {"train_ids", split.train_ids},
              {"test_ids", split.test_ids}};
}

DatasetSplit split_from_json(const json& j) {
  DatasetSplit split;
  split.seed = j.at("seed").get<std::uint64_t>();
  split.test_fraction = j.at("test_fraction").get<double>();
  split.train_ids = j.at("train_ids").get<std::set<std::string>>();
  split.test_ids = j.at("test_ids").get<std::set<std::string>>();
  return split;
}

}  // namespace amscreen::corpus
