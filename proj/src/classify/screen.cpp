#include <atomic>
#include <thread>

#include "amscreen/classify.hpp"

namespace amscreen::classify {

namespace {

void screen_one(const Classifier& classifier, ScreenedItem& item) {
  try {
    item.prediction = classifier.classify(item.fragment);
    item.flagged = item.prediction->label == SentimentLabel::negative;
  } catch (const Error& e) {
    item.error = ItemError{e.kind(), e.what(), e.detail()};
  } catch (const std::exception& e) {
    item.error = ItemError{ErrorKind::unavailable, e.what(), {}};
  }
}

}  // namespace

std::vector<ScreenedItem> screen_batch(const Classifier& classifier, std::span<const Fragment> fragments) {
  std::vector<ScreenedItem> items(fragments.size());
  for (std::size_t i = 0; i < fragments.size(); ++i) items[i].fragment = fragments[i];

  const std::size_t workers = std::min(classifier.max_parallelism(), items.size());
  if (workers <= 1) {
    for (ScreenedItem& item : items) screen_one(classifier, item);
    return items;
  }
  // Workers claim indices; each writes only its own slot, so order is kept.
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
        screen_one(classifier, items[i]);
      }
    });
  }
  pool.clear();
  return items;
}

}  // namespace amscreen::classify
