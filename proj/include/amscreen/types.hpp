#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace amscreen {

using Timestamp = std::chrono::sys_seconds;

// Index order is the canonical matrix order everywhere: negative, neutral, positive.
enum class SentimentLabel : std::size_t { negative = 0, neutral = 1, positive = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<SentimentLabel, kNumClasses> kAllLabels = {
    SentimentLabel::negative, SentimentLabel::neutral, SentimentLabel::positive};

constexpr std::size_t index_of(SentimentLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

std::string_view to_string(SentimentLabel label);
// Case-insensitive; throws Error(invalid_argument) on anything else.
SentimentLabel parse_label(std::string_view text);
std::optional<SentimentLabel> try_parse_label(std::string_view text);

enum class LanguageTag { english, bangla, mixed, unknown };

std::string_view to_string(LanguageTag tag);
LanguageTag parse_language(std::string_view text);

enum class DocumentSource { news_feed, social_export, manual };

std::string_view to_string(DocumentSource source);
DocumentSource parse_source(std::string_view text);

enum class PredictionSource { baseline, remote };

std::string_view to_string(PredictionSource source);
PredictionSource parse_prediction_source(std::string_view text);

// How Prediction::scores should be read.
enum class ScoreKind { log_probability, probability };

std::string_view to_string(ScoreKind kind);
ScoreKind parse_score_kind(std::string_view text);

struct Prediction {
  SentimentLabel label = SentimentLabel::neutral;
  std::array<double, kNumClasses> scores{};
  ScoreKind score_kind = ScoreKind::log_probability;
  PredictionSource source = PredictionSource::baseline;

  double score(SentimentLabel l) const { return scores[index_of(l)]; }
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Argmax over scores; ties go to the earliest class in canonical order.
SentimentLabel argmax_label(const std::array<double, kNumClasses>& scores);
// Same, but a class must lead by more than `tolerance` to displace an earlier one.
SentimentLabel argmax_label(const std::array<double, kNumClasses>& scores, double tolerance);

struct Document {
  std::string id;
  DocumentSource source = DocumentSource::manual;
  std::string origin_ref;
  Timestamp fetched_at{};
  std::optional<std::string> title;
  std::string raw_text;
  std::optional<std::string> cleaned_text;
  std::optional<LanguageTag> lang;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Fragment {
  std::string id;
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  LanguageTag lang = LanguageTag::unknown;
  std::optional<SentimentLabel> label;
  std::optional<Prediction> predicted;

  friend bool operator==(const Fragment&, const Fragment&) = default;
};

}  // namespace amscreen
