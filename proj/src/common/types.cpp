#include "amscreen/types.hpp"

#include <algorithm>
#include <cctype>

#include "amscreen/error.hpp"

namespace amscreen {

namespace {

std::string lower_ascii(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io_error";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::duplicate_id: return "duplicate_id";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::training: return "training_error";
    case ErrorKind::fetch: return "fetch_error";
    case ErrorKind::protocol: return "protocol_error";
    case ErrorKind::unavailable: return "unavailable";
    case ErrorKind::empty_after_clean: return "empty_after_clean";
    case ErrorKind::persistence: return "persistence_error";
  }
  return "error";
}

std::string_view to_string(SentimentLabel label) {
  switch (label) {
    case SentimentLabel::negative: return "negative";
    case SentimentLabel::neutral: return "neutral";
    case SentimentLabel::positive: return "positive";
  }
  return "neutral";
}

std::optional<SentimentLabel> try_parse_label(std::string_view text) {
  const std::string lowered = lower_ascii(text);
  for (SentimentLabel label : kAllLabels) {
    if (lowered == to_string(label)) return label;
  }
  return std::nullopt;
}

SentimentLabel parse_label(std::string_view text) {
  if (auto label = try_parse_label(text)) return *label;
  throw Error(ErrorKind::invalid_argument, "unknown sentiment label '" + std::string(text) + "'",
              std::string(text));
}

std::string_view to_string(LanguageTag tag) {
  switch (tag) {
    case LanguageTag::english: return "english";
    case LanguageTag::bangla: return "bangla";
    case LanguageTag::mixed: return "mixed";
    case LanguageTag::unknown: return "unknown";
  }
  return "unknown";
}

LanguageTag parse_language(std::string_view text) {
  for (LanguageTag tag : {LanguageTag::english, LanguageTag::bangla, LanguageTag::mixed,
                          LanguageTag::unknown}) {
    if (text == to_string(tag)) return tag;
  }
  throw Error(ErrorKind::invalid_argument, "unknown language tag '" + std::string(text) + "'");
}

std::string_view to_string(DocumentSource source) {
  switch (source) {
    case DocumentSource::news_feed: return "news_feed";
    case DocumentSource::social_export: return "social_export";
    case DocumentSource::manual: return "manual";
  }
  return "manual";
}

DocumentSource parse_source(std::string_view text) {
  for (DocumentSource s :
       {DocumentSource::news_feed, DocumentSource::social_export, DocumentSource::manual}) {
    if (text == to_string(s)) return s;
  }
  throw Error(ErrorKind::invalid_argument, "unknown document source '" + std::string(text) + "'");
}

std::string_view to_string(PredictionSource source) {
  return source == PredictionSource::baseline ? "baseline" : "remote";
}

PredictionSource parse_prediction_source(std::string_view text) {
  if (text == "baseline") return PredictionSource::baseline;
  if (text == "remote") return PredictionSource::remote;
  throw Error(ErrorKind::invalid_argument, "unknown prediction source '" + std::string(text) + "'");
}

std::string_view to_string(ScoreKind kind) {
  return kind == ScoreKind::log_probability ? "log_probability" : "probability";
}

ScoreKind parse_score_kind(std::string_view text) {
  if (text == "log_probability") return ScoreKind::log_probability;
  if (text == "probability") return ScoreKind::probability;
  throw Error(ErrorKind::invalid_argument, "unknown score kind '" + std::string(text) + "'");
}

SentimentLabel argmax_label(const std::array<double, kNumClasses>& scores) {
  return argmax_label(scores, 0.0);
}

SentimentLabel argmax_label(const std::array<double, kNumClasses>& scores, double tolerance) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumClasses; ++i) {
    if (scores[i] > scores[best] + tolerance) best = i;
  }
  return kAllLabels[best];
}

}  // namespace amscreen
