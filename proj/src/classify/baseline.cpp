#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <cstdio>
#include <sstream>

#include "amscreen/classify.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::classify {

namespace {

constexpr std::string_view kModelMagic = "amscreen-baseline";
constexpr int kModelVersion = 1;

void compute_priors(BaselineModel& model) {
  const std::uint64_t docs = model.class_documents[0] + model.class_documents[1] + model.class_documents[2];
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    model.class_priors[c] = static_cast<double>(model.class_documents[c]) / static_cast<double>(docs);
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::uint64_t parse_count(std::string_view s, std::size_t line_no) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::parse, "model line " + std::to_string(line_no) + ": bad count '" + std::string(s) + "'",
                std::to_string(line_no));
  }
  return value;
}

}  // namespace

std::uint64_t BaselineModel::token_count(SentimentLabel label, std::string_view token) const {
  const auto& counts = class_token_counts[index_of(label)];
  auto it = counts.find(token);
  return it == counts.end() ? 0 : it->second;
}

double BaselineModel::token_probability(SentimentLabel label, std::string_view token) const {
  const double numerator = static_cast<double>(token_count(label, token)) + smoothing_alpha;
  const double denominator = static_cast<double>(class_totals[index_of(label)]) +
                             smoothing_alpha * static_cast<double>(vocabulary.size());
  return numerator / denominator;
}

BaselineModel train_baseline(std::span<const Fragment> labeled, double smoothing_alpha,
                             const textprep::StopwordLists& stopwords) {
  if (!(smoothing_alpha > 0.0) || !std::isfinite(smoothing_alpha)) {
    throw Error(ErrorKind::invalid_argument, "smoothing alpha must be positive");
  }
  BaselineModel model;
  model.smoothing_alpha = smoothing_alpha;
  for (const Fragment& f : labeled) {
    if (!f.label) continue;
    const std::size_t c = index_of(*f.label);
    ++model.class_documents[c];
    for (const std::string& token : textprep::tokenize(f.text, f.lang, stopwords)) {
      model.vocabulary.insert(token);
      ++model.class_token_counts[c][token];
      ++model.class_totals[c];
    }
  }
  for (SentimentLabel label : kAllLabels) {
    if (model.class_documents[index_of(label)] == 0) {
      throw Error(ErrorKind::training,
                  "cannot train: no labeled fragments of class '" + std::string(to_string(label)) + "'",
                  std::string(to_string(label)));
    }
  }
  compute_priors(model);
  return model;
}

Prediction predict_text(const BaselineModel& model, std::string_view text, LanguageTag lang,
                        const textprep::StopwordLists& stopwords) {
  Prediction p;
  p.source = PredictionSource::baseline;
  p.score_kind = ScoreKind::log_probability;
  for (std::size_t c = 0; c < kNumClasses; ++c) p.scores[c] = std::log(model.class_priors[c]);
  std::size_t terms = 1;
  if (!unicode::trim(text).empty()) {
    const textprep::TokenSequence tokens = textprep::tokenize(text, lang, stopwords);
    terms += tokens.size();
    for (const std::string& token : tokens) {
      for (SentimentLabel label : kAllLabels) {
        p.scores[index_of(label)] += std::log(model.token_probability(label, token));
      }
    }
  }
  // Mathematically tied posteriors can come out of the log sums a few ulps
  // apart; anything within the accumulated rounding is a tie.
  const double magnitude = std::max({1.0, std::abs(p.scores[0]), std::abs(p.scores[1]), std::abs(p.scores[2])});
  const double tolerance = 8.0 * static_cast<double>(terms) * std::numeric_limits<double>::epsilon() * magnitude;
  p.label = argmax_label(p.scores, tolerance);
  return p;
}

Prediction predict_baseline(const BaselineModel& model, const Fragment& fragment,
                            const textprep::StopwordLists& stopwords) {
  return predict_text(model, fragment.text, fragment.lang, stopwords);
}

std::array<double, kNumClasses> normalized_posteriors(const Prediction& prediction) {
  std::array<double, kNumClasses> out{};
  if (prediction.score_kind == ScoreKind::probability) {
    const double sum = prediction.scores[0] + prediction.scores[1] + prediction.scores[2];
    for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = prediction.scores[c] / sum;
    return out;
  }
  const double top = std::max({prediction.scores[0], prediction.scores[1], prediction.scores[2]});
  double sum = 0.0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    out[c] = std::exp(prediction.scores[c] - top);
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::string serialize_model(const BaselineModel& model) {
  std::ostringstream out;
  char alpha[40];
  std::snprintf(alpha, sizeof(alpha), "%.17g", model.smoothing_alpha);
  out << kModelMagic << '\t' << kModelVersion << '\n';
  out << "alpha\t" << alpha << '\n';
  for (SentimentLabel label : kAllLabels) {
    out << "class\t" << to_string(label) << '\t' << model.class_documents[index_of(label)] << '\t'
        << model.class_totals[index_of(label)] << '\n';
  }
  for (const std::string& token : model.vocabulary) {
    out << "token\t" << token;
    for (SentimentLabel label : kAllLabels) out << '\t' << model.token_count(label, token);
    out << '\n';
  }
  return out.str();
}

BaselineModel parse_model(std::string_view text) {
  BaselineModel model;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t classes_seen = 0;
  bool have_alpha = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    auto fail = [&](const std::string& what) -> Error {
      return Error(ErrorKind::parse, "model line " + std::to_string(line_no) + ": " + what, std::to_string(line_no));
    };
    if (line_no == 1) {
      if (fields.size() != 2 || fields[0] != kModelMagic) throw fail("not a baseline model file");
      if (fields[1] != std::to_string(kModelVersion)) throw fail("unsupported model version " + std::string(fields[1]));
      continue;
    }
    if (fields[0] == "alpha" && fields.size() == 2) {
      model.smoothing_alpha = std::strtod(std::string(fields[1]).c_str(), nullptr);
      if (!(model.smoothing_alpha > 0.0)) throw fail("alpha must be positive");
      have_alpha = true;
    } else if (fields[0] == "class" && fields.size() == 4) {
      const SentimentLabel label = parse_label(fields[1]);
      model.class_documents[index_of(label)] = parse_count(fields[2], line_no);
      model.class_totals[index_of(label)] = parse_count(fields[3], line_no);
      ++classes_seen;
    } else if (fields[0] == "token" && fields.size() == 2 + kNumClasses) {
      const std::string token(fields[1]);
      if (token.empty()) throw fail("empty token");
      model.vocabulary.insert(token);
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::uint64_t n = parse_count(fields[2 + c], line_no);
        if (n > 0) model.class_token_counts[c][token] = n;
      }
    } else {
      throw fail("unrecognized record");
    }
  }
  if (line_no == 0) throw Error(ErrorKind::parse, "empty model file");
  if (!have_alpha || classes_seen != kNumClasses) throw Error(ErrorKind::parse, "model file is missing header records");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::uint64_t sum = 0;
    for (const auto& [token, n] : model.class_token_counts[c]) sum += n;
    if (sum != model.class_totals[c]) {
      throw Error(ErrorKind::parse, "model class total for '" + std::string(to_string(kAllLabels[c])) +
                                        "' does not match its token counts");
    }
    if (model.class_documents[c] == 0) {
      throw Error(ErrorKind::parse, "model has no documents for class '" + std::string(to_string(kAllLabels[c])) + "'");
    }
  }
  compute_priors(model);
  return model;
}

void save_model(const BaselineModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

BaselineModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

std::string BaselineClassifier::descriptor() const {
  char alpha[40];
  std::snprintf(alpha, sizeof(alpha), "%g", model_.smoothing_alpha);
  return std::string("baseline(alpha=") + alpha + ")";
}

Prediction ReplayClassifier::classify(const Fragment& fragment) const {
  if (!fragment.predicted) {
    throw Error(ErrorKind::not_found, "fragment '" + fragment.id + "' has no stored prediction", fragment.id);
  }
  return *fragment.predicted;
}

}  // namespace amscreen::classify
