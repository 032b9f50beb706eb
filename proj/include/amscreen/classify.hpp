#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amscreen/error.hpp"
#include "amscreen/textprep.hpp"
#include "amscreen/types.hpp"

namespace amscreen::classify {

// Multinomial bag-of-words model with additive smoothing. Immutable once
// trained; safe to share between threads.
struct BaselineModel {
  using TokenCounts = std::map<std::string, std::uint64_t, std::less<>>;

  double smoothing_alpha = 1.0;
  std::set<std::string, std::less<>> vocabulary;
  std::array<TokenCounts, kNumClasses> class_token_counts;
  std::array<std::uint64_t, kNumClasses> class_totals{};
  std::array<std::uint64_t, kNumClasses> class_documents{};
  std::array<double, kNumClasses> class_priors{};

  std::uint64_t token_count(SentimentLabel label, std::string_view token) const;
  // (count + alpha) / (class_total + alpha * |V|); unseen tokens get count 0.
  double token_probability(SentimentLabel label, std::string_view token) const;

  friend bool operator==(const BaselineModel&, const BaselineModel&) = default;
};

inline constexpr double kDefaultAlpha = 1.0;

// Unlabeled fragments are ignored. Throws Error(training) naming a class with
// no examples, Error(invalid_argument) when alpha <= 0.
BaselineModel train_baseline(std::span<const Fragment> labeled, double smoothing_alpha = kDefaultAlpha,
                             const textprep::StopwordLists& stopwords = {});

// Log-domain scores: log prior + sum of log token probabilities.
Prediction predict_baseline(const BaselineModel& model, const Fragment& fragment,
                            const textprep::StopwordLists& stopwords = {});
Prediction predict_text(const BaselineModel& model, std::string_view text, LanguageTag lang,
                        const textprep::StopwordLists& stopwords = {});

// Scores turned into probabilities that sum to one.
std::array<double, kNumClasses> normalized_posteriors(const Prediction& prediction);

// Versioned, line-delimited, tab-separated parameter dump:
//   amscreen-baseline<TAB>1
//   alpha<TAB><alpha>
//   class<TAB><label><TAB><documents><TAB><token_total>     (x3, canonical order)
//   token<TAB><token><TAB><negative><TAB><neutral><TAB><positive>   (sorted by token)
std::string serialize_model(const BaselineModel& model);
BaselineModel parse_model(std::string_view text);
void save_model(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Remote adapter

// Implementer-authored default prompt; the study that motivated this tool
// did not publish its prompt.
extern const std::string_view kDefaultPromptTemplate;

struct RemoteAdapterConfig {
  std::string endpoint;
  std::string model_name = "default";
  std::string prompt_template{kDefaultPromptTemplate};
  std::chrono::milliseconds timeout{10000};
  unsigned max_retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  std::optional<std::string> bearer_token;

  // Throws Error(invalid_argument) on an empty endpoint, a template without
  // exactly one {text} slot, or a non-positive timeout.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// JSON keys: endpoint, model, prompt_template, timeout_ms, max_retries,
// retry_backoff_ms, bearer_token. Environment overrides:
// AMSCREEN_REMOTE_ENDPOINT, AMSCREEN_REMOTE_MODEL, AMSCREEN_REMOTE_TOKEN,
// AMSCREEN_REMOTE_TIMEOUT_MS, AMSCREEN_REMOTE_MAX_RETRIES.
RemoteAdapterConfig load_remote_config(const std::optional<std::filesystem::path>& file,
                                       const EnvLookup& env = process_env);

std::string render_prompt(const RemoteAdapterConfig& config, std::string_view text);

// Accepts exactly one class word, case-insensitive, surrounding whitespace
// allowed. Throws Error(protocol) carrying the raw answer otherwise.
SentimentLabel parse_remote_answer(std::string_view answer);

// POSTs {model, prompt}; expects {text}. Errors: protocol (bad reply,
// raw payload in detail), unavailable (timeouts/transport after retries).
Prediction classify_remote(const RemoteAdapterConfig& config, std::string_view text);

// ---------------------------------------------------------------------------
// Classifiers and batch screening

class Classifier {
 public:
  virtual ~Classifier() = default;
  // Must be callable concurrently.
  virtual Prediction classify(const Fragment& fragment) const = 0;
  virtual std::string descriptor() const = 0;
  // In-flight requests screen_batch may keep; 1 means sequential.
  virtual std::size_t max_parallelism() const { return 1; }
};

class BaselineClassifier final : public Classifier {
 public:
  explicit BaselineClassifier(BaselineModel model) : model_(std::move(model)) {}
  Prediction classify(const Fragment& fragment) const override { return predict_baseline(model_, fragment); }
  std::string descriptor() const override;
  const BaselineModel& model() const noexcept { return model_; }

 private:
  BaselineModel model_;
};

class RemoteClassifier final : public Classifier {
 public:
  explicit RemoteClassifier(RemoteAdapterConfig config, std::size_t max_in_flight = 4);
  Prediction classify(const Fragment& fragment) const override { return classify_remote(config_, fragment.text); }
  std::string descriptor() const override;
  std::size_t max_parallelism() const override { return max_in_flight_; }

 private:
  RemoteAdapterConfig config_;
  std::size_t max_in_flight_;
};

// Re-reads predictions already stored on fragments (for example from an
// earlier remote run). Throws Error(not_found) for a fragment without one.
class ReplayClassifier final : public Classifier {
 public:
  Prediction classify(const Fragment& fragment) const override;
  std::string descriptor() const override { return "replay"; }
};

struct ItemError {
  ErrorKind kind = ErrorKind::unavailable;
  std::string message;
  std::string detail;
};

struct ScreenedItem {
  Fragment fragment;
  std::optional<Prediction> prediction;
  std::optional<ItemError> error;
  bool flagged = false;  // predicted negative
};

// Classifies every fragment; results keep input order. A failing item gets
// an error slot and the batch carries on.
std::vector<ScreenedItem> screen_batch(const Classifier& classifier, std::span<const Fragment> fragments);

}  // namespace amscreen::classify
