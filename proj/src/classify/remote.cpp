#include <cstdlib>
#include <thread>

#include "json.hpp"

#include "../common/http_client.hpp"
#include "amscreen/classify.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::classify {

using nlohmann::json;

const std::string_view kDefaultPromptTemplate =
    "You screen text for adverse media relevant to anti-money-laundering compliance at a mobile "
    "financial services provider. The text may be English, Bangla, or a mix of both.\n"
    "Classify the sentiment of the text as exactly one word: negative, neutral, or positive.\n"
    "Use negative for reports or allegations of fraud, money laundering, illegal transfers (hundi), "
    "scams, theft, extortion or terrorism financing. Answer with the single word only.\n\n"
    "Text: {text}";

namespace {

constexpr std::string_view kSlot = "{text}";

std::size_t count_slots(std::string_view tmpl) {
  std::size_t n = 0;
  for (std::size_t pos = tmpl.find(kSlot); pos != std::string_view::npos; pos = tmpl.find(kSlot, pos + kSlot.size())) {
    ++n;
  }
  return n;
}

std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

unsigned parse_unsigned(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_argument, what + " must be a non-negative integer, got '" + text + "'", text);
  }
}

}  // namespace

void RemoteAdapterConfig::validate() const {
  if (endpoint.empty()) throw Error(ErrorKind::invalid_argument, "remote endpoint is not configured");
  detail::split_url(endpoint);
  if (count_slots(prompt_template) != 1) {
    throw Error(ErrorKind::invalid_argument, "prompt template must contain exactly one {text} slot");
  }
  if (timeout.count() <= 0) throw Error(ErrorKind::invalid_argument, "remote timeout must be positive");
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* value = std::getenv(name.c_str()); value != nullptr && *value != '\0') return std::string(value);
  return std::nullopt;
}

RemoteAdapterConfig load_remote_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  RemoteAdapterConfig cfg;
  if (file) {
    try {
      const json j = json::parse(read_file(*file));
      cfg.endpoint = j.value("endpoint", cfg.endpoint);
      cfg.model_name = j.value("model", cfg.model_name);
      cfg.prompt_template = j.value("prompt_template", cfg.prompt_template);
      cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", cfg.timeout.count()));
      cfg.max_retries = j.value("max_retries", cfg.max_retries);
      cfg.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", cfg.retry_backoff.count()));
      if (j.contains("bearer_token") && !j["bearer_token"].is_null()) cfg.bearer_token = j["bearer_token"].get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "malformed remote config '" + file->string() + "': " + e.what(), file->string());
    }
  }
  if (auto v = env("AMSCREEN_REMOTE_ENDPOINT")) cfg.endpoint = *v;
  if (auto v = env("AMSCREEN_REMOTE_MODEL")) cfg.model_name = *v;
  if (auto v = env("AMSCREEN_REMOTE_TOKEN")) cfg.bearer_token = *v;
  if (auto v = env("AMSCREEN_REMOTE_TIMEOUT_MS")) {
    cfg.timeout = std::chrono::milliseconds(parse_unsigned(*v, "AMSCREEN_REMOTE_TIMEOUT_MS"));
  }
  if (auto v = env("AMSCREEN_REMOTE_MAX_RETRIES")) cfg.max_retries = parse_unsigned(*v, "AMSCREEN_REMOTE_MAX_RETRIES");
  return cfg;
}

std::string render_prompt(const RemoteAdapterConfig& config, std::string_view text) {
  std::string prompt = config.prompt_template;
  const std::size_t pos = prompt.find(kSlot);
  if (pos == std::string::npos) {
    throw Error(ErrorKind::invalid_argument, "prompt template must contain exactly one {text} slot");
  }
  prompt.replace(pos, kSlot.size(), text);
  return prompt;
}

SentimentLabel parse_remote_answer(std::string_view answer) {
  const std::string trimmed = unicode::trim(answer);
  if (auto label = try_parse_label(lower_ascii(trimmed))) return *label;
  throw Error(ErrorKind::protocol, "remote classifier returned a non-conforming answer", std::string(answer));
}

Prediction classify_remote(const RemoteAdapterConfig& config, std::string_view text) {
  config.validate();
  const detail::UrlParts url = detail::split_url(config.endpoint);
  auto client = detail::make_client(url);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - seconds);
  client->set_connection_timeout(seconds.count(), micros.count());
  client->set_read_timeout(seconds.count(), micros.count());
  client->set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  if (config.bearer_token) headers.emplace("Authorization", "Bearer " + *config.bearer_token);
  const std::string body = json{{"model", config.model_name}, {"prompt", render_prompt(config, text)}}.dump();

  std::string last_failure;
  for (unsigned attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0 && config.retry_backoff.count() > 0) {
      std::this_thread::sleep_for(config.retry_backoff * (1u << std::min(attempt - 1, 10u)));
    }
    const httplib::Result res = client->Post(url.path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (detail::is_retryable_status(res->status)) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::protocol, "remote classifier replied HTTP " + std::to_string(res->status), res->body);
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception&) {
      throw Error(ErrorKind::protocol, "remote classifier reply is not JSON", res->body);
    }
    if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string()) {
      throw Error(ErrorKind::protocol, "remote classifier reply lacks a string 'text' field", res->body);
    }
    const std::string answer = reply["text"].get<std::string>();
    Prediction p;
    p.label = parse_remote_answer(answer);
    p.score_kind = ScoreKind::probability;
    p.source = PredictionSource::remote;
    p.scores[index_of(p.label)] = 1.0;
    return p;
  }
  throw Error(ErrorKind::unavailable,
              "remote classifier unavailable after " + std::to_string(config.max_retries + 1) + " attempts (" +
                  last_failure + ")",
              last_failure);
}

RemoteClassifier::RemoteClassifier(RemoteAdapterConfig config, std::size_t max_in_flight)
    : config_(std::move(config)), max_in_flight_(std::max<std::size_t>(1, max_in_flight)) {
  config_.validate();
}

std::string RemoteClassifier::descriptor() const { return "remote(" + config_.model_name + ")"; }

}  // namespace amscreen::classify
