#include "amscreen/cli.hpp"

#include <algorithm>
#include <csignal>
#include <set>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "amscreen/corpus.hpp"
#include "amscreen/error.hpp"
#include "amscreen/evaluation.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/ingest.hpp"
#include "amscreen/metrics.hpp"
#include "amscreen/service.hpp"
#include "amscreen/textprep.hpp"
#include "amscreen/timeutil.hpp"

namespace amscreen::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDefaultFraction = 0.3578;
constexpr std::uint64_t kDefaultSeed = 42;

// Strictly inside (0, 1); CLI::Range would admit the end points.
const CLI::Validator kOpenUnitInterval(
    [](std::string& value) -> std::string {
      double v = 0.0;
      std::istringstream in(value);
      if (!(in >> v) || !in.eof()) return "fraction '" + value + "' is not a number";
      if (!(v > 0.0 && v < 1.0)) return "fraction must be strictly between 0 and 1, got " + value;
      return {};
    },
    "FRACTION in (0,1)");

struct RemoteFlags {
  std::string endpoint;
  std::string config;
};

void add_remote_flags(CLI::App* app, RemoteFlags& flags) {
  app->add_option("--endpoint", flags.endpoint, "Remote classifier endpoint URL (overrides config and environment)");
  app->add_option("--config", flags.config, "Remote adapter JSON config file")->check(CLI::ExistingFile);
}

classify::RemoteAdapterConfig remote_config(const RemoteFlags& flags, const classify::EnvLookup& env) {
  std::optional<fs::path> file;
  if (!flags.config.empty()) file = flags.config;
  classify::RemoteAdapterConfig cfg = classify::load_remote_config(file, env);
  if (!flags.endpoint.empty()) cfg.endpoint = flags.endpoint;
  cfg.validate();
  return cfg;
}

void emit(const std::string& output, const std::string& content, std::ostream& out) {
  if (output.empty() || output == "-") {
    out << content;
  } else {
    write_file_atomic(output, content);
  }
}

std::string dataset_name(const std::string& path) { return fs::path(path).filename().string(); }

// "50,23,2;32,1603,16;0,23,17" with rows = predicted.
metrics::ConfusionMatrix3 parse_matrix(const std::string& text) {
  metrics::ConfusionMatrix3::Counts cells{};
  std::istringstream rows(text);
  std::string row;
  std::size_t p = 0;
  while (std::getline(rows, row, ';')) {
    if (p >= kNumClasses) break;
    std::istringstream cols(row);
    std::string cell;
    std::size_t a = 0;
    while (std::getline(cols, cell, ',')) {
      if (a >= kNumClasses) break;
      std::size_t used = 0;
      long long v = -1;
      try {
        v = std::stoll(cell, &used);
      } catch (const std::exception&) {
      }
      if (v < 0 || used != cell.size()) {
        throw Error(ErrorKind::invalid_argument, "matrix cell '" + cell + "' is not a non-negative integer", cell);
      }
      cells[p][a++] = static_cast<std::uint64_t>(v);
    }
    if (a != kNumClasses) break;
    ++p;
  }
  if (p != kNumClasses || !rows.eof()) {
    throw Error(ErrorKind::invalid_argument,
                "matrix must be 3 rows of 3 counts, e.g. \"50,23,2;32,1603,16;0,23,17\" (rows = predicted)", text);
  }
  return metrics::ConfusionMatrix3(cells);
}

// --------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
  std::string kind = "news_feed";
  std::string location;
  std::string output;
  std::size_t max_items = 0;
  std::vector<std::string> keywords;
  bool default_keywords = false;
  std::string text_field = "text";
  std::string id_field = "id";
  std::string timestamp_field = "timestamp";
  bool merge = false;
};

int run_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  ingest::SourceConfig cfg;
  cfg.kind = ingest::parse_source_kind(a.kind);
  cfg.location = a.location;
  if (a.max_items > 0) cfg.max_items = a.max_items;
  cfg.include_keywords = a.keywords;
  if (a.default_keywords) {
    const auto& defaults = ingest::default_mfs_keywords();
    cfg.include_keywords.insert(cfg.include_keywords.end(), defaults.begin(), defaults.end());
  }
  cfg.text_field = a.text_field;
  cfg.id_field = a.id_field;
  cfg.timestamp_field = a.timestamp_field;
  cfg.validate();

  const ingest::IngestResult result =
      cfg.kind == ingest::SourceKind::news_feed ? ingest::fetch_news_feed(cfg) : ingest::parse_social_export(cfg);
  for (const std::string& w : result.warnings) err << "warning: " << w << '\n';

  std::vector<Document> docs;
  std::vector<Fragment> frags;
  if (a.merge && !a.output.empty() && fs::exists(a.output)) {
    const corpus::Corpus existing = corpus::load_corpus(a.output);
    docs = existing.documents();
    frags = existing.fragments();
  }
  const std::size_t before = docs.size();
  docs.insert(docs.end(), result.documents.begin(), result.documents.end());
  docs = ingest::deduplicate(docs);
  // Documents sharing an id with one already kept are the same item re-fetched.
  std::vector<Document> unique;
  std::set<std::string> seen;
  for (Document& d : docs) {
    if (seen.insert(d.id).second) unique.push_back(std::move(d));
  }
  emit(a.output, corpus::serialize_corpus(unique, frags), out);
  err << "ingested " << (unique.size() >= before ? unique.size() - before : 0) << " new documents ("
      << result.skipped << " skipped, " << result.filtered << " filtered)\n";
  return kExitOk;
}

int run_prep(const std::string& input, const std::string& output, std::ostream& out, std::ostream& err) {
  const corpus::Corpus in = corpus::load_corpus(input);
  corpus::Corpus result;
  std::set<std::string> has_fragments;
  for (const Fragment& f : in.fragments()) has_fragments.insert(f.doc_id);
  std::size_t dropped = 0;
  std::size_t created = 0;
  for (const Document& doc : in.documents()) {
    Document cleaned;
    try {
      cleaned = textprep::clean_document(doc);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::empty_after_clean) throw;
      err << "warning: document '" << doc.id << "' is empty after cleaning; dropped\n";
      ++dropped;
      continue;
    }
    result.add_document(cleaned);
    if (has_fragments.contains(doc.id)) continue;
    for (Fragment& f : textprep::segment_fragments(cleaned)) {
      result.add_fragment(std::move(f));
      ++created;
    }
  }
  for (const Fragment& f : in.fragments()) {
    if (result.find_document(f.doc_id) || !in.find_document(f.doc_id)) result.add_fragment(f);
  }
  emit(output, corpus::serialize_corpus(result.documents(), result.fragments()), out);
  err << "prepared " << result.documents().size() << " documents, " << created << " new fragments (" << dropped
      << " dropped)\n";
  return kExitOk;
}

int run_split(const std::string& dataset, double fraction, std::uint64_t seed, const std::string& output,
              std::ostream& out, std::ostream& err) {
  const corpus::Corpus c = corpus::load_corpus(dataset);
  const corpus::DatasetSplit split = corpus::stratified_split(c.fragments(), fraction, seed);
  json j = corpus::to_json(split);
  j["dataset"] = dataset_name(dataset);
  emit(output, j.dump(2) + "\n", out);
  err << "split: " << split.train_ids.size() << " train, " << split.test_ids.size() << " test (seed " << seed
      << ")\n";
  return kExitOk;
}

int run_train(const std::string& dataset, const std::string& split_file, double alpha, const std::string& output,
              std::ostream& out, std::ostream& err) {
  const corpus::Corpus c = corpus::load_corpus(dataset);
  std::vector<Fragment> train;
  if (split_file.empty()) {
    train = c.fragments();
  } else {
    json j;
    try {
      j = json::parse(read_file(split_file));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, "split file '" + split_file + "' is not valid JSON: " + e.what(), split_file);
    }
    const corpus::DatasetSplit split = corpus::split_from_json(j);
    for (const Fragment& f : c.fragments()) {
      if (split.train_ids.contains(f.id)) train.push_back(f);
    }
  }
  evaluation::require_all_classes(train, dataset_name(dataset));
  const classify::BaselineModel model = classify::train_baseline(train, alpha);
  emit(output, classify::serialize_model(model), out);
  err << "trained on " << train.size() << " fragments, vocabulary " << model.vocabulary.size() << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string dataset;
  double fraction = kDefaultFraction;
  std::uint64_t seed = kDefaultSeed;
  std::string classifier = "baseline";
  std::string format = "json";
  double alpha = classify::kDefaultAlpha;
  std::string output;
  RemoteFlags remote;
};

int run_eval(const EvalArgs& a, const classify::EnvLookup& env, std::ostream& out, std::ostream& err) {
  const metrics::ReportFormat format = metrics::parse_report_format(a.format);
  evaluation::ClassifierSpec spec;
  spec.kind = evaluation::parse_classifier_kind(a.classifier);
  spec.alpha = a.alpha;
  if (spec.kind == evaluation::ClassifierKind::remote) spec.remote = remote_config(a.remote, env);

  const corpus::Corpus c = corpus::load_corpus(a.dataset);
  metrics::RunMetadata md;
  md.dataset_id = dataset_name(a.dataset);
  md.created_at = format_timestamp(now_utc());
  const evaluation::EvaluationResult result = evaluation::run_evaluation(c.fragments(), spec, a.fraction, a.seed, md);
  for (const auto& f : result.failures) {
    err << "warning: " << f.fragment_id << ": " << to_string(f.error.kind) << ": " << f.error.message << '\n';
  }
  if (result.partial) err << "warning: partial run, " << result.failures.size() << " test fragments unclassified\n";
  emit(a.output, metrics::render_report(result.report, format), out);
  return kExitOk;
}

struct ScreenArgs {
  std::string dataset;
  std::vector<std::string> texts;
  std::string model;
  std::string classifier = "baseline";
  std::string output;
  bool flagged_only = false;
  RemoteFlags remote;
};

int run_screen(const ScreenArgs& a, const classify::EnvLookup& env, std::ostream& out, std::ostream& err) {
  const evaluation::ClassifierKind kind = evaluation::parse_classifier_kind(a.classifier);
  std::unique_ptr<classify::Classifier> classifier;
  switch (kind) {
    case evaluation::ClassifierKind::baseline:
      if (a.model.empty()) throw Error(ErrorKind::invalid_argument, "baseline screening needs --model");
      classifier = std::make_unique<classify::BaselineClassifier>(classify::load_model(a.model));
      break;
    case evaluation::ClassifierKind::remote:
      classifier = std::make_unique<classify::RemoteClassifier>(remote_config(a.remote, env));
      break;
    case evaluation::ClassifierKind::replay:
      classifier = std::make_unique<classify::ReplayClassifier>();
      break;
  }

  std::vector<Fragment> targets;
  if (!a.dataset.empty()) targets = corpus::load_corpus(a.dataset).fragments();
  for (std::size_t i = 0; i < a.texts.size(); ++i) {
    Document doc;
    doc.id = "text-" + std::to_string(i);
    doc.source = DocumentSource::manual;
    doc.origin_ref = "argv";
    doc.fetched_at = now_utc();
    doc.raw_text = a.texts[i];
    for (Fragment& f : textprep::segment_fragments(textprep::clean_document(doc))) targets.push_back(std::move(f));
  }
  if (targets.empty()) throw Error(ErrorKind::invalid_argument, "nothing to screen: give --dataset or --text");

  std::string lines;
  std::size_t flagged = 0;
  std::size_t failed = 0;
  for (const classify::ScreenedItem& item : classify::screen_batch(*classifier, targets)) {
    flagged += item.flagged;
    failed += item.error.has_value();
    if (a.flagged_only && !item.flagged) continue;
    json j{{"fragment_id", item.fragment.id}, {"text", item.fragment.text}, {"flagged", item.flagged}};
    if (item.prediction) j["prediction"] = corpus::to_json(*item.prediction);
    if (item.error) {
      j["error"] = {{"code", to_string(item.error->kind)}, {"message", item.error->message}, {"detail", item.error->detail}};
    }
    lines += j.dump() + "\n";
  }
  emit(a.output, lines, out);
  err << "screened " << targets.size() << " fragments: " << flagged << " flagged, " << failed << " failed\n";
  return kExitOk;
}

int run_report(const std::string& input, const std::string& matrix, const std::string& format_name,
               const std::string& output, std::ostream& out) {
  const metrics::ReportFormat format = metrics::parse_report_format(format_name);
  metrics::EvalReport report;
  if (!matrix.empty()) {
    report = metrics::make_report(parse_matrix(matrix));
  } else {
    json j;
    try {
      j = json::parse(read_file(input));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::parse, "report file '" + input + "' is not valid JSON: " + e.what(), input);
    }
    report = metrics::report_from_json(j.contains("report") ? j.at("report") : j);
  }
  emit(output, metrics::render_report(report, format), out);
  return kExitOk;
}

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  std::string static_dir;
  std::string token;
  std::vector<std::string> imports;
  RemoteFlags remote;
};

int run_serve(const ServeArgs& a, const classify::EnvLookup& env, std::ostream& err) {
  service::ServiceOptions opts;
  if (!a.data_dir.empty()) opts.data_dir = a.data_dir;
  if (!a.remote.endpoint.empty() || !a.remote.config.empty() || env("AMSCREEN_REMOTE_ENDPOINT")) {
    opts.remote = remote_config(a.remote, env);
  }
  service::ServiceCore core(opts);
  const auto known = core.datasets();
  for (const std::string& spec : a.imports) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::invalid_argument, "--import expects DATASET=PATH, got '" + spec + "'", spec);
    }
    const std::string id = spec.substr(0, eq);
    if (std::any_of(known.begin(), known.end(), [&](const auto& d) { return d.id == id; })) {
      err << "dataset '" << id << "' already present; import skipped\n";
      continue;
    }
    core.import_corpus(id, corpus::load_corpus(spec.substr(eq + 1)));
    err << "imported dataset '" << id << "'\n";
  }

  service::HttpOptions http;
  if (!a.token.empty()) {
    http.bearer_token = a.token;
  } else if (auto t = env("AMSCREEN_SERVICE_TOKEN")) {
    http.bearer_token = *t;
  }
  if (!a.static_dir.empty()) http.static_dir = a.static_dir;
  service::HttpServer server(core, http);
  const int port = server.bind(a.host, a.port);
  err << "listening on http://" << a.host << ":" << port << '\n';

  // SIGINT/SIGTERM are taken by a waiter thread so shutdown is orderly.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::jthread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.run();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  return kExitOk;
}

int exit_code_for(const Error& e) {
  return e.kind() == ErrorKind::invalid_argument ? kExitUsage : kExitDomainError;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const classify::EnvLookup& env) {
  CLI::App app{"Adverse-media screening: ingest, prepare, classify and evaluate English/Bangla text.", "amscreen"};
  app.require_subcommand(1, 1);

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Fetch a news feed or parse a social-media export into documents");
  ingest_cmd->add_option("--source-kind,--kind", ingest_args.kind, "news_feed or social_export")
      ->check(CLI::IsMember({"news_feed", "social_export", "rss", "social"}));
  ingest_cmd->add_option("--location,--source", ingest_args.location, "Feed URL (http, https, file) or export path")->required();
  ingest_cmd->add_option("--output", ingest_args.output, "Corpus file to write (default: stdout)");
  ingest_cmd->add_flag("--merge", ingest_args.merge, "Merge into an existing --output corpus");
  ingest_cmd->add_option("--max-items", ingest_args.max_items, "Keep at most this many items");
  ingest_cmd->add_option("--keyword", ingest_args.keywords, "Keep only items mentioning a keyword (repeatable)");
  ingest_cmd->add_flag("--mfs-keywords", ingest_args.default_keywords, "Add the bundled MFS keyword list");
  ingest_cmd->add_option("--text-field", ingest_args.text_field, "Export field holding the post text");
  ingest_cmd->add_option("--id-field", ingest_args.id_field, "Export field holding the post id");
  ingest_cmd->add_option("--timestamp-field", ingest_args.timestamp_field, "Export field holding the post time");

  std::string prep_input;
  std::string prep_output;
  auto* prep_cmd = app.add_subcommand("prep", "Clean documents and segment them into fragments");
  prep_cmd->add_option("--input,--dataset", prep_input, "Corpus file")->required()->check(CLI::ExistingFile);
  prep_cmd->add_option("--output", prep_output, "Corpus file to write (default: stdout)");

  std::string dataset;
  double fraction = kDefaultFraction;
  std::uint64_t seed = kDefaultSeed;
  std::string output;
  auto* split_cmd = app.add_subcommand("split", "Stratified train/test split");
  split_cmd->add_option("--dataset", dataset, "Corpus file")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--fraction", fraction, "Test fraction")->check(kOpenUnitInterval)->capture_default_str();
  split_cmd->add_option("--seed", seed, "Shuffle seed")->capture_default_str();
  split_cmd->add_option("--output", output, "Split file to write (default: stdout)");

  std::string split_file;
  double alpha = classify::kDefaultAlpha;
  auto* train_cmd = app.add_subcommand("train", "Train the baseline classifier");
  train_cmd->add_option("--dataset", dataset, "Corpus file")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--split", split_file, "Train only on the train side of this split")->check(CLI::ExistingFile);
  train_cmd->add_option("--alpha", alpha, "Additive smoothing")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--output", output, "Model file")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Split, train, classify the test part and report metrics");
  eval_cmd->add_option("--dataset", eval_args.dataset, "Corpus file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--fraction", eval_args.fraction, "Test fraction")->check(kOpenUnitInterval)->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed, "Split seed")->capture_default_str();
  eval_cmd->add_option("--classifier", eval_args.classifier, "baseline, remote or replay")
      ->check(CLI::IsMember({"baseline", "remote", "replay"}))
      ->capture_default_str();
  eval_cmd->add_option("--format", eval_args.format, "json, csv or text-table")
      ->check(CLI::IsMember({"json", "csv", "text", "text-table"}))
      ->capture_default_str();
  eval_cmd->add_option("--alpha", eval_args.alpha, "Additive smoothing")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--output", eval_args.output, "Report file (default: stdout)");
  add_remote_flags(eval_cmd, eval_args.remote);

  ScreenArgs screen_args;
  auto* screen_cmd = app.add_subcommand("screen", "Classify fragments and flag negatives");
  screen_cmd->add_option("--dataset", screen_args.dataset, "Corpus whose fragments are screened")
      ->check(CLI::ExistingFile);
  screen_cmd->add_option("--text", screen_args.texts, "Text to screen (repeatable)");
  screen_cmd->add_option("--model", screen_args.model, "Baseline model file")->check(CLI::ExistingFile);
  screen_cmd->add_option("--classifier", screen_args.classifier, "baseline, remote or replay")
      ->check(CLI::IsMember({"baseline", "remote", "replay"}))
      ->capture_default_str();
  screen_cmd->add_flag("--flagged-only", screen_args.flagged_only, "Only print flagged fragments");
  screen_cmd->add_option("--output", screen_args.output, "JSONL output (default: stdout)");
  add_remote_flags(screen_cmd, screen_args.remote);

  std::string report_input;
  std::string matrix;
  std::string report_format = "text-table";
  auto* report_cmd = app.add_subcommand("report", "Render a stored report or a raw confusion matrix");
  auto* report_in = report_cmd->add_option("--input", report_input, "Report or eval-run JSON")->check(CLI::ExistingFile);
  auto* report_matrix = report_cmd->add_option("--matrix", matrix, "Counts as \"r0c0,r0c1,r0c2;...\", rows = predicted");
  report_in->excludes(report_matrix);
  report_cmd->add_option("--format", report_format, "json, csv or text-table")
      ->check(CLI::IsMember({"json", "csv", "text", "text-table"}))
      ->capture_default_str();
  report_cmd->add_option("--output", output, "Output file (default: stdout)");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve_args.host)->capture_default_str();
  serve_cmd->add_option("--port", serve_args.port)->check(CLI::Range(0, 65535))->capture_default_str();
  serve_cmd->add_option("--data-dir", serve_args.data_dir, "Event log directory (default: in-memory only)");
  serve_cmd->add_option("--static-dir", serve_args.static_dir, "Static files served under /ui")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--token", serve_args.token, "Require this bearer token (or AMSCREEN_SERVICE_TOKEN)");
  serve_cmd->add_option("--import", serve_args.imports, "DATASET=PATH corpus to load if absent (repeatable)");
  add_remote_flags(serve_cmd, serve_args.remote);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const std::string& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("amscreen");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (report_cmd->parsed() && report_input.empty() && matrix.empty()) {
    err << "report: give --input or --matrix\n";
    return kExitUsage;
  }

  try {
    if (ingest_cmd->parsed()) return run_ingest(ingest_args, out, err);
    if (prep_cmd->parsed()) return run_prep(prep_input, prep_output, out, err);
    if (split_cmd->parsed()) return run_split(dataset, fraction, seed, output, out, err);
    if (train_cmd->parsed()) return run_train(dataset, split_file, alpha, output, out, err);
    if (eval_cmd->parsed()) return run_eval(eval_args, env, out, err);
    if (screen_cmd->parsed()) return run_screen(screen_args, env, out, err);
    if (report_cmd->parsed()) return run_report(report_input, matrix, report_format, output, out);
    if (serve_cmd->parsed()) return run_serve(serve_args, env, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (!e.detail().empty() && e.detail() != e.what()) err << "detail: " << e.detail() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace amscreen::cli
