#include <charconv>
#include <iomanip>
#include <sstream>

#include "amscreen/error.hpp"
#include "amscreen/metrics.hpp"

namespace amscreen::metrics {

using nlohmann::json;

namespace {

constexpr std::string_view kOrientation = "rows=predicted,columns=actual";

// Rounds through the 4-decimal text form so JSON carries the displayed value.
json metric_json(const Metric& value) {
  if (!value) return nullptr;
  const std::string text = format_metric(value);
  double rounded = 0.0;
  std::from_chars(text.data(), text.data() + text.size(), rounded);
  return rounded;
}

Metric metric_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string pad_left(std::string_view s, std::size_t width) {
  return s.size() >= width ? std::string(s) : std::string(width - s.size(), ' ') + std::string(s);
}

std::string pad_right(std::string_view s, std::size_t width) {
  return s.size() >= width ? std::string(s) : std::string(s) + std::string(width - s.size(), ' ');
}

std::string render_text(const EvalReport& r) {
  std::ostringstream out;
  const auto& md = r.metadata;
  out << "classifier: " << (md.classifier_id.empty() ? "-" : md.classifier_id) << '\n';
  out << "dataset:    " << (md.dataset_id.empty() ? "-" : md.dataset_id) << '\n';
  if (md.seed) out << "seed:       " << *md.seed << '\n';
  if (md.test_fraction) out << "fraction:   " << format_metric(md.test_fraction) << '\n';
  if (!md.created_at.empty()) out << "created_at: " << md.created_at << '\n';
  out << '\n';

  out << "Confusion matrix (rows: predicted, columns: actual)\n";
  out << pad_right("predicted \\ actual", 20);
  for (SentimentLabel a : kAllLabels) out << pad_left(to_string(a), 10);
  out << '\n';
  for (SentimentLabel p : kAllLabels) {
    out << pad_right(to_string(p), 20);
    for (SentimentLabel a : kAllLabels) out << pad_left(std::to_string(r.matrix.at(p, a)), 10);
    out << '\n';
  }
  out << pad_right("total", 20) << pad_left(std::to_string(r.matrix.total()), 10) << "\n\n";

  out << "Per-class metrics\n";
  out << pad_right("class", 12) << pad_left("precision", 10) << pad_left("recall", 10) << pad_left("f1", 10)
      << pad_left("support", 10) << '\n';
  for (const PerClassMetrics& pc : r.per_class) {
    out << pad_right(to_string(pc.label), 12) << pad_left(format_metric(pc.precision), 10)
        << pad_left(format_metric(pc.recall), 10) << pad_left(format_metric(pc.f1), 10)
        << pad_left(std::to_string(pc.support), 10) << '\n';
  }
  out << '\n';

  out << pad_right("Accuracy", 10) << pad_right("Weighted Precision", 20) << pad_right("Weighted Recall", 17)
      << "Weighted F1 Score\n";
  out << pad_right(format_metric(r.weighted.accuracy), 10)
      << pad_right(format_metric(r.weighted.weighted_precision), 20)
      << pad_right(format_metric(r.weighted.weighted_recall), 17) << format_metric(r.weighted.weighted_f1)
      << '\n';
  if (r.weighted.has_undefined_classes) out << "note: some per-class metrics are undefined (n/a) and count as 0\n";
  out << '\n';

  out << "Cross-misclassification\n";
  out << "P(predicted positive | actual negative)  "
      << format_metric(r.cross_rates.predicted_positive_given_actual_negative) << '\n';
  out << "P(predicted negative | actual positive)  "
      << format_metric(r.cross_rates.predicted_negative_given_actual_positive) << '\n';
  return out.str();
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "class,precision,recall,f1,support,accuracy\n";
  for (const PerClassMetrics& pc : r.per_class) {
    out << to_string(pc.label) << ',' << format_metric(pc.precision) << ',' << format_metric(pc.recall) << ','
        << format_metric(pc.f1) << ',' << pc.support << ",\n";
  }
  out << "weighted," << format_metric(r.weighted.weighted_precision) << ','
      << format_metric(r.weighted.weighted_recall) << ',' << format_metric(r.weighted.weighted_f1) << ','
      << r.matrix.total() << ',' << format_metric(r.weighted.accuracy) << '\n';
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "text" || name == "text-table") return ReportFormat::text;
  throw Error(ErrorKind::invalid_argument,
              "unknown report format '" + std::string(name) + "' (expected json, csv or text-table)",
              std::string(name));
}

std::string format_metric(const Metric& value) {
  if (!value) return "n/a";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *value, std::chars_format::fixed, 4);
  if (ec != std::errc{}) return "n/a";
  return std::string(buf, ptr);
}

json report_to_json(const EvalReport& r) {
  json counts = json::array();
  for (const auto& row : r.matrix.counts()) counts.push_back(json::array({row[0], row[1], row[2]}));
  json labels = json::array();
  for (SentimentLabel l : kAllLabels) labels.push_back(to_string(l));

  json per_class = json::array();
  for (const PerClassMetrics& pc : r.per_class) {
    per_class.push_back(json{{"class", to_string(pc.label)},
                             {"precision", metric_json(pc.precision)},
                             {"recall", metric_json(pc.recall)},
                             {"f1", metric_json(pc.f1)},
                             {"support", pc.support}});
  }

  json metadata{{"classifier", r.metadata.classifier_id},
                {"dataset", r.metadata.dataset_id},
                {"created_at", r.metadata.created_at}};
  metadata["seed"] = r.metadata.seed ? json(*r.metadata.seed) : json(nullptr);
  metadata["test_fraction"] = r.metadata.test_fraction ? json(*r.metadata.test_fraction) : json(nullptr);

  return json{
      {"metadata", std::move(metadata)},
      {"matrix", {{"orientation", kOrientation}, {"labels", labels}, {"counts", counts}, {"total", r.matrix.total()}}},
      {"per_class", std::move(per_class)},
      {"weighted",
       {{"accuracy", metric_json(r.weighted.accuracy)},
        {"weighted_precision", metric_json(r.weighted.weighted_precision)},
        {"weighted_recall", metric_json(r.weighted.weighted_recall)},
        {"weighted_f1", metric_json(r.weighted.weighted_f1)},
        {"has_undefined_classes", r.weighted.has_undefined_classes}}},
      {"cross_rates",
       {{"predicted_positive_given_actual_negative",
         metric_json(r.cross_rates.predicted_positive_given_actual_negative)},
        {"predicted_negative_given_actual_positive",
         metric_json(r.cross_rates.predicted_negative_given_actual_positive)}}}};
}

EvalReport report_from_json(const json& j) {
  try {
    const json& counts = j.at("matrix").at("counts");
    if (!counts.is_array() || counts.size() != kNumClasses) {
      throw Error(ErrorKind::parse, "report matrix must have 3 rows");
    }
    ConfusionMatrix3::Counts cells{};
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      if (!counts[p].is_array() || counts[p].size() != kNumClasses) {
        throw Error(ErrorKind::parse, "report matrix row " + std::to_string(p) + " must have 3 cells");
      }
      for (std::size_t a = 0; a < kNumClasses; ++a) cells[p][a] = counts[p][a].get<std::uint64_t>();
    }
    RunMetadata md;
    if (auto it = j.find("metadata"); it != j.end()) {
      md.classifier_id = it->value("classifier", std::string());
      md.dataset_id = it->value("dataset", std::string());
      md.created_at = it->value("created_at", std::string());
      if (auto s = it->find("seed"); s != it->end() && !s->is_null()) md.seed = s->get<std::uint64_t>();
      if (auto f = it->find("test_fraction"); f != it->end() && !f->is_null()) md.test_fraction = metric_from_json(*f);
    }
    return make_report(ConfusionMatrix3(cells), std::move(md));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed report JSON: ") + e.what());
  }
}

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::text: return render_text(report);
  }
  throw Error(ErrorKind::invalid_argument, "unknown report format");
}

}  // namespace amscreen::metrics
