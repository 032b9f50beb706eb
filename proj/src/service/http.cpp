#include <charconv>

#include "httplib.h"

#include "amscreen/error.hpp"
#include "amscreen/service.hpp"
#include "amscreen/timeutil.hpp"

namespace amscreen::service {

using nlohmann::json;

int http_status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict:
    case ErrorKind::duplicate_id: return 409;
    case ErrorKind::invalid_argument:
    case ErrorKind::parse:
    case ErrorKind::training:
    case ErrorKind::empty_after_clean: return 422;
    case ErrorKind::protocol: return 502;
    case ErrorKind::unavailable:
    case ErrorKind::fetch: return 503;
    case ErrorKind::io:
    case ErrorKind::persistence: return 500;
  }
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::string& detail = {}) {
  send_json(res, status, json{{"code", code}, {"message", message}, {"detail", detail}});
}

json parse_body(const httplib::Request& req) {
  json body;
  try {
    body = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::invalid_argument, std::string("request body is not valid JSON: ") + e.what());
  }
  if (!body.is_object()) throw Error(ErrorKind::invalid_argument, "request body must be a JSON object");
  return body;
}

// Typed field access that reports the field name on mismatch.
template <typename T>
T field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) {
    throw Error(ErrorKind::invalid_argument, std::string("missing field '") + name + "'", name);
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::invalid_argument, std::string("field '") + name + "' has the wrong type", name);
  }
}

template <typename T>
std::optional<T> optional_field(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return std::nullopt;
  return field<T>(body, name);
}

std::optional<std::string> query(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::size_t parse_limit(const std::optional<std::string>& text) {
  if (!text) return 50;
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(text->data(), text->data() + text->size(), n);
  if (ec != std::errc{} || ptr != text->data() + text->size()) {
    throw Error(ErrorKind::invalid_argument, "limit must be a positive integer", *text);
  }
  return n;
}

json item_json(const classify::ScreenedItem& item) {
  json j{{"fragment_id", item.fragment.id},
         {"text", item.fragment.text},
         {"lang", to_string(item.fragment.lang)},
         {"flagged", item.flagged},
         {"prediction", nullptr},
         {"error", nullptr}};
  if (item.prediction) j["prediction"] = corpus::to_json(*item.prediction);
  if (item.error) {
    j["error"] = {{"code", to_string(item.error->kind)}, {"message", item.error->message}, {"detail", item.error->detail}};
  }
  return j;
}

json triage_list_json(const std::vector<TriageItem>& items) {
  json arr = json::array();
  for (const TriageItem& t : items) arr.push_back(to_json(t));
  return arr;
}

json run_summary_json(const EvalRunRecord& r) {
  return {{"run_id", r.run_id},
          {"dataset_id", r.dataset_id},
          {"classifier", r.classifier},
          {"seed", r.seed},
          {"fraction", r.fraction},
          {"partial", r.partial},
          {"created_at", format_timestamp(r.created_at)},
          {"accuracy", metrics::report_to_json(r.report)["weighted"]["accuracy"]}};
}

DocumentInput document_input(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "each document must be a JSON object");
  DocumentInput in;
  in.id = optional_field<std::string>(j, "id");
  in.title = optional_field<std::string>(j, "title");
  if (auto text = optional_field<std::string>(j, "text")) {
    in.text = *text;
  } else {
    in.text = field<std::string>(j, "raw_text");
  }
  if (auto source = optional_field<std::string>(j, "source")) in.source = parse_source(*source);
  in.origin_ref = optional_field<std::string>(j, "origin_ref").value_or("");
  if (auto at = optional_field<std::string>(j, "fetched_at")) in.fetched_at = parse_timestamp(*at);
  return in;
}

}  // namespace

struct HttpServer::Impl {
  ServiceCore& core;
  HttpOptions options;
  httplib::Server server;

  Impl(ServiceCore& c, HttpOptions o) : core(c), options(std::move(o)) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Turns library errors into the uniform error body.
  Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const Error& e) {
        send_error(res, http_status_for(e.kind()), to_string(e.kind()), e.what(), e.detail());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void install() {
    server.set_payload_max_length(64u << 20);

    if (options.allow_cors) {
      server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                  {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
      server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (!options.bearer_token || req.method == "OPTIONS" || req.path == "/health" || req.path.starts_with("/ui")) {
        return httplib::Server::HandlerResponse::Unhandled;
      }
      if (req.get_header_value("Authorization") != "Bearer " + *options.bearer_token) {
        send_error(res, 401, "unauthorized", "missing or wrong bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    if (options.static_dir && !server.set_mount_point("/ui", options.static_dir->string())) {
      throw Error(ErrorKind::io, "static directory '" + options.static_dir->string() + "' does not exist",
                  options.static_dir->string());
    }

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) send_error(res, 404, "not_found", "no route for " + req.path, req.path);
    });

    server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      const HealthInfo h = core.health();
      send_json(res, 200,
                {{"status", "ok"},
                 {"datasets", h.datasets},
                 {"fragments", h.fragments},
                 {"triage_pending", h.triage_pending},
                 {"eval_runs", h.eval_runs},
                 {"persistent", h.persistent}});
    }));

    server.Get("/datasets", guarded([this](const httplib::Request&, httplib::Response& res) {
      json arr = json::array();
      for (const DatasetSummary& d : core.datasets()) {
        arr.push_back({{"id", d.id},
                       {"documents", d.documents},
                       {"fragments", d.fragments},
                       {"distribution",
                        {{"negative", d.distribution.count(SentimentLabel::negative)},
                         {"neutral", d.distribution.count(SentimentLabel::neutral)},
                         {"positive", d.distribution.count(SentimentLabel::positive)},
                         {"unlabeled", d.distribution.unlabeled},
                         {"total", d.distribution.total}}}});
      }
      send_json(res, 200, {{"items", arr}});
    }));

    server.Post("/documents", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const std::string dataset = field<std::string>(body, "dataset_id");
      std::vector<DocumentInput> inputs;
      if (body.contains("documents")) {
        const json docs = field<json>(body, "documents");
        if (!docs.is_array()) throw Error(ErrorKind::invalid_argument, "field 'documents' must be an array");
        for (const json& d : docs) inputs.push_back(document_input(d));
      } else {
        inputs.push_back(document_input(body));
      }
      const AddDocumentsResult result = core.add_documents(dataset, inputs);
      json docs = json::array();
      for (const Document& d : result.documents) {
        json frag_ids = json::array();
        for (const Fragment& f : result.fragments) {
          if (f.doc_id == d.id) frag_ids.push_back(f.id);
        }
        docs.push_back({{"id", d.id}, {"lang", d.lang ? to_string(*d.lang) : "unknown"}, {"fragment_ids", frag_ids}});
      }
      json skipped = json::array();
      for (const SkippedDocument& s : result.skipped) {
        skipped.push_back({{"id", s.id}, {"code", to_string(s.kind)}, {"message", s.message}});
      }
      if (result.documents.empty() && !result.skipped.empty()) {
        send_json(res, 422,
                  {{"code", to_string(result.skipped.front().kind)},
                   {"message", "no document was accepted"},
                   {"detail", result.skipped.front().message},
                   {"skipped", skipped}});
        return;
      }
      send_json(res, 201, {{"documents", docs}, {"skipped", skipped}});
    }));

    server.Get(R"(/fragments/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto frag = core.fragment(id);
      if (!frag) throw Error(ErrorKind::not_found, "no fragment '" + id + "'", id);
      json j = corpus::to_json(*frag);
      json history = json::array();
      for (const auto& e : core.label_history(id)) history.push_back(corpus::to_json(e));
      j["label_history"] = history;
      send_json(res, 200, j);
    }));

    server.Post("/screen", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      ScreenRequest request;
      request.dataset_id = optional_field<std::string>(body, "dataset_id").value_or("");
      request.fragment_ids = optional_field<std::vector<std::string>>(body, "fragment_ids").value_or(std::vector<std::string>{});
      request.texts = optional_field<std::vector<std::string>>(body, "texts").value_or(std::vector<std::string>{});
      if (auto c = optional_field<std::string>(body, "classifier")) request.classifier = evaluation::parse_classifier_kind(*c);
      if (auto a = optional_field<double>(body, "alpha")) request.alpha = *a;
      const ScreenResult result = core.screen(request);
      json items = json::array();
      for (const auto& item : result.items) items.push_back(item_json(item));
      send_json(res, 200, {{"run_id", result.run_id}, {"items", items}, {"triage", triage_list_json(result.triage)}});
    }));

    server.Get("/queue/labeling", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::optional<LanguageTag> lang;
      if (auto l = query(req, "lang")) lang = parse_language(*l);
      const LabelingPage page =
          core.labeling_queue(query(req, "dataset"), query(req, "cursor"), parse_limit(query(req, "limit")), lang);
      json items = json::array();
      for (const Fragment& f : page.items) items.push_back(corpus::to_json(f));
      send_json(res, 200,
                {{"items", items}, {"next_cursor", page.next_cursor ? json(*page.next_cursor) : json(nullptr)}});
    }));

    server.Post("/labels", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const Fragment f = core.submit_label(field<std::string>(body, "fragment_id"),
                                           parse_label(field<std::string>(body, "label")),
                                           field<std::string>(body, "annotator"));
      send_json(res, 200, corpus::to_json(f));
    }));

    server.Get("/queue/triage", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string status = query(req, "status").value_or("pending");
      std::optional<TriageStatus> filter;
      if (status != "all") filter = parse_triage_status(status);
      send_json(res, 200, {{"items", triage_list_json(core.triage_queue(filter))}});
    }));

    server.Post(R"(/triage/([^/]+)/decision)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const TriageItem item =
          core.record_triage_decision(req.matches[1], parse_triage_decision(field<std::string>(body, "decision")),
                                      field<std::string>(body, "analyst"));
      send_json(res, 200, to_json(item));
    }));

    server.Post("/eval-runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      EvalRunRequest request;
      request.dataset_id = field<std::string>(body, "dataset_id");
      if (auto c = optional_field<std::string>(body, "classifier")) request.classifier = evaluation::parse_classifier_kind(*c);
      if (auto f = optional_field<double>(body, "fraction")) request.fraction = *f;
      if (auto s = optional_field<std::uint64_t>(body, "seed")) request.seed = *s;
      if (auto a = optional_field<double>(body, "alpha")) request.alpha = *a;
      send_json(res, 201, to_json(core.run_evaluation(request)));
    }));

    server.Get("/eval-runs", guarded([this](const httplib::Request&, httplib::Response& res) {
      json arr = json::array();
      for (const EvalRunRecord& r : core.eval_runs()) arr.push_back(run_summary_json(r));
      send_json(res, 200, {{"items", arr}});
    }));

    server.Get(R"(/eval-runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      const auto record = core.eval_run(id);
      if (!record) throw Error(ErrorKind::not_found, "no eval run '" + id + "'", id);
      send_json(res, 200, to_json(*record));
    }));

    server.Get(R"(/eval-runs/([^/]+)/check)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::vector<std::string> mismatches = core.check_consistency(std::string(req.matches[1]));
      send_json(res, 200, {{"consistent", mismatches.empty()}, {"mismatches", mismatches}});
    }));
  }
};

HttpServer::HttpServer(ServiceCore& core, HttpOptions options)
    : impl_(std::make_unique<Impl>(core, std::move(options))) {
  impl_->install();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::io, "cannot bind to " + host, host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::io, "cannot bind to " + host + ":" + std::to_string(port), host);
  }
  return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace amscreen::service
