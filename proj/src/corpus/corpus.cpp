#include "amscreen/corpus.hpp"

#include "amscreen/error.hpp"
#include "amscreen/fileutil.hpp"
#include "amscreen/timeutil.hpp"
#include "amscreen/unicode.hpp"

namespace amscreen::corpus {

using nlohmann::json;

void Corpus::add_document(Document doc) {
  if (doc.id.empty()) throw Error(ErrorKind::invalid_argument, "document id is empty");
  if (doc.raw_text.empty()) {
    throw Error(ErrorKind::invalid_argument, "document '" + doc.id + "' has empty raw_text", doc.id);
  }
  if (doc_index_.contains(doc.id)) {
    throw Error(ErrorKind::duplicate_id, "duplicate document id '" + doc.id + "'", doc.id);
  }
  doc_index_.emplace(doc.id, documents_.size());
  documents_.push_back(std::move(doc));
}

void Corpus::add_fragment(Fragment frag) {
  if (frag.id.empty()) throw Error(ErrorKind::invalid_argument, "fragment id is empty");
  if (unicode::trim(frag.text).empty()) {
    throw Error(ErrorKind::invalid_argument, "fragment '" + frag.id + "' has blank text", frag.id);
  }
  if (frag_index_.contains(frag.id)) {
    throw Error(ErrorKind::duplicate_id, "duplicate fragment id '" + frag.id + "'", frag.id);
  }
  auto position = std::make_pair(frag.doc_id, frag.index);
  if (frag_positions_.contains(position)) {
    throw Error(ErrorKind::duplicate_id,
                "duplicate fragment position (" + frag.doc_id + ", " + std::to_string(frag.index) +
                    ") for id '" + frag.id + "'",
                frag.id);
  }
  frag_positions_.insert(std::move(position));
  frag_index_.emplace(frag.id, fragments_.size());
  fragments_.push_back(std::move(frag));
}

const Document* Corpus::find_document(std::string_view id) const {
  auto it = doc_index_.find(std::string(id));
  return it == doc_index_.end() ? nullptr : &documents_[it->second];
}

const Fragment* Corpus::find_fragment(std::string_view id) const {
  auto it = frag_index_.find(std::string(id));
  return it == frag_index_.end() ? nullptr : &fragments_[it->second];
}

Fragment& Corpus::fragment_ref(std::string_view id) {
  auto it = frag_index_.find(std::string(id));
  if (it == frag_index_.end()) {
    throw Error(ErrorKind::not_found, "unknown fragment id '" + std::string(id) + "'", std::string(id));
  }
  return fragments_[it->second];
}

void Corpus::set_label(std::string_view fragment_id, std::optional<SentimentLabel> label) {
  fragment_ref(fragment_id).label = label;
}

void Corpus::set_prediction(std::string_view fragment_id, std::optional<Prediction> prediction) {
  fragment_ref(fragment_id).predicted = std::move(prediction);
}

// ---------------------------------------------------------------------------

json to_json(const Prediction& p) {
  json scores = json::object();
  for (SentimentLabel l : kAllLabels) scores[std::string(to_string(l))] = p.score(l);
  return json{{"label", to_string(p.label)},
              {"scores", std::move(scores)},
              {"score_kind", to_string(p.score_kind)},
              {"source", to_string(p.source)}};
}

Prediction prediction_from_json(const json& j) {
  Prediction p;
  p.label = parse_label(j.at("label").get<std::string>());
  const json& scores = j.at("scores");
  for (SentimentLabel l : kAllLabels) p.scores[index_of(l)] = scores.at(std::string(to_string(l))).get<double>();
  p.score_kind = parse_score_kind(j.at("score_kind").get<std::string>());
  p.source = parse_prediction_source(j.at("source").get<std::string>());
  return p;
}

json to_json(const Document& d) {
  json j{{"kind", "doc"},
         {"id", d.id},
         {"source", to_string(d.source)},
         {"origin_ref", d.origin_ref},
         {"fetched_at", format_timestamp(d.fetched_at)}};
  if (d.title) j["title"] = *d.title;
  j["raw_text"] = d.raw_text;
  if (d.cleaned_text) j["cleaned_text"] = *d.cleaned_text;
  if (d.lang) j["lang"] = to_string(*d.lang);
  return j;
}

Document document_from_json(const json& j) {
  Document d;
  d.id = j.at("id").get<std::string>();
  d.source = parse_source(j.value("source", std::string("manual")));
  d.origin_ref = j.value("origin_ref", std::string());
  if (auto it = j.find("fetched_at"); it != j.end() && !it->is_null()) {
    d.fetched_at = parse_timestamp(it->get<std::string>());
  }
  if (auto it = j.find("title"); it != j.end() && !it->is_null()) d.title = it->get<std::string>();
  d.raw_text = j.at("raw_text").get<std::string>();
  if (auto it = j.find("cleaned_text"); it != j.end() && !it->is_null()) {
    d.cleaned_text = it->get<std::string>();
  }
  if (auto it = j.find("lang"); it != j.end() && !it->is_null()) d.lang = parse_language(it->get<std::string>());
  return d;
}

json to_json(const Fragment& f) {
  json j{{"kind", "frag"},  {"id", f.id},     {"doc_id", f.doc_id},
         {"index", f.index}, {"text", f.text}, {"lang", to_string(f.lang)}};
  if (f.label) j["label"] = to_string(*f.label);
  if (f.predicted) j["predicted"] = to_json(*f.predicted);
  return j;
}

Fragment fragment_from_json(const json& j) {
  Fragment f;
  f.id = j.at("id").get<std::string>();
  f.doc_id = j.value("doc_id", std::string());
  f.index = j.value("index", std::size_t{0});
  f.text = j.at("text").get<std::string>();
  f.lang = parse_language(j.value("lang", std::string("unknown")));
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) f.label = parse_label(it->get<std::string>());
  if (auto it = j.find("predicted"); it != j.end() && !it->is_null()) f.predicted = prediction_from_json(*it);
  return f;
}

// ---------------------------------------------------------------------------

Corpus parse_corpus(std::string_view text, std::string_view origin) {
  Corpus corpus;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    try {
      const json record = json::parse(line);
      if (!record.is_object()) throw Error(ErrorKind::parse, "record is not a JSON object");
      const std::string kind = record.value("kind", std::string());
      if (kind == "doc") {
        corpus.add_document(document_from_json(record));
      } else if (kind == "frag") {
        corpus.add_fragment(fragment_from_json(record));
      } else {
        throw Error(ErrorKind::parse, "unknown record kind '" + kind + "'");
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::duplicate_id) {
        throw Error(ErrorKind::duplicate_id, where + ": " + e.what(), e.detail());
      }
      throw Error(ErrorKind::parse, "malformed record at line " + std::to_string(line_no) + " (" + where +
                                        "): " + e.what(),
                  std::to_string(line_no));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, "malformed record at line " + std::to_string(line_no) + " (" + where +
                                        "): " + e.what(),
                  std::to_string(line_no));
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path), path.string()); }

std::string serialize_corpus(std::span<const Document> documents, std::span<const Fragment> fragments) {
  std::string out;
  for (const Document& d : documents) {
    Document normalized = d;
    normalized.raw_text = unicode::nfc(d.raw_text);
    if (d.title) normalized.title = unicode::nfc(*d.title);
    if (d.cleaned_text) normalized.cleaned_text = unicode::nfc(*d.cleaned_text);
    out += to_json(normalized).dump();
    out.push_back('\n');
  }
  for (const Fragment& f : fragments) {
    Fragment normalized = f;
    normalized.text = unicode::nfc(f.text);
    out += to_json(normalized).dump();
    out.push_back('\n');
  }
  return out;
}

void save_corpus(std::span<const Document> documents, std::span<const Fragment> fragments,
                 const std::filesystem::path& path) {
  std::set<std::string_view> seen;
  for (const Document& d : documents) {
    if (!seen.insert(d.id).second) throw Error(ErrorKind::duplicate_id, "duplicate document id '" + d.id + "'", d.id);
  }
  seen.clear();
  for (const Fragment& f : fragments) {
    if (!seen.insert(f.id).second) throw Error(ErrorKind::duplicate_id, "duplicate fragment id '" + f.id + "'", f.id);
  }
  write_file_atomic(path, serialize_corpus(documents, fragments));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  save_corpus(corpus.documents(), corpus.fragments(), path);
}

}  // namespace amscreen::corpus
