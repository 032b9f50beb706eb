#include <fstream>
#include <sstream>

#include "amscreen/error.hpp"
#include "amscreen/service.hpp"

namespace amscreen::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// A crash mid-append can leave a final line without its newline. Cut it off
// before appending so later events are not glued onto it.
void drop_torn_tail(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in || in.tellg() <= 0) return;
  in.seekg(-1, std::ios::end);
  if (in.get() == '\n') return;
  in.seekg(0);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.empty() || text.back() == '\n') return;
  const std::size_t keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
  in.close();
  std::error_code ec;
  fs::resize_file(path, keep, ec);
  if (ec) throw Error(ErrorKind::persistence, "cannot repair event log '" + path.string() + "'", path.string());
}

}  // namespace

EventLog::EventLog(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(*dir_, ec);
  if (ec || !fs::is_directory(*dir_)) {
    throw Error(ErrorKind::persistence, "cannot create data directory '" + dir_->string() + "': " + ec.message(),
                dir_->string());
  }
}

fs::path EventLog::family_path(std::string_view family) const {
  if (!dir_) return {};
  return *dir_ / (std::string(family) + ".jsonl");
}

void EventLog::append_all(std::string_view family, std::span<const json> events) {
  if (!dir_ || events.empty()) return;
  std::string buffer;
  for (const json& e : events) {
    buffer += e.dump();
    buffer += '\n';
  }
  const fs::path path = family_path(family);
  drop_torn_tail(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::persistence, "cannot open event log '" + path.string() + "'", path.string());
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.flush();
  if (!out) throw Error(ErrorKind::persistence, "cannot append to event log '" + path.string() + "'", path.string());
}

void EventLog::append(std::string_view family, const json& event) {
  append_all(family, std::span<const json>(&event, 1));
}

std::vector<json> EventLog::replay(std::string_view family) const {
  std::vector<json> events;
  if (!dir_) return events;
  const fs::path path = family_path(family);
  if (!fs::exists(path)) return events;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::persistence, "cannot read event log '" + path.string() + "'", path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string_view line(text.data() + pos, (terminated ? nl : text.size()) - pos);
    pos = terminated ? nl + 1 : text.size();
    ++line_no;
    if (!terminated) break;  // torn write from a crash mid-append; dropped on next append
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      events.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::persistence,
                  "corrupt event log '" + path.string() + "' line " + std::to_string(line_no) + ": " + e.what(),
                  path.string() + ":" + std::to_string(line_no));
    }
  }
  return events;
}

}  // namespace amscreen::service
