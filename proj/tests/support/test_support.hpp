#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"

#include "amscreen/metrics.hpp"
#include "amscreen/types.hpp"

namespace amscreen::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("amscreen-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Fragment make_fragment(std::string id, std::string text, std::optional<SentimentLabel> label,
                              LanguageTag lang = LanguageTag::english) {
  Fragment f;
  f.doc_id = "doc-" + id;
  f.index = 0;
  f.id = std::move(id);
  f.text = std::move(text);
  f.lang = lang;
  f.label = label;
  return f;
}

// Rows = predicted, columns = actual.
inline metrics::ConfusionMatrix3 table2_matrix() {
  return metrics::ConfusionMatrix3({{{50, 23, 2}, {32, 1603, 16}, {0, 23, 17}}});
}

// Expands a matrix into one (predicted, actual) pair per counted item.
inline std::vector<metrics::PredictionPair> expand_pairs(const metrics::ConfusionMatrix3& m) {
  std::vector<metrics::PredictionPair> pairs;
  for (SentimentLabel p : kAllLabels) {
    for (SentimentLabel a : kAllLabels) {
      for (std::uint64_t i = 0; i < m.at(p, a); ++i) pairs.push_back({p, a});
    }
  }
  return pairs;
}

// httplib server on an ephemeral port, running on its own thread.
class StubServer {
 public:
  explicit StubServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  int port() const { return port_; }
  std::string url(const std::string& path = "/") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace amscreen::testing
