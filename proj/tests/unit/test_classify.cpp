#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "amscreen/classify.hpp"
#include "amscreen/corpus.hpp"
#include "amscreen/evaluation.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace amscreen;
using namespace amscreen::classify;
using amscreen::testing::make_fragment;
using amscreen::testing::StubServer;
using amscreen::testing::TempDir;

namespace {

constexpr auto kNeg = SentimentLabel::negative;
constexpr auto kNeu = SentimentLabel::neutral;
constexpr auto kPos = SentimentLabel::positive;

template <typename Fn>
Error capture_error(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorKind::io, "none");
}

using oracle::nb_label;
using oracle::nb_posteriors;

std::vector<Fragment> six_doc_corpus() {
  return {make_fragment("n1", "fraud agent", kNeg),   make_fragment("n2", "fraud scam", kNeg),
          make_fragment("u1", "bank meeting", kNeu),  make_fragment("u2", "agent meeting", kNeu),
          make_fragment("p1", "great service", kPos), make_fragment("p2", "bank award", kPos)};
}

RemoteAdapterConfig stub_config(const StubServer& s) {
  RemoteAdapterConfig c;
  c.endpoint = s.url("/v1/classify");
  c.timeout = std::chrono::milliseconds(2000);
  c.max_retries = 1;
  c.retry_backoff = std::chrono::milliseconds(0);
  return c;
}

void reply_text(httplib::Response& res, const std::string& text) {
  res.set_content(nlohmann::json{{"text", text}}.dump(), "application/json");
}

}  // namespace

// ---------------------------------------------------------------------------
// Training

TEST(TrainBaseline, UniformPriorsForOnePerClass) {
  const std::vector<Fragment> frags = {make_fragment("a", "fraud", kNeg), make_fragment("b", "meeting", kNeu),
                                       make_fragment("c", "award", kPos)};
  const BaselineModel m = train_baseline(frags);
  for (double p : m.class_priors) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
  EXPECT_EQ(m.vocabulary.size(), 3u);
}

TEST(TrainBaseline, SmoothedTokenProbability) {
  // Negative: "fraud" x5 plus 15 other tokens (total 20). Vocabulary is
  // fraud + n1..n5 + u1,u2 + p1,p2 = 10 words.
  std::vector<Fragment> frags;
  frags.push_back(make_fragment("n-a", "fraud fraud fraud fraud fraud", kNeg));
  frags.push_back(make_fragment("n-b", "n1 n2 n3 n4 n5 n1 n2 n3 n4 n5 n1 n2 n3 n4 n5", kNeg));
  frags.push_back(make_fragment("u", "u1 u2", kNeu));
  frags.push_back(make_fragment("p", "p1 p2", kPos));
  const BaselineModel m = train_baseline(frags, 1.0);
  ASSERT_EQ(m.vocabulary.size(), 10u);
  ASSERT_EQ(m.class_totals[0], 20u);
  EXPECT_DOUBLE_EQ(m.token_probability(kNeg, "fraud"), 6.0 / 30.0);
  EXPECT_DOUBLE_EQ(m.token_probability(kNeu, "fraud"), 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(m.token_probability(kNeg, "never-seen"), 1.0 / 30.0);
}

TEST(TrainBaseline, MissingClassNamesIt) {
  const std::vector<Fragment> frags = {make_fragment("a", "fraud", kNeg), make_fragment("b", "meeting", kNeu)};
  const Error e = capture_error([&] { train_baseline(frags); });
  EXPECT_EQ(e.kind(), ErrorKind::training);
  EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos) << e.what();
}

TEST(TrainBaseline, NonPositiveAlphaRejected) {
  for (double a : {0.0, -1.0}) {
    EXPECT_EQ(capture_error([&] { train_baseline(six_doc_corpus(), a); }).kind(), ErrorKind::invalid_argument);
  }
}

TEST(TrainBaseline, DeterministicOverInputOrder) {
  auto frags = six_doc_corpus();
  const BaselineModel a = train_baseline(frags);
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(frags.begin(), frags.end(), rng);
    const BaselineModel b = train_baseline(frags);
    ASSERT_EQ(a, b);
    ASSERT_EQ(serialize_model(a), serialize_model(b));
  }
}

TEST(TrainBaseline, ModelRoundTrip) {
  TempDir dir;
  std::vector<Fragment> frags = six_doc_corpus();
  frags.push_back(make_fragment("bn", "টাকা পাচার", kNeg, LanguageTag::bangla));
  const BaselineModel m = train_baseline(frags, 0.5);
  save_model(m, dir / "m.tsv");
  EXPECT_EQ(load_model(dir / "m.tsv"), m);
  EXPECT_EQ(parse_model(serialize_model(m)), m);
}

TEST(TrainBaseline, MalformedModelRejected) {
  EXPECT_EQ(capture_error([] { parse_model("not a model\n"); }).kind(), ErrorKind::parse);
}

// ---------------------------------------------------------------------------
// Prediction

TEST(PredictBaseline, OutOfVocabularyFollowsPriors) {
  // Priors (0.1, 0.8, 0.1) from 1/8/1 documents.
  std::vector<Fragment> frags = {make_fragment("n", "fraud", kNeg), make_fragment("p", "award", kPos)};
  for (int i = 0; i < 8; ++i) frags.push_back(make_fragment("u" + std::to_string(i), "meeting", kNeu));
  const BaselineModel m = train_baseline(frags);
  EXPECT_DOUBLE_EQ(m.class_priors[1], 0.8);
  // Each OOV token costs each class 1/(total+|V|): 1/4, 1/11, 1/4 here, so
  // one token still leaves neutral ahead (0.8/11 > 0.1/4).
  EXPECT_EQ(predict_text(m, "zzz", LanguageTag::english).label, kNeu);
}

TEST(PredictBaseline, FraudFraudIsNegative) {
  const BaselineModel m = train_baseline(six_doc_corpus());
  const Prediction p = predict_text(m, "fraud fraud", LanguageTag::english);
  EXPECT_EQ(p.label, kNeg);
  EXPECT_EQ(p.label, nb_label(six_doc_corpus(), {"fraud", "fraud"}));
  const auto post = normalized_posteriors(p);
  const auto expected = nb_posteriors(six_doc_corpus(), {"fraud", "fraud"});
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(post[c], static_cast<double>(expected[c]), 1e-12);
}

TEST(PredictBaseline, ExactTieGoesToNegative) {
  EXPECT_EQ(argmax_label({-1.0, -1.0, -1.0}), kNeg);
  EXPECT_EQ(argmax_label({-2.0, -1.0, -1.0}), kNeu);
  // Symmetric corpus: a query of a token nobody has seen ties everywhere.
  const std::vector<Fragment> frags = {make_fragment("a", "x", kNeg), make_fragment("b", "y", kNeu),
                                       make_fragment("c", "z", kPos)};
  EXPECT_EQ(predict_text(train_baseline(frags), "w", LanguageTag::english).label, kNeg);
}

TEST(PredictBaseline, ScoresAreLogProbabilitiesAndPosteriorsSumToOne) {
  const BaselineModel m = train_baseline(six_doc_corpus());
  const Prediction p = predict_text(m, "bank agent meeting", LanguageTag::english);
  EXPECT_EQ(p.score_kind, ScoreKind::log_probability);
  EXPECT_EQ(p.source, PredictionSource::baseline);
  for (double s : p.scores) EXPECT_LT(s, 0.0);
  const auto post = normalized_posteriors(p);
  EXPECT_NEAR(post[0] + post[1] + post[2], 1.0, 1e-12);
}

TEST(PredictBaseline, MatchesBruteForceOracleOnSmallCorpora) {
  const std::vector<std::string> vocab = {"fraud", "scam", "bank", "agent", "award", "টাকা", "পাচার"};
  std::mt19937_64 rng(424242);
  std::uniform_int_distribution<std::size_t> word(0, vocab.size() - 1);
  std::uniform_int_distribution<int> nfrag(3, 8), ntok(1, 3), nquery(0, 4), cls(0, 2);
  int ties = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const int n = nfrag(rng);
    std::vector<Fragment> train;
    for (int i = 0; i < n; ++i) {
      // First three cover every class.
      const SentimentLabel label = kAllLabels[i < 3 ? i : cls(rng)];
      std::string text;
      for (int t = ntok(rng); t > 0; --t) text += vocab[word(rng)] + " ";
      train.push_back(make_fragment("f" + std::to_string(i), text, label));
    }
    std::vector<std::string> query;
    for (int t = nquery(rng); t > 0; --t) query.push_back(word(rng) % 5 == 0 ? "oov" : vocab[word(rng)]);
    std::string qtext;
    for (const auto& q : query) qtext += q + " ";

    const BaselineModel m = train_baseline(train);
    Fragment qf = make_fragment("q", qtext.empty() ? "x" : qtext, std::nullopt);
    const Prediction p = query.empty() ? predict_text(m, "", LanguageTag::english) : predict_baseline(m, qf);
    if (query.empty()) {
      // Empty token sequence: priors alone.
      ASSERT_EQ(p.label, nb_label(train, {}));
      continue;
    }
    const auto expected = nb_posteriors(train, query);
    const auto post = normalized_posteriors(p);
    for (std::size_t c = 0; c < 3; ++c) {
      ASSERT_NEAR(post[c], static_cast<double>(expected[c]), 1e-9) << "trial " << trial << " query '" << qtext << "'";
    }
    ASSERT_EQ(p.label, nb_label(train, query)) << "trial " << trial << " query '" << qtext << "'";
    if (expected[0] == expected[1] || expected[1] == expected[2] || expected[0] == expected[2]) ++ties;
  }
  EXPECT_GT(ties, 0) << "the property run should include exact ties";
}

TEST(PredictBaseline, MoreEvidenceNeverLowersClassPosterior) {
  // Adding a token seen only in negative raises P(negative | text).
  const BaselineModel m = train_baseline(six_doc_corpus());
  double last = 0.0;
  std::string text = "bank";
  for (int i = 0; i < 6; ++i) {
    const double p = normalized_posteriors(predict_text(m, text, LanguageTag::english))[0];
    EXPECT_GT(p, last);
    last = p;
    text += " scam";
  }
}

// ---------------------------------------------------------------------------
// Remote adapter

TEST(RemoteConfig, ValidatesTemplateAndEndpoint) {
  RemoteAdapterConfig c;
  EXPECT_EQ(capture_error([&] { c.validate(); }).kind(), ErrorKind::invalid_argument);
  c.endpoint = "http://localhost:1/x";
  c.validate();
  c.prompt_template = "no slot";
  EXPECT_EQ(capture_error([&] { c.validate(); }).kind(), ErrorKind::invalid_argument);
  c.prompt_template = "{text} and {text}";
  EXPECT_EQ(capture_error([&] { c.validate(); }).kind(), ErrorKind::invalid_argument);
}

TEST(RemoteConfig, EnvironmentOverridesFile) {
  TempDir dir;
  std::ofstream(dir / "remote.json") << R"({"endpoint":"http://file/x","model":"m1","timeout_ms":1500})";
  const EnvLookup env = [](const std::string& k) -> std::optional<std::string> {
    if (k == "AMSCREEN_REMOTE_MODEL") return "m2";
    if (k == "AMSCREEN_REMOTE_TOKEN") return "secret";
    return std::nullopt;
  };
  const RemoteAdapterConfig c = load_remote_config(dir / "remote.json", env);
  EXPECT_EQ(c.endpoint, "http://file/x");
  EXPECT_EQ(c.model_name, "m2");
  EXPECT_EQ(c.bearer_token, "secret");
  EXPECT_EQ(c.timeout, std::chrono::milliseconds(1500));
}

TEST(RemoteConfig, PromptHasTextSubstituted) {
  RemoteAdapterConfig c;
  c.prompt_template = "Classify: {text}";
  EXPECT_EQ(render_prompt(c, "টাকা পাচার"), "Classify: টাকা পাচার");
}

TEST(RemoteAnswer, Normalization) {
  EXPECT_EQ(parse_remote_answer("negative"), kNeg);
  EXPECT_EQ(parse_remote_answer("NEUTRAL\n"), kNeu);
  EXPECT_EQ(parse_remote_answer("  Positive "), kPos);
  const Error e = capture_error([] { parse_remote_answer("maybe bad"); });
  EXPECT_EQ(e.kind(), ErrorKind::protocol);
  EXPECT_EQ(e.detail(), "maybe bad");
}

TEST(RemoteClassify, StubRepliesAreParsed) {
  std::string last_body;
  std::string last_auth;
  std::atomic<int> n{0};
  StubServer s([&](httplib::Server& srv) {
    srv.Post("/v1/classify", [&](const httplib::Request& req, httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      reply_text(res, n++ == 0 ? "negative" : "NEUTRAL\n");
    });
  });
  RemoteAdapterConfig c = stub_config(s);
  c.bearer_token = "tok";
  const Prediction p = classify_remote(c, "agent fraud");
  EXPECT_EQ(p.label, kNeg);
  EXPECT_EQ(p.source, PredictionSource::remote);
  EXPECT_EQ(p.score_kind, ScoreKind::probability);
  EXPECT_EQ(classify_remote(c, "x").label, kNeu);
  const auto body = nlohmann::json::parse(last_body);
  EXPECT_EQ(body["model"], "default");
  EXPECT_NE(body["prompt"].get<std::string>().find("Text: x"), std::string::npos);
  EXPECT_EQ(last_auth, "Bearer tok");
}

TEST(RemoteClassify, NonConformingReplyKeepsRawPayload) {
  StubServer s([](httplib::Server& srv) {
    srv.Post("/v1/classify", [](const httplib::Request&, httplib::Response& res) { reply_text(res, "maybe bad"); });
  });
  const Error e = capture_error([&] { classify_remote(stub_config(s), "t"); });
  EXPECT_EQ(e.kind(), ErrorKind::protocol);
  EXPECT_NE(e.detail().find("maybe bad"), std::string::npos);
}

TEST(RemoteClassify, RetriesThenUnavailable) {
  std::atomic<int> calls{0};
  StubServer s([&](httplib::Server& srv) {
    srv.Post("/v1/classify", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 503;
    });
  });
  RemoteAdapterConfig c = stub_config(s);
  c.max_retries = 2;
  EXPECT_EQ(capture_error([&] { classify_remote(c, "t"); }).kind(), ErrorKind::unavailable);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteClassify, RecoversAfterTransientFailure) {
  std::atomic<int> calls{0};
  StubServer s([&](httplib::Server& srv) {
    srv.Post("/v1/classify", [&](const httplib::Request&, httplib::Response& res) {
      if (calls++ == 0) {
        res.status = 502;
        return;
      }
      reply_text(res, "positive");
    });
  });
  EXPECT_EQ(classify_remote(stub_config(s), "t").label, kPos);
}

TEST(RemoteClassify, TimeoutIsUnavailable) {
  StubServer s([](httplib::Server& srv) {
    srv.Post("/v1/classify", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(400));
      reply_text(res, "negative");
    });
  });
  RemoteAdapterConfig c = stub_config(s);
  c.timeout = std::chrono::milliseconds(100);
  c.max_retries = 1;
  EXPECT_EQ(capture_error([&] { classify_remote(c, "t"); }).kind(), ErrorKind::unavailable);
}

TEST(RemoteClassify, ClientErrorStatusIsProtocolError) {
  StubServer s([](httplib::Server& srv) {
    srv.Post("/v1/classify", [](const httplib::Request&, httplib::Response& res) {
      res.status = 400;
      res.set_content("bad request body", "text/plain");
    });
  });
  const Error e = capture_error([&] { classify_remote(stub_config(s), "t"); });
  EXPECT_EQ(e.kind(), ErrorKind::protocol);
  EXPECT_EQ(e.detail(), "bad request body");
}

// ---------------------------------------------------------------------------
// Batch screening

TEST(ScreenBatch, FlaggedAreTheNegatives) {
  const BaselineClassifier clf(train_baseline(six_doc_corpus()));
  const std::vector<Fragment> batch = {make_fragment("a", "fraud scam", std::nullopt),
                                       make_fragment("b", "bank meeting", std::nullopt),
                                       make_fragment("c", "great award", std::nullopt)};
  const auto out = screen_batch(clf, batch);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(out[i].fragment.id, batch[i].id);
    ASSERT_TRUE(out[i].prediction);
    EXPECT_EQ(out[i].flagged, out[i].prediction->label == kNeg);
  }
  EXPECT_TRUE(out[0].flagged);
  EXPECT_FALSE(out[1].flagged);
}

TEST(ScreenBatch, EmptyBatch) {
  const BaselineClassifier clf(train_baseline(six_doc_corpus()));
  EXPECT_TRUE(screen_batch(clf, {}).empty());
}

TEST(ScreenBatch, OneRemoteItemTimesOut) {
  StubServer s([](httplib::Server& srv) {
    srv.Post("/v1/classify", [](const httplib::Request& req, httplib::Response& res) {
      const std::string prompt = nlohmann::json::parse(req.body)["prompt"];
      if (prompt.find("slow") != std::string::npos) {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
      }
      reply_text(res, "negative");
    });
  });
  RemoteAdapterConfig c = stub_config(s);
  c.timeout = std::chrono::milliseconds(100);
  c.max_retries = 1;
  const RemoteClassifier clf(c, 2);
  const std::vector<Fragment> batch = {make_fragment("1", "first", std::nullopt),
                                       make_fragment("2", "slow one", std::nullopt),
                                       make_fragment("3", "third", std::nullopt)};
  const auto out = screen_batch(clf, batch);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_TRUE(out[0].prediction && !out[0].error);
  EXPECT_TRUE(out[2].prediction && !out[2].error);
  ASSERT_TRUE(out[1].error);
  EXPECT_FALSE(out[1].prediction);
  EXPECT_EQ(out[1].error->kind, ErrorKind::unavailable);
  EXPECT_FALSE(out[1].flagged);
  EXPECT_EQ(out[1].fragment.id, "2");
}

TEST(ReplayClassifier, UsesStoredPrediction) {
  Fragment f = make_fragment("a", "x", kNeu);
  const ReplayClassifier clf;
  EXPECT_EQ(capture_error([&] { clf.classify(f); }).kind(), ErrorKind::not_found);
  Prediction p;
  p.label = kPos;
  f.predicted = p;
  EXPECT_EQ(clf.classify(f).label, kPos);
}

// ---------------------------------------------------------------------------
// Bundled synthetic corpus

TEST(BundledCorpus, BaselineClearsBarAndBeatsMajority) {
  const corpus::Corpus c = corpus::load_corpus(std::string(AMSCREEN_DATA_DIR) + "/synthetic_corpus.jsonl");
  const auto result = evaluation::run_evaluation(c.fragments(), {}, 0.3578, 42, {});
  const auto& m = result.report.matrix;
  std::uint64_t majority = 0;
  for (SentimentLabel l : kAllLabels) majority = std::max(majority, m.column_sum(l));
  const double acc = static_cast<double>(m.trace()) / static_cast<double>(m.total());
  EXPECT_GE(acc, 0.90);
  EXPECT_GT(m.trace(), majority);
  EXPECT_EQ(result.report.weighted.accuracy, acc);
  EXPECT_FALSE(result.partial);
}

TEST(BundledCorpus, EvaluationDeterministic) {
  const corpus::Corpus c = corpus::load_corpus(std::string(AMSCREEN_DATA_DIR) + "/synthetic_corpus.jsonl");
  const auto a = evaluation::run_evaluation(c.fragments(), {}, 0.3578, 42, {});
  const auto b = evaluation::run_evaluation(c.fragments(), {}, 0.3578, 42, {});
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.split, b.split);
}

TEST(Evaluation, MissingClassIsTrainingError) {
  const std::vector<Fragment> frags = {make_fragment("a", "fraud", kNeg), make_fragment("b", "meeting", kNeu),
                                       make_fragment("c", "fraud scam", kNeg), make_fragment("d", "bank", kNeu)};
  const Error e = capture_error([&] { evaluation::run_evaluation(frags, {}, 0.5, 1, {}); });
  EXPECT_EQ(e.kind(), ErrorKind::training);
  EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
}
