#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/ratings.hpp"
#include "rating_service.hpp"

using namespace psgkit;
using namespace psgkit::ratings;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "psgkit_test_ratings" / name;
  fs::remove_all(dir);
  fs::create_directories(dir / "img");
  return dir;
}

Session make_session(const fs::path& dir, std::size_t n) {
  Session s;
  for (std::size_t i = 0; i < n; ++i) {
    SessionSample x;
    x.sample_id = "s01_0" + std::to_string(1000 + i);
    x.subject_id = "s01";
    x.epoch_index = 1000 + i;
    for (std::size_t k = 0; k < 3; ++k) {
      x.images[k] = "img/" + x.sample_id + "_" + std::to_string(k) + ".png";
      std::ofstream(dir / x.images[k], std::ios::binary) << "PNG" << i << k;
    }
    x.stage = i % 2 ? Stage::N2 : Stage::W;
    x.rules = {i % 2 ? RuleId::N2_1 : RuleId::W1};
    x.rationale = "Rationale " + std::to_string(i);
    s.samples.push_back(x);
  }
  write_session(dir / "session.json", s);
  return s;
}

std::string body(const std::string& id, const std::string& rater, int a, int b, int c) {
  return json{{"sample_id", id}, {"rater", rater}, {"scores", {a, b, c}}}.dump();
}

}  // namespace

TEST(Session, RoundTrip) {
  const fs::path dir = scratch("session");
  const Session s = make_session(dir, 3);
  const Session back = load_session(dir / "session.json");
  EXPECT_EQ(back.samples, s.samples);
  ASSERT_NE(back.find(s.samples[1].sample_id), nullptr);
  EXPECT_EQ(back.find("nope"), nullptr);
}

TEST(Submission, Validation) {
  const fs::path dir = scratch("submission");
  const Session s = make_session(dir, 2);
  const std::string id = s.samples[0].sample_id;
  const auto ok = parse_submission(body(id, "r1", 0, 5, 3), s);
  ASSERT_TRUE(ok.rating);
  EXPECT_EQ(ok.rating->scores, (std::array<int, 3>{0, 5, 3}));
  EXPECT_FALSE(ok.rating->timestamp.empty());
  EXPECT_FALSE(parse_submission(body(id, "r1", 6, 5, 3), s).rating);
  EXPECT_FALSE(parse_submission(body(id, "r1", -1, 5, 3), s).rating);
  EXPECT_FALSE(parse_submission(body("unknown", "r1", 1, 1, 1), s).rating);
  EXPECT_FALSE(parse_submission(body(id, "", 1, 1, 1), s).rating);
  EXPECT_FALSE(parse_submission(R"({"sample_id":")" + id + R"(","rater":"r","scores":[1,2]})", s).rating);
  EXPECT_FALSE(parse_submission(R"({"sample_id":")" + id + R"(","rater":"r","scores":[1,2,3.5]})", s).rating);
  EXPECT_FALSE(parse_submission("not json", s).rating);
}

TEST(Summary, HandComputedFold) {
  const fs::path dir = scratch("summary");
  const Session s = make_session(dir, 3);
  std::vector<Rating> rs = {{s.samples[0].sample_id, "r", {4, 0, 1}, "t"},
                            {s.samples[1].sample_id, "r", {4, 0, 1}, "t"},
                            {s.samples[2].sample_id, "r", {5, 0, 2}, "t"}};
  const Summary sum = summarize(s, rs);
  EXPECT_EQ(sum.ratings, 3u);
  EXPECT_EQ(sum.rated_samples, 3u);
  EXPECT_NEAR(sum.dimensions[0].mean, 13.0 / 3.0, 1e-12);
  EXPECT_EQ(sum.dimensions[0].histogram[4], 2u);
  EXPECT_EQ(sum.dimensions[0].histogram[5], 1u);
  EXPECT_EQ(sum.dimensions[0].histogram[3], 0u);
  EXPECT_EQ(sum.dimensions[1].mean, 0.0);
  const json j = json::parse(summary_json(sum));
  EXPECT_EQ(j["dimensions"][0]["histogram"]["4"], 2);
  EXPECT_NEAR(j["dimensions"][0]["mean"].get<double>(), 4.33, 0.005);
  EXPECT_TRUE(json::parse(summary_json(summarize(s, {})))["dimensions"][0]["mean"].is_null());
}

TEST(Store, AppendOnlyAndDuplicates) {
  const fs::path dir = scratch("store");
  const fs::path path = dir / "ratings.jsonl";
  {
    RatingStore store(path);
    EXPECT_EQ(store.append({"a", "r1", {1, 2, 3}, "t1"}), RatingStore::AppendResult::Stored);
    EXPECT_EQ(store.append({"a", "r2", {1, 2, 3}, "t2"}), RatingStore::AppendResult::Stored);
    EXPECT_EQ(store.append({"a", "r1", {5, 5, 5}, "t3"}), RatingStore::AppendResult::Duplicate);
    EXPECT_EQ(store.snapshot()->size(), 2u);
  }
  RatingStore reopened(path);
  ASSERT_EQ(reopened.snapshot()->size(), 2u);
  EXPECT_EQ((*reopened.snapshot())[0], (Rating{"a", "r1", {1, 2, 3}, "t1"}));
  EXPECT_EQ(reopened.append({"a", "r2", {0, 0, 0}, "t"}), RatingStore::AppendResult::Duplicate);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first, R"({"sample_id":"a","rater":"r1","dim1":1,"dim2":2,"dim3":3,"timestamp":"t1"})");
}

TEST(Store, ConcurrentAppendsAreSerialized) {
  const fs::path path = scratch("concurrent") / "ratings.jsonl";
  RatingStore store(path);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t)
    ts.emplace_back([&, t] {
      for (int i = 0; i < 50; ++i) store.append({"s" + std::to_string(i), "r" + std::to_string(t), {1, 1, 1}, "t"});
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(store.snapshot()->size(), 200u);
  EXPECT_EQ(RatingStore(path).snapshot()->size(), 200u);
}

TEST(Store, CorruptLineIsAParseError) {
  const fs::path path = scratch("corrupt") / "ratings.jsonl";
  std::ofstream(path) << R"({"sample_id":"a","rater":"r1","dim1":1,"dim2":2,"dim3":3,"timestamp":"t1"})"
                      << "\n{broken\n";
  try {
    RatingStore store(path);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

// The HTTP API driven end to end, in process, on an ephemeral port.
class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = scratch("service");
    session = make_session(dir, 10);
    service = std::make_unique<service::RatingService>(
        service::ServiceOptions{dir / "session.json", dir / "ratings.jsonl", std::nullopt});
    port = service->bind_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { service->serve(); });
    for (int i = 0; i < 200 && !service->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    service->stop();
    if (thread.joinable()) thread.join();
  }

  httplib::Result post(const std::string& b) { return client->Post("/api/rating", b, "application/json"); }

  fs::path dir;
  Session session;
  std::unique_ptr<service::RatingService> service;
  int port = -1;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;
};

TEST_F(ServiceTest, RatesAWholeSession) {
  std::vector<std::array<int, 3>> given;
  for (std::size_t i = 0; i < session.samples.size(); ++i) {
    auto next = client->Get("/api/session/next?rater=alice");
    ASSERT_TRUE(next);
    ASSERT_EQ(next->status, 200);
    const json j = json::parse(next->body);
    EXPECT_FALSE(j["complete"].get<bool>());
    EXPECT_EQ(j["rated"], i);
    EXPECT_EQ(j["total"], 10);
    EXPECT_EQ(j["sample_id"], session.samples[i].sample_id);
    EXPECT_EQ(j["images"].size(), 3u);
    EXPECT_EQ(j["rationale"], session.samples[i].rationale);
    EXPECT_FALSE(j["rules"][0]["criterion"].get<std::string>().empty());
    EXPECT_TRUE(j.contains("rubric"));

    const std::array<int, 3> sc{static_cast<int>(i % 6), 5 - static_cast<int>(i % 6), 3};
    auto r = post(body(j["sample_id"], "alice", sc[0], sc[1], sc[2]));
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 201) << r->body;
    given.push_back(sc);
  }
  auto done = client->Get("/api/session/next?rater=alice");
  ASSERT_TRUE(done);
  EXPECT_TRUE(json::parse(done->body)["complete"].get<bool>());
  // another rater starts from the beginning
  EXPECT_EQ(json::parse(client->Get("/api/session/next?rater=bob")->body)["sample_id"], session.samples[0].sample_id);

  EXPECT_EQ(RatingStore(dir / "ratings.jsonl").snapshot()->size(), 10u);

  // summary equals a hand fold over what was submitted
  const json sum = json::parse(client->Get("/api/summary")->body);
  EXPECT_EQ(sum["ratings"], 10);
  for (std::size_t d = 0; d < 3; ++d) {
    std::array<int, 6> hist{};
    double total = 0;
    for (const auto& sc : given) {
      ++hist[static_cast<std::size_t>(sc[d])];
      total += sc[d];
    }
    for (int k = 0; k <= 5; ++k) EXPECT_EQ(sum["dimensions"][d]["histogram"][std::to_string(k)], hist[k]);
    EXPECT_NEAR(sum["dimensions"][d]["mean"].get<double>(), total / 10.0, 1e-12);
  }
}

TEST_F(ServiceTest, RejectsInvalidAndDuplicate) {
  const std::string id = session.samples[0].sample_id;
  auto bad = post(body(id, "alice", 6, 1, 1));
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  EXPECT_TRUE(json::parse(bad->body).contains("error"));
  EXPECT_EQ(post(body(id, "alice", 1, 1, -1))->status, 422);
  EXPECT_EQ(post(body("missing", "alice", 1, 1, 1))->status, 422);
  EXPECT_EQ(post("{").value().status, 422);
  EXPECT_EQ(post(body(id, "alice", 4, 4, 5))->status, 201);
  EXPECT_EQ(post(body(id, "alice", 3, 3, 3))->status, 409);
  EXPECT_EQ(post(body(id, "bob", 3, 3, 3))->status, 201);
  EXPECT_EQ(client->Get("/api/session/next")->status, 400);
}

TEST_F(ServiceTest, ServesImagesAndRubric) {
  const auto& s = session.samples[2];
  auto img = client->Get("/api/image/" + s.sample_id + "/1");
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 200);
  EXPECT_EQ(img->body, "PNG21");
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(client->Get("/api/image/unknown/0")->status, 404);
  fs::remove(dir / s.images[0]);
  EXPECT_EQ(client->Get("/api/image/" + s.sample_id + "/0")->status, 404);
  auto rubric = client->Get("/api/rubric");
  ASSERT_TRUE(rubric);
  EXPECT_EQ(rubric->status, 200);
  EXPECT_NO_THROW(json::parse(rubric->body));
}
