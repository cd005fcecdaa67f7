#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "spanagg/session.hpp"

using namespace spanagg;

namespace {

json roster(std::vector<double> competences = {1, 1, 1}) {
  json experts = json::array();
  for (std::size_t k = 0; k < competences.size(); ++k)
    experts.push_back({{"id", "e" + std::to_string(k)}, {"competence", competences[k]}});
  return json{{"alternatives", {"A", "B", "C", "D"}}, {"experts", experts}};
}

json judgment(const std::string& expert, std::size_t i, std::size_t j, double grade, int scale = 9,
              const char* direction = "row") {
  return json{{"expert", expert}, {"i", i}, {"j", j}, {"grade", grade}, {"scale_grades", scale},
              {"direction", direction}};
}

// Every expert judges every pair consistently with w = (4,3,2,1)/10.
json consistent_judgments(std::size_t experts = 3) {
  const std::vector<double> w{4, 3, 2, 1};
  json out = json::array();
  for (std::size_t k = 0; k < experts; ++k)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) out.push_back(judgment("e" + std::to_string(k), i, j, w[i] / w[j]));
  return out;
}

// Same pairs, with expert e2 contradicting the others on several cells.
json disputed_judgments() {
  json out = consistent_judgments(2);
  out.push_back(judgment("e2", 0, 1, 5.0));
  out.push_back(judgment("e2", 0, 2, 1.0, 9));
  out.push_back(judgment("e2", 0, 3, 3.0, 5, "column"));
  out.push_back(judgment("e2", 1, 2, 7.0));
  out.push_back(judgment("e2", 1, 3, 2.0, 3));
  out.push_back(judgment("e2", 2, 3, 9.0));
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("spanagg-test-" + std::to_string(std::random_device{}()) + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST(Session, CreateRenormalizesCompetences) {
  SessionStore store;
  auto doc = store.create(roster({1, 1, 1}));
  EXPECT_EQ(doc["status"], "collecting");
  for (const auto& e : doc["experts"]) EXPECT_DOUBLE_EQ(e["competence"].get<double>(), 1.0 / 3.0);
  auto kept = store.create(roster({0.5, 0.3, 0.2}));
  EXPECT_EQ(kept["experts"][0]["competence"].get<double>(), 0.5);
  EXPECT_EQ(kept["experts"][1]["competence"].get<double>(), 0.3);
  EXPECT_EQ(kept["experts"][2]["competence"].get<double>(), 0.2);
  EXPECT_NE(doc["id"], kept["id"]);
}

TEST(Session, CreateRejectsBadRosters) {
  SessionStore store;
  json one = roster();
  one["alternatives"] = {"A"};
  EXPECT_THROW(store.create(one), Error);
  json dup = roster();
  dup["experts"][1]["id"] = "e0";
  EXPECT_THROW(store.create(dup), Error);
  json neg = roster({1, -1, 1});
  EXPECT_THROW(store.create(neg), Error);
  json same = roster();
  same["alternatives"] = {"A", "A", "B", "C"};
  EXPECT_THROW(store.create(same), Error);
  EXPECT_TRUE(store.ids().empty());
}

TEST(Session, PassingFixtureConverges) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  store.submit_judgments(id, consistent_judgments(), std::nullopt);
  const auto out = store.evaluate(id);
  EXPECT_EQ(out["status"], "converged");
  const auto w = out["results"]["w"].get<std::vector<double>>();
  ASSERT_EQ(w.size(), 4u);
  EXPECT_NEAR(w[0], 0.4, 1e-12);
  EXPECT_NEAR(w[3], 0.1, 1e-12);
  EXPECT_TRUE(out["revision"].is_null());
  EXPECT_EQ(store.agreement(id)["K"], json({1.0, 1.0, 1.0, 1.0}));
}

TEST(Session, DisconnectedUnionIsIncomplete) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  store.submit_judgments(id, json{judgment("e0", 0, 1, 2), judgment("e1", 2, 3, 2)}, std::nullopt);
  const auto out = store.evaluate(id);
  EXPECT_EQ(out["status"], "incomplete");
  EXPECT_EQ(out["results"]["suggested_edges"], json({{0, 2}}));
  EXPECT_EQ(out["results"]["disconnected_experts"], json({"e0", "e1", "e2"}));
}

TEST(Session, JudgmentsAreNormalizedAndReplaced) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  store.submit_judgments(id, json{judgment("e0", 1, 0, 3, 5, "column")}, std::nullopt);
  auto doc = store.snapshot(id).document();
  ASSERT_EQ(doc["judgments"].size(), 1u);
  EXPECT_EQ(doc["judgments"][0], (json{{"expert", "e0"}, {"i", 0}, {"j", 1}, {"grade", 3.0}, {"scale_grades", 5}}));
  store.submit_judgments(id, json{judgment("e0", 1, 0, 2, 9)}, std::nullopt);
  doc = store.snapshot(id).document();
  ASSERT_EQ(doc["judgments"].size(), 1u);
  EXPECT_EQ(doc["judgments"][0]["i"], 1);
  EXPECT_EQ(doc["judgments"][0]["grade"], 2.0);
}

TEST(Session, JudgmentValidationLeavesStateUnchanged) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  const auto before = store.snapshot(id).document().dump();
  auto expect_kind = [&](const json& list, ErrorKind kind) {
    try {
      store.submit_judgments(id, list, std::nullopt);
      FAIL() << list.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), kind) << e.what();
    }
  };
  expect_kind(json{judgment("zz", 0, 1, 2)}, ErrorKind::not_found);
  expect_kind(json{judgment("e0", 0, 0, 2)}, ErrorKind::invalid_judgment);
  expect_kind(json{judgment("e0", 0, 9, 2)}, ErrorKind::invalid_judgment);
  expect_kind(json{judgment("e0", 0, 1, 8, 5)}, ErrorKind::invalid_judgment);
  expect_kind(json{judgment("e0", 0, 1, 2, 4)}, ErrorKind::invalid_judgment);
  expect_kind(json{judgment("e0", 0, 1, 2), judgment("e0", 1, 0, 2)}, ErrorKind::conflict);
  expect_kind(json{{{"expert", "e0"}, {"i", 0}}}, ErrorKind::parse);
  EXPECT_EQ(store.snapshot(id).document().dump(), before);
}

TEST(Session, RevisionRoundTrip) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  store.submit_judgments(id, disputed_judgments(), std::nullopt);
  auto out = store.evaluate(id);
  ASSERT_EQ(out["status"], "awaiting-revision");
  const auto req = store.revision_request(id);
  EXPECT_EQ(req, out["revision"]);
  const std::uint64_t version = out["version"];
  EXPECT_EQ(req["version"], version);

  // Wrong version: conflict, nothing changes.
  const auto before = store.snapshot(id).document().dump();
  try {
    store.respond_revision(id, json{{"request_id", req["request_id"]}, {"action", "accept"}, {"version", version + 5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::version_conflict);
  }
  try {
    store.respond_revision(id, json{{"request_id", 999}, {"action", "accept"}, {"version", version}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::version_conflict);
  }
  EXPECT_EQ(store.snapshot(id).document().dump(), before);

  out = store.respond_revision(id, json{{"request_id", req["request_id"]}, {"action", "accept"}, {"version", version}});
  EXPECT_EQ(out["round"], 1);
  const Session s = store.snapshot(id);
  const auto pcms = build_pcms(s.state.group.judgments, 4, 3, s.config().unified());
  const std::size_t k = s.expert_index(req["expert"].get<std::string>());
  EXPECT_NEAR(pcms[k].value(req["row"], req["column"]), req["suggested_value"].get<double>(), 1e-12);
}

TEST(Session, CompliantFacilitationConverges) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  store.submit_judgments(id, disputed_judgments(), std::nullopt);
  auto out = store.evaluate(id);
  int guard = 0;
  while (out["status"] == "awaiting-revision" && !out["revision"].is_null() && guard++ < 60) {
    out = store.respond_revision(id, json{{"request_id", out["revision"]["request_id"]},
                                          {"action", "accept"},
                                          {"version", out["version"]}});
  }
  EXPECT_EQ(out["status"], "converged");
}

TEST(Session, DeclinesRunIntoTheCap) {
  SessionStore store;
  json body = roster();
  body["config"] = {{"cap", 3}};
  const std::string id = store.create(body)["id"];
  store.submit_judgments(id, disputed_judgments(), std::nullopt);
  auto out = store.evaluate(id);
  for (int r = 0; r < 3; ++r) {
    ASSERT_EQ(out["status"], "awaiting-revision");
    out = store.respond_revision(id, json{{"request_id", out["revision"]["request_id"]},
                                          {"action", "decline"},
                                          {"version", out["version"]}});
  }
  EXPECT_EQ(out["status"], "capped");
  EXPECT_TRUE(out["revision"].is_null());
  EXPECT_THROW(store.revision_request(id), Error);
}

TEST(Session, ReplayReproducesTheDocument) {
  SessionStore store;
  const std::string id = store.create(roster({0.5, 0.3, 0.2}))["id"];
  store.submit_judgments(id, disputed_judgments(), std::nullopt);
  auto out = store.evaluate(id);
  out = store.respond_revision(id, json{{"request_id", out["revision"]["request_id"]},
                                        {"action", "value"}, {"value", 2.0}, {"scale_grades", 5},
                                        {"version", out["version"]}});
  out = store.respond_revision(id, json{{"request_id", out["revision"]["request_id"]},
                                        {"action", "decline"}, {"version", out["version"]}});
  const Session live = store.snapshot(id);
  const Session again = replay(live.events);
  EXPECT_EQ(again.document().dump(), live.document().dump());
  EXPECT_EQ(session_from_document(live.document()).document().dump(), live.document().dump());
}

TEST(Session, PersistsAndReloads) {
  TempDir dir;
  std::string id;
  std::string snapshot;
  {
    SessionStore store(dir.path);
    id = store.create(roster())["id"];
    store.submit_judgments(id, disputed_judgments(), std::nullopt);
    store.evaluate(id);
    snapshot = store.snapshot(id).document().dump();
  }
  EXPECT_TRUE(std::filesystem::exists(dir.path / (id + ".json")));
  EXPECT_TRUE(std::filesystem::exists(dir.path / (id + ".events.jsonl")));
  SessionStore reloaded(dir.path);
  EXPECT_EQ(reloaded.snapshot(id).document().dump(), snapshot);
  EXPECT_EQ(load_session_file(dir.path / (id + ".json")).document().dump(), snapshot);
  // The log holds one line per event.
  std::ifstream log(dir.path / (id + ".events.jsonl"));
  std::size_t lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  EXPECT_EQ(lines, 3u);
}

TEST(Session, ParseErrorsCarryLineContext) {
  try {
    parse_json_text("{\n  \"alternatives\": [\"A\",\n  ]\n}", "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("bad.json:3:"), std::string::npos) << e.what();
  }
}

TEST(Session, ConcurrentSessionsDoNotInterfere) {
  SessionStore store;
  std::vector<std::string> ids;
  for (int s = 0; s < 8; ++s) ids.push_back(store.create(roster())["id"]);
  std::vector<std::thread> workers;
  for (int s = 0; s < 8; ++s) {
    workers.emplace_back([&, s] {
      const json all = consistent_judgments();
      for (const auto& jd : all) store.submit_judgments(ids[s], json::array({jd}), std::nullopt);
      store.evaluate(ids[s]);
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& id : ids) {
    const Session s = store.snapshot(id);
    EXPECT_EQ(s.state.group.judgments.size(), 18u);
    EXPECT_EQ(s.status, SessionStatus::converged);
    EXPECT_EQ(s.version(), 19u);
  }
}

TEST(Session, ConcurrentWritesToOneSessionSerialize) {
  SessionStore store;
  const std::string id = store.create(roster())["id"];
  const json all = consistent_judgments();
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < 6; ++t)
    workers.emplace_back([&, t] {
      for (std::size_t k = t; k < all.size(); k += 6) store.submit_judgments(id, json::array({all[k]}), std::nullopt);
    });
  for (auto& t : workers) t.join();
  const Session s = store.snapshot(id);
  EXPECT_EQ(s.version(), all.size());
  EXPECT_EQ(replay(s.events).document().dump(), s.document().dump());
}
