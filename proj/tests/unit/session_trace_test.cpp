#include <random>

#include <gtest/gtest.h>
#include <visloop/errors.hpp>
#include <visloop/trace_io.hpp>

#include "support.hpp"

namespace visloop {
namespace {

using nlohmann::json;

TEST(Message, RequiresParts) {
  EXPECT_THROW(Message(Role::User, {}), InvariantError);
  Message m(Role::User, {ContentPart::text("a"), ContentPart::image(ImageBlob::solid(2, 2, 0, 0, 0)),
                         ContentPart::text("b")});
  EXPECT_EQ(m.joined_text(), "ab");
  EXPECT_EQ(m.image_count(), 1u);
}

TEST(EnumStrings, RoundTrip) {
  for (auto s : {ExecStatus::Ok, ExecStatus::Error, ExecStatus::Timeout, ExecStatus::KernelCrashed}) {
    EXPECT_EQ(exec_status_from_string(to_string(s)), s);
  }
  for (auto t : {Termination::Answered, Termination::MaxTurnsExceeded, Termination::Unanswered, Termination::Fault}) {
    EXPECT_EQ(termination_from_string(to_string(t)), t);
  }
  for (auto r : {Role::System, Role::User, Role::Assistant}) EXPECT_EQ(role_from_string(to_string(r)), r);
  EXPECT_THROW(exec_status_from_string("fine"), SchemaError);
  EXPECT_EQ(restart_policy_from_string("fail_session"), RestartPolicy::FailSession);
}

TEST(ExecResult, Invariants) {
  ExecResult ok;
  ok.error = "boom";
  EXPECT_THROW(ok.validate(), InvariantError);

  ExecResult timeout;
  timeout.status = ExecStatus::Timeout;
  timeout.error = "killed";
  timeout.wall_time = 0.5;
  EXPECT_THROW(timeout.validate(Seconds{1.0}), InvariantError);
  timeout.wall_time = 1.01;
  EXPECT_NO_THROW(timeout.validate(Seconds{1.0}));
}

TEST(Turn, ResultCountAndClueMustMatchBlocks) {
  Turn t;
  t.code_blocks = {"print(1)"};
  EXPECT_THROW(t.validate(), InvariantError);
  t.exec_results.emplace_back();
  EXPECT_THROW(t.validate(), InvariantError);
  t.clue_message = Message::text(Role::User, "<interpreter>1\n</interpreter>");
  EXPECT_NO_THROW(t.validate());
  Turn plain;
  plain.clue_message = Message::text(Role::User, "x");
  EXPECT_THROW(plain.validate(), InvariantError);
}

TEST(SessionTrace, AnswerPresentExactlyWhenAnswered) {
  SessionTrace t;
  t.termination = Termination::Answered;
  EXPECT_THROW(t.validate(), InvariantError);
  t.final_answer = "4";
  EXPECT_NO_THROW(t.validate());
  t.termination = Termination::Fault;
  EXPECT_THROW(t.validate(), InvariantError);
}

TEST(SessionTrace, TurnIndicesSequential) {
  SessionTrace t;
  t.turns.resize(2);
  t.turns[0].index = 0;
  t.turns[1].index = 2;
  EXPECT_THROW(t.validate(), InvariantError);
}

TEST(SessionConfig, Validate) {
  SessionConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_turns = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.exec_timeout = Seconds{0};
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.temperature = 2.5;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(TraceIo, RandomTracesRoundTripByteEqual) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const SessionTrace t = testing::random_trace(rng);
    const std::string doc = serialize_trace(t);
    const SessionTrace back = deserialize_trace(doc);
    ASSERT_EQ(back, t) << doc;
    ASSERT_EQ(serialize_trace(back), doc);
  }
}

TEST(TraceIo, DocumentShape) {
  std::mt19937_64 rng(3);
  SessionTrace t;
  while (t.turns.empty() || t.turns[0].code_blocks.empty()) t = testing::random_trace(rng);
  const json doc = json::parse(serialize_trace(t));
  EXPECT_EQ(doc["schema"], "visloop.trace");
  EXPECT_EQ(doc["schema_version"], kTraceSchemaVersion);
  for (const char* key : {"trace_id", "benchmark_id", "query", "images", "turns", "final_answer", "termination",
                          "faults", "config"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  const json& turn = doc["turns"][0];
  EXPECT_TRUE(turn["exec_results"][0].contains("wall_time"));
  EXPECT_EQ(turn["clue_message"]["role"], "user");
  EXPECT_EQ(turn["clue_message"]["parts"][0]["type"], "text");
}

TEST(TraceIo, TimingCanBeOmitted) {
  std::mt19937_64 rng(5);
  SessionTrace t;
  while (t.turns.empty() || t.turns[0].code_blocks.empty()) t = testing::random_trace(rng);
  const std::string doc = serialize_trace(t, {.include_timing = false, .indent = -1});
  EXPECT_EQ(doc.find("wall_time"), std::string::npos);
  EXPECT_EQ(doc.find('\n'), std::string::npos);
  const SessionTrace back = deserialize_trace(doc);
  EXPECT_EQ(back.turns[0].exec_results[0].wall_time, 0.0);
}

TEST(TraceIo, RejectsBadDocuments) {
  EXPECT_THROW(deserialize_trace("not json"), SchemaError);
  EXPECT_THROW(deserialize_trace("{}"), SchemaError);
  std::mt19937_64 rng(9);
  json doc = json::parse(serialize_trace(testing::random_trace(rng)));
  doc["schema_version"] = 99;
  EXPECT_THROW(deserialize_trace(doc.dump()), SchemaError);
  doc["schema_version"] = kTraceSchemaVersion;
  doc["termination"] = "answered";
  doc["final_answer"] = nullptr;
  EXPECT_THROW(deserialize_trace(doc.dump()), InvariantError);
}

TEST(TraceIo, ImageDimensionsChecked) {
  Message m(Role::User, {ContentPart::image(ImageBlob::solid(3, 2, 0, 0, 0))});
  json j = message_to_json(m);
  EXPECT_EQ(message_from_json(j), m);
  j["parts"][0]["width"] = 4;
  EXPECT_THROW(message_from_json(j), Error);
}

TEST(TraceIo, DumpReplacesInvalidUtf8) {
  const json j = std::string("a\xff" "b");
  EXPECT_NO_THROW(dump_json(j));
}

TEST(TraceIo, FileRoundTrip) {
  testing::TempDir dir;
  std::mt19937_64 rng(1);
  const SessionTrace t = testing::random_trace(rng);
  write_trace_file(dir / "sub/t.json", t);
  EXPECT_EQ(read_trace_file(dir / "sub/t.json"), t);
}

}  // namespace
}  // namespace visloop
