#include <random>
#include <set>

#include <gtest/gtest.h>
#include <visloop/errors.hpp>
#include <visloop/supervisor.hpp>

#include "support.hpp"

namespace visloop {
namespace {

SupervisorConfig mock(std::vector<std::string> extra = {}) {
  SupervisorConfig c;
  c.command = testing::mock_command(std::move(extra));
  c.startup_timeout = Seconds{5};
  c.shutdown_grace = Seconds{1};
  return c;
}

const Seconds kTimeout{5};

TEST(Supervisor, HandshakeAndPersistentState) {
  auto k = KernelSupervisor::spawn(mock());
  EXPECT_EQ(k->kernel_meta().value("kernel", ""), "mock");
  EXPECT_EQ(k->generation(), 0);
  k->init_images({ImageBlob::solid(4, 3, 0, 0, 0)});
  EXPECT_EQ(k->images_injected(), 1u);
  EXPECT_THROW(k->init_images({}), UsageError);
  EXPECT_EQ(k->exec("x = 41", kTimeout).status, ExecStatus::Ok);
  const auto r = k->exec("print(x + 1, image_clue_0.size)", kTimeout);
  EXPECT_EQ(r.stdout_text, "42 (4, 3)\n");
  EXPECT_TRUE(r.error.empty());
  EXPECT_GE(r.wall_time, 0.0);
}

TEST(Supervisor, ExceptionIsAnErrorResultNotACrash) {
  auto k = KernelSupervisor::spawn(mock());
  const auto r = k->exec("print('before')\nraise ValueError('boom')", kTimeout);
  EXPECT_EQ(r.status, ExecStatus::Error);
  EXPECT_EQ(r.stdout_text, "before\n");
  EXPECT_NE(r.error.find("ValueError: boom"), std::string::npos);
  EXPECT_EQ(k->generation(), 0);
  EXPECT_TRUE(k->alive());
}

TEST(Supervisor, FiguresComeBackAsImages) {
  auto k = KernelSupervisor::spawn(mock());
  k->init_images({ImageBlob::solid(20, 10, 9, 9, 9)});
  const auto r = k->exec("import matplotlib.pyplot as plt\nplt.imshow(image_clue_0.crop((0, 0, 5, 5)))\nplt.show()",
                         kTimeout);
  ASSERT_EQ(r.status, ExecStatus::Ok) << r.error;
  ASSERT_EQ(r.images.size(), 1u);
  EXPECT_EQ(r.images[0].width(), 5u);
}

TEST(Supervisor, CrashRestartsWithNewGenerationAndReinjectsImages) {
  auto k = KernelSupervisor::spawn(mock({"--crash-on-exec", "2"}));
  k->init_images({ImageBlob::solid(7, 5, 0, 0, 0)});
  k->exec("y = 1", kTimeout);
  const pid_t old_pid = k->pid();
  const auto r = k->exec("print(y)", kTimeout);
  EXPECT_EQ(r.status, ExecStatus::KernelCrashed);
  EXPECT_NE(r.error.find("exit code 3"), std::string::npos);
  EXPECT_NE(r.error.find("restarted"), std::string::npos);
  EXPECT_EQ(k->generation(), 1);
  EXPECT_NE(k->pid(), old_pid);
  // The restart re-sent the images, so the crashed exec is not the last exchange.
  const auto& ex = k->exchanges();
  ASSERT_GE(ex.size(), 2u);
  EXPECT_EQ(ex[ex.size() - 2].origin, ResultOrigin::SynthesizedCrash);
  EXPECT_EQ(ex.back().request, protocol::FrameKind::Init);
  // State is gone, images are back.
  const auto after = k->exec("print(image_clue_0.size)\nprint(y)", kTimeout);
  EXPECT_EQ(after.status, ExecStatus::Error);
  EXPECT_EQ(after.stdout_text, "(7, 5)\n");
  EXPECT_NE(after.error.find("NameError"), std::string::npos);
}

TEST(Supervisor, FailSessionLeavesKernelDead) {
  auto cfg = mock({"--crash-on-exec", "1"});
  cfg.restart_policy = RestartPolicy::FailSession;
  auto k = KernelSupervisor::spawn(cfg);
  const auto r = k->exec("print(1)", kTimeout);
  EXPECT_EQ(r.status, ExecStatus::KernelCrashed);
  EXPECT_NE(r.error.find("not restarted"), std::string::npos);
  EXPECT_EQ(k->generation(), 0);
  EXPECT_THROW(k->exec("print(1)", kTimeout), KernelCrashed);
}

TEST(Supervisor, TimeoutKillsAndReturnsPromptly) {
  auto k = KernelSupervisor::spawn(mock());
  const auto start = Clock::now();
  const auto r = k->exec("import time\ntime.sleep(30)", Seconds{1});
  const double took = Seconds(Clock::now() - start).count();
  EXPECT_EQ(r.status, ExecStatus::Timeout);
  EXPECT_LT(took, 1.5);
  EXPECT_NO_THROW(r.validate(Seconds{1}));
  EXPECT_EQ(k->generation(), 1);
  EXPECT_EQ(k->exec("print('back')", kTimeout).stdout_text, "back\n");
}

TEST(Supervisor, DroppedResultIsATimeout) {
  auto k = KernelSupervisor::spawn(mock({"--drop-result-on-exec", "1"}));
  EXPECT_EQ(k->exec("print(1)", Seconds{0.3}).status, ExecStatus::Timeout);
  EXPECT_EQ(k->exchanges().back().origin, ResultOrigin::SynthesizedTimeout);
}

TEST(Supervisor, MismatchedIdIsAProtocolViolation) {
  auto k = KernelSupervisor::spawn(mock({"--wrong-result-ids"}));
  EXPECT_THROW(k->exec("print(1)", kTimeout), ProtocolError);
  EXPECT_EQ(k->exchanges().back().origin, ResultOrigin::ProtocolViolation);
  // The next call starts a fresh kernel.
  EXPECT_THROW(k->exec("print(1)", kTimeout), ProtocolError);
  EXPECT_EQ(k->generation(), 1);
}

TEST(Supervisor, GarbageReplyIsAProtocolViolation) {
  auto k = KernelSupervisor::spawn(mock({"--emit-garbage-on-exec", "1"}));
  EXPECT_THROW(k->exec("print(1)", kTimeout), ProtocolError);
}

TEST(Supervisor, HandshakeFailures) {
  EXPECT_THROW(KernelSupervisor::spawn(mock({"--protocol-version", "2"})), SpawnError);
  auto slow = mock({"--startup-delay-ms", "2000"});
  slow.startup_timeout = Seconds{0.3};
  EXPECT_THROW(KernelSupervisor::spawn(slow), HandshakeTimeout);
  auto silent = mock({"--no-handshake"});
  silent.startup_timeout = Seconds{0.3};
  EXPECT_THROW(KernelSupervisor::spawn(silent), HandshakeTimeout);
  SupervisorConfig none;
  EXPECT_THROW(KernelSupervisor::spawn(none), UsageError);
  SupervisorConfig missing;
  missing.command = {"/no/such/kernel"};
  EXPECT_THROW(KernelSupervisor::spawn(missing), SpawnError);
}

TEST(Supervisor, ShutdownIsIdempotent) {
  auto k = KernelSupervisor::spawn(mock());
  k->shutdown();
  k->shutdown();
  EXPECT_THROW(k->exec("print(1)", kTimeout), UsageError);
}

TEST(Supervisor, EveryExecPairedUnderRandomFaults) {
  std::mt19937_64 rng(5);
  for (int round = 0; round < 5; ++round) {
    const int crash_at = 1 + static_cast<int>(rng() % 10);
    auto k = KernelSupervisor::spawn(mock({"--crash-on-exec", std::to_string(crash_at)}));
    std::size_t calls = 0;
    for (int i = 0; i < 20; ++i) {
      const auto r = k->exec(rng() % 4 == 0 ? "raise KeyError('k')" : "print(" + std::to_string(i) + ")", kTimeout);
      ++calls;
      EXPECT_NE(r.status, ExecStatus::Timeout);
    }
    std::set<std::uint64_t> ids;
    for (const auto& e : k->exchanges()) {
      if (e.request != protocol::FrameKind::Exec) continue;
      EXPECT_TRUE(ids.insert(e.id).second);
    }
    EXPECT_EQ(ids.size(), calls);
    EXPECT_EQ(k->exec_frames_sent(), calls);
    EXPECT_GE(k->generation(), 1);
  }
}

TEST(Supervisor, Factory) {
  auto factory = supervisor_factory(mock());
  auto k = factory();
  EXPECT_EQ(k->exec("print(2 ** 10)", kTimeout).stdout_text, "1024\n");
  EXPECT_THROW(supervisor_factory(SupervisorConfig{}), UsageError);
}

}  // namespace
}  // namespace visloop
