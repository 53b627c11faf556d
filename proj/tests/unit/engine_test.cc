#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <sstream>
#include <vector>

#include "hopper/event_queue.h"
#include "hopper/rng.h"
#include "hopper/sim_time.h"

namespace hopper {
namespace {

TEST(SimTime, UnitsAndScaling) {
  EXPECT_EQ(microseconds(8).ns, 8000u);
  EXPECT_EQ(milliseconds(1.5).ns, 1'500'000u);
  EXPECT_EQ(scale(SimTime{10}, 0.25).ns, 3u);  // 2.5 rounds half up
  EXPECT_EQ(saturating_sub(SimTime{5}, SimTime{9}).ns, 0u);
  EXPECT_EQ((SimTime{7} + SimTime{3}).ns, 10u);
}

TEST(EventQueue, FirstScheduleOnEmptyQueue) {
  EventQueue q;
  const EventHandle h = q.schedule(SimTime{0}, EventKind::kTimer, 0);
  EXPECT_EQ(h.seq, 1u);
  EXPECT_EQ(q.size(), 1u);
}

TEST(EventQueue, TiesDispatchInInsertionOrder) {
  EventQueue q;
  q.schedule(SimTime{100}, EventKind::kTimer, 1);  // A
  q.schedule(SimTime{100}, EventKind::kTimer, 2);  // B
  std::vector<std::uint64_t> order;
  q.run_until(SimTime{1000}, [&](const Event& e) { order.push_back(e.target); });
  EXPECT_EQ(order, (std::vector<std::uint64_t>{1, 2}));
}

TEST(EventQueue, CancelledEventNeverFires) {
  EventQueue q;
  const EventHandle h = q.schedule(SimTime{50}, EventKind::kTimer, 7);
  q.schedule(SimTime{60}, EventKind::kTimer, 8);
  EXPECT_TRUE(q.pending(h));
  EXPECT_TRUE(q.cancel(h));
  EXPECT_EQ(q.size(), 1u);
  EXPECT_FALSE(q.cancel(h));  // double cancel is a no-op
  std::vector<std::uint64_t> fired;
  q.run_until(SimTime{100}, [&](const Event& e) { fired.push_back(e.target); });
  EXPECT_EQ(fired, (std::vector<std::uint64_t>{8}));
  EXPECT_FALSE(q.pending(h));
}

TEST(EventQueue, RunUntilOnEmptyQueueAdvancesClock) {
  EventQueue q;
  EXPECT_EQ(q.run_until(milliseconds(1), [](const Event&) {}), 0u);
  EXPECT_EQ(q.now(), milliseconds(1));
}

TEST(EventQueue, RunUntilStopsAtHorizon) {
  EventQueue q;
  for (std::uint64_t t : {10, 20, 30}) q.schedule(SimTime{t}, EventKind::kTimer, t);
  EXPECT_EQ(q.run_until(SimTime{25}, [](const Event&) {}), 2u);
  EXPECT_EQ(q.now(), SimTime{20});
  EXPECT_EQ(q.size(), 1u);
}

TEST(EventQueue, SchedulingInThePastIsFatal) {
  EventQueue q;
  q.schedule(SimTime{100}, EventKind::kTimer, 0);
  q.run_until(SimTime{100}, [](const Event&) {});
  EXPECT_THROW(q.schedule(SimTime{99}, EventKind::kTimer, 0), SimulationError);
  EXPECT_THROW(q.run_until(SimTime{50}, [](const Event&) {}), SimulationError);
}

TEST(EventQueue, HandlerMayScheduleAtCurrentTime) {
  EventQueue q;
  q.schedule(SimTime{5}, EventKind::kTimer, 0);
  std::vector<std::uint64_t> seen;
  q.run_until(SimTime{10}, [&](const Event& e) {
    seen.push_back(e.target);
    if (e.target < 3) q.schedule(q.now(), EventKind::kTimer, e.target + 1);
  });
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{0, 1, 2, 3}));
}

TEST(EventQueue, TraceLineFormat) {
  EventQueue q;
  std::ostringstream out;
  q.set_trace(&out);
  q.schedule(SimTime{42}, EventKind::kPacketArrival, 9);
  q.run_until(SimTime{42}, [](const Event&) {});
  EXPECT_EQ(out.str(), "42\t1\tpacket_arrival\t9\n");
  ASSERT_EQ(q.trace_tail().size(), 1u);
  EXPECT_EQ(q.trace_tail()[0].target, 9u);
}

// Random schedules with cancellations: dispatch order is (fire_at, seq),
// the clock never decreases and cancelled events never fire.
TEST(EventQueueProperty, OrderMonotonicityAndCancellation) {
  RngStream rng("test", 12345);
  for (int trial = 0; trial < 50; ++trial) {
    EventQueue q;
    std::vector<EventHandle> handles;
    std::vector<bool> cancelled;
    for (int i = 0; i < 300; ++i) {
      handles.push_back(q.schedule(SimTime{rng.uniform_int(1000)}, EventKind::kTimer,
                                   static_cast<std::uint64_t>(i)));
      cancelled.push_back(false);
    }
    for (int i = 0; i < 60; ++i) {
      const std::size_t k = rng.uniform_int(handles.size());
      q.cancel(handles[k]);
      cancelled[k] = true;
    }
    SimTime last;
    std::uint64_t last_seq = 0;
    q.run_until(SimTime{2000}, [&](const Event& e) {
      EXPECT_FALSE(cancelled[e.target]);
      EXPECT_GE(e.fire_at, last);
      if (e.fire_at == last) EXPECT_GT(e.seq, last_seq);
      last = e.fire_at;
      last_seq = e.seq;
    });
    EXPECT_TRUE(q.empty());
  }
}

std::uint64_t digest_of_random_run(std::uint64_t seed) {
  RngStream rng("digest", seed);
  EventQueue q;
  for (int i = 0; i < 100; ++i) {
    q.schedule(SimTime{rng.uniform_int(500)}, EventKind::kTimer, rng.uniform_int(10));
  }
  q.run_until(SimTime{1000}, [&](const Event& e) {
    if (e.target % 3 == 0 && q.now().ns < 900) {
      q.schedule(q.now() + SimTime{rng.uniform_int(50)}, EventKind::kLinkDrain, e.target + 1);
    }
  });
  return q.digest();
}

TEST(EventQueue, IdenticalRunsGiveIdenticalDigests) {
  EXPECT_EQ(digest_of_random_run(7), digest_of_random_run(7));
  EXPECT_NE(digest_of_random_run(7), digest_of_random_run(8));
}

TEST(Rng, SameSeedAndLabelReplay) {
  RngRegistry a(99);
  RngRegistry b(99);
  RngStream x = a.fork("workload");
  RngStream y = b.fork("workload");
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(x.next_u64(), y.next_u64());
}

TEST(Rng, DistinctLabelsGiveDistinctStreams) {
  RngRegistry r(99);
  RngStream w = r.fork("workload");
  RngStream p = r.fork("probe");
  int equal = 0;
  double mean_w = 0.0;
  double mean_p = 0.0;
  double cov = 0.0;
  std::vector<double> uw;
  std::vector<double> up;
  for (int i = 0; i < 10000; ++i) {
    uw.push_back(w.uniform());
    up.push_back(p.uniform());
    if (uw.back() == up.back()) ++equal;
    mean_w += uw.back();
    mean_p += up.back();
  }
  mean_w /= 1e4;
  mean_p /= 1e4;
  for (int i = 0; i < 10000; ++i) cov += (uw[i] - mean_w) * (up[i] - mean_p);
  const double corr = cov / 1e4 / (1.0 / 12.0);
  EXPECT_EQ(equal, 0);
  EXPECT_LT(std::abs(corr), 0.05);
}

TEST(Rng, DuplicateLabelIsAConfigError) {
  RngRegistry r(1);
  r.fork("ecn");
  EXPECT_THROW(r.fork("ecn"), ConfigError);
}

TEST(Rng, InterleavingDoesNotPerturbStreams) {
  RngRegistry alone(5);
  RngStream a1 = alone.fork("a");
  std::vector<std::uint64_t> solo;
  for (int i = 0; i < 200; ++i) solo.push_back(a1.next_u64());

  RngRegistry mixed(5);
  RngStream a2 = mixed.fork("a");
  RngStream b2 = mixed.fork("b");
  for (int i = 0; i < 200; ++i) {
    b2.next_u64();
    ASSERT_EQ(a2.next_u64(), solo[static_cast<std::size_t>(i)]);
    b2.uniform();
  }
}

TEST(Rng, UniformIntBoundsAndCoverage) {
  RngStream r("u", 3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.uniform_int(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
  EXPECT_THROW(r.uniform_int(0), std::invalid_argument);
}

TEST(Rng, ExponentialMean) {
  RngStream r("exp", 11);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += r.exponential(4.0);
  EXPECT_NEAR(sum / 1e5, 0.25, 0.005);
}

TEST(Rng, StreamSeedDependsOnBothInputs) {
  EXPECT_EQ(derive_stream_seed(1, "x"), derive_stream_seed(1, "x"));
  EXPECT_NE(derive_stream_seed(1, "x"), derive_stream_seed(2, "x"));
  EXPECT_NE(derive_stream_seed(1, "x"), derive_stream_seed(1, "y"));
}

}  // namespace
}  // namespace hopper
