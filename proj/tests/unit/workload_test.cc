#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hopper/errors.h"
#include "hopper/rng.h"
#include "hopper/topology.h"
#include "hopper/workload.h"

namespace hopper {
namespace {

Topology acceptance_fabric() {
  return build_leaf_spine(32, 4, 4, LinkTemplate{}, LinkTemplate{});
}

WorkloadSpec poisson(SizeCdf cdf, double load, SimTime duration) {
  WorkloadSpec w;
  w.mode = WorkloadMode::kPoisson;
  w.cdf = std::move(cdf);
  w.target_load = load;
  w.duration = duration;
  return w;
}

TEST(SizeCdf, DegenerateAlwaysSameSize) {
  const SizeCdf c("one", {{1'000'000, 1.0}});
  RngStream rng("workload", 1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(c.sample(rng), 1'000'000u);
  EXPECT_DOUBLE_EQ(c.mean_bytes(), 1e6);
}

TEST(SizeCdf, TwoPointSplit) {
  const SizeCdf c("two", {{1000, 0.5}, {1'000'000, 1.0}});
  RngStream rng("workload", 2);
  int small = 0;
  for (int i = 0; i < 100'000; ++i) small += c.sample(rng) == 1000 ? 1 : 0;
  EXPECT_NEAR(small / 1e5, 0.5, 0.02);
}

TEST(SizeCdf, SampleMeanMatchesAnalyticMean) {
  for (const std::string& name : builtin_cdf_names()) {
    const SizeCdf c = builtin_cdf(name);
    double analytic = 0.0;
    double prev = 0.0;
    for (const CdfPoint& p : c.points()) {
      analytic += (p.cum_prob - prev) * static_cast<double>(p.size_bytes);
      prev = p.cum_prob;
    }
    EXPECT_NEAR(c.mean_bytes(), analytic, 1e-6 * analytic) << name;
    RngStream rng("workload", 3);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(c.sample(rng));
    EXPECT_NEAR(sum / n, analytic, 0.01 * analytic) << name;
  }
}

TEST(SizeCdf, RejectsMalformedPoints) {
  EXPECT_THROW(SizeCdf("x", {}), ConfigError);
  EXPECT_THROW(SizeCdf("x", {{1000, 0.5}}), ConfigError);
  EXPECT_THROW(SizeCdf("x", {{1000, 0.5}, {500, 1.0}}), ConfigError);
  EXPECT_THROW(SizeCdf("x", {{1000, 0.6}, {2000, 0.6}, {3000, 1.0}}), ConfigError);
  EXPECT_THROW(builtin_cdf("meta"), ConfigError);
}

TEST(SizeCdf, CsvRoundTrip) {
  std::istringstream in("size_bytes,cum_prob\n1000,0.25\n5000,1\n");
  const SizeCdf c = parse_cdf_csv(in, "inline");
  ASSERT_EQ(c.points().size(), 2u);
  EXPECT_EQ(c.points()[1].size_bytes, 5000u);
  std::ostringstream out;
  write_cdf_csv(out, c);
  std::istringstream back(out.str());
  const SizeCdf d = parse_cdf_csv(back, "back");
  EXPECT_EQ(d.points().size(), 2u);
  EXPECT_DOUBLE_EQ(d.points()[0].cum_prob, 0.25);
  std::istringstream bad("size_bytes,cum_prob\n1000;0.25\n");
  EXPECT_THROW(parse_cdf_csv(bad, "bad"), ConfigError);
}

TEST(SizeCdf, ShippedFilesMatchBuiltins) {
  for (const std::string& name : builtin_cdf_names()) {
    const SizeCdf file = load_cdf_csv(std::string(HOPPER_SOURCE_DIR) + "/data/cdf/" + name + ".csv");
    const SizeCdf builtin = builtin_cdf(name);
    ASSERT_EQ(file.points().size(), builtin.points().size()) << name;
    for (std::size_t i = 0; i < file.points().size(); ++i) {
      EXPECT_EQ(file.points()[i].size_bytes, builtin.points()[i].size_bytes);
      EXPECT_DOUBLE_EQ(file.points()[i].cum_prob, builtin.points()[i].cum_prob);
    }
  }
}

TEST(Poisson, ArrivalRateArithmetic) {
  const Topology t = acceptance_fabric();
  const WorkloadSpec w = poisson(SizeCdf("mb", {{1'000'000, 1.0}}), 0.5, milliseconds(1));
  // 32 x 100 Gbps x 0.5 / (8 x 1 MB)
  EXPECT_DOUBLE_EQ(arrival_rate(w, t), 200'000.0);
}

TEST(Poisson, OfferedLoadWithinFivePercent) {
  const Topology t = acceptance_fabric();
  for (const std::string& name : builtin_cdf_names()) {
    const SizeCdf cdf = builtin_cdf(name);
    // Long enough for about 200k flows with the heaviest tail.
    const double per_s = 0.5 * 32 * 1e11 / (8.0 * cdf.mean_bytes());
    const SimTime duration{static_cast<std::uint64_t>(2e5 / per_s * 1e9)};
    const WorkloadSpec w = poisson(cdf, 0.5, duration);
    RngStream rng("workload", 4);
    const auto flows = generate_poisson_arrivals(w, t, rng);
    double bytes = 0.0;
    for (const FlowSpec& f : flows) bytes += static_cast<double>(f.size_bytes);
    const double capacity = 32 * 1e11 / 8.0 * static_cast<double>(duration.ns) / 1e9;
    EXPECT_NEAR(bytes / capacity, 0.5, 0.025) << name;
  }
}

TEST(Poisson, PairsDistinctAndReproducible) {
  const Topology t = acceptance_fabric();
  const WorkloadSpec w = poisson(builtin_cdf("hadoop"), 0.5, milliseconds(1));
  RngStream a("workload", 5);
  RngStream b("workload", 5);
  const auto fa = generate_poisson_arrivals(w, t, a);
  const auto fb = generate_poisson_arrivals(w, t, b);
  ASSERT_EQ(fa.size(), fb.size());
  ASSERT_FALSE(fa.empty());
  SimTime last;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_NE(fa[i].src, fa[i].dst);
    EXPECT_LT(fa[i].dst, 32u);
    EXPECT_GE(fa[i].start, last);
    EXPECT_LT(fa[i].start, w.duration);
    last = fa[i].start;
    EXPECT_EQ(fa[i].src, fb[i].src);
    EXPECT_EQ(fa[i].dst, fb[i].dst);
    EXPECT_EQ(fa[i].size_bytes, fb[i].size_bytes);
    EXPECT_EQ(fa[i].start, fb[i].start);
  }
}

TEST(Poisson, CrossLeafOnly) {
  const Topology t = acceptance_fabric();
  WorkloadSpec w = poisson(builtin_cdf("hadoop"), 0.5, milliseconds(1));
  w.cross_leaf_only = true;
  RngStream rng("workload", 6);
  std::set<HostId> dsts;
  for (const FlowSpec& f : generate_poisson_arrivals(w, t, rng)) {
    EXPECT_FALSE(t.same_leaf(f.src, f.dst));
    dsts.insert(f.dst);
  }
  EXPECT_EQ(dsts.size(), 32u);
}

TEST(Poisson, TinyLoadGivesEmptySchedule) {
  const Topology t = acceptance_fabric();
  const WorkloadSpec w = poisson(SizeCdf("big", {{100'000'000, 1.0}}), 1e-9, microseconds(10));
  RngStream rng("workload", 7);
  EXPECT_TRUE(generate_poisson_arrivals(w, t, rng).empty());
}

TEST(Workload, ValidationErrors) {
  WorkloadSpec w = poisson(builtin_cdf("hadoop"), 1.0, milliseconds(1));
  EXPECT_THROW(w.validate(), ConfigError);
  w.target_load = 0.0;
  EXPECT_THROW(w.validate(), ConfigError);
  w.target_load = 0.5;
  w.cdf.reset();
  EXPECT_THROW(w.validate(), ConfigError);
  WorkloadSpec c;
  c.mode = WorkloadMode::kCollective;
  c.collective.rounds = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.collective.rounds = 1;
  c.collective.chunk_bytes = c.collective.flow_bytes + 1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Collective, TestbedScheduleHas204Flows) {
  const Topology t = build_asymmetric_testbed();
  WorkloadSpec w;
  w.mode = WorkloadMode::kCollective;
  const CollectiveSchedule s = generate_collective_rounds(w, t);
  EXPECT_EQ(s.rounds.size(), 51u);
  EXPECT_EQ(s.total_flows(), 204u);
  std::set<FlowId> ids;
  for (const auto& round : s.rounds) {
    ASSERT_EQ(round.size(), 4u);
    for (std::size_t j = 0; j < round.size(); ++j) {
      EXPECT_EQ(round[j].src, j);
      EXPECT_EQ(round[j].dst, j + 4);
      EXPECT_FALSE(t.same_leaf(round[j].src, round[j].dst));
      EXPECT_EQ(round[j].size_bytes, 10'000'000u);
      EXPECT_EQ(round[j].chunk_bytes, 1'000'000u);
      ids.insert(round[j].id);
    }
  }
  EXPECT_EQ(ids.size(), 204u);
}

TEST(Collective, DegenerateAndOversized) {
  const Topology t = build_asymmetric_testbed();
  WorkloadSpec w;
  w.mode = WorkloadMode::kCollective;
  w.collective.rounds = 1;
  w.collective.flows_per_round = 1;
  EXPECT_EQ(generate_collective_rounds(w, t).total_flows(), 1u);
  w.collective.flows_per_round = 5;
  EXPECT_THROW(generate_collective_rounds(w, t), ConfigError);
}

}  // namespace
}  // namespace hopper
