#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "ksdiag/bootstrap.hpp"
#include "ksdiag/error.hpp"
#include "ksdiag/ks.hpp"
#include "ksdiag/rng.hpp"
#include "ksdiag/simgen.hpp"
#include "oracles.hpp"

using namespace ksdiag;

namespace {

PeriodSample small_sample() {
  return PeriodSample(Period::Reference, {{0.1, 0, "A", {}}, {0.4, 0, "A", {}}, {0.2, 0, "B", {}},
                                          {0.8, 1, "A", {}}, {0.3, 1, "B", {}}});
}

PeriodSample null_period(Period p, std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  return oracle::random_sample(gen, p, n, {"A"}, {1.0}, {1.5});
}

// Type-7 quantile straight from the definition.
double quantile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("stratified_resample: singleton classes are forced") {
  const PeriodSample s(Period::Current, {{0.3, 0, "A", {}}, {0.7, 1, "B", {}}});
  Rng rng(1, Stream::Test);
  for (int i = 0; i < 50; ++i) {
    const PeriodSample r = stratified_resample(s, rng);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == s[0]);
    CHECK(r[1] == s[1]);
  }
}

TEST_CASE("stratified_resample: class counts preserved, rows drawn from own class") {
  const PeriodSample s = small_sample();
  Rng rng(2, Stream::Test);
  for (int i = 0; i < 1000; ++i) {
    const PeriodSample r = stratified_resample(s, rng);
    CHECK(class_counts(r) == ClassCounts{3, 2});
    for (const Observation& o : r.observations()) {
      CHECK(std::find(s.observations().begin(), s.observations().end(), o) !=
            s.observations().end());
    }
  }
}

TEST_CASE("stratified_resample: same seed, same sequence") {
  const PeriodSample s = small_sample();
  Rng a(9, Stream::Bootstrap, 4);
  Rng b(9, Stream::Bootstrap, 4);
  for (int i = 0; i < 20; ++i) {
    const PeriodSample ra = stratified_resample(s, a);
    const PeriodSample rb = stratified_resample(s, b);
    CHECK(std::equal(ra.observations().begin(), ra.observations().end(),
                     rb.observations().begin(), rb.observations().end()));
  }
}

TEST_CASE("bootstrap_distribution equals resample-then-KS for every replicate") {
  const PeriodSample ref = null_period(Period::Reference, 21, 300);
  const PeriodSample cur = null_period(Period::Current, 22, 250);
  GovernanceConfig config;
  config.seed = 17;
  config.bootstrap_replicates = 40;
  const BootstrapDistribution fast = bootstrap_distribution(ref, cur, config);
  REQUIRE(fast.values.size() == 40);
  for (std::size_t b = 0; b < 40; ++b) {
    Rng rng(config.seed, Stream::Bootstrap, b);
    const PeriodSample rr = stratified_resample(ref, rng);
    const PeriodSample rc = stratified_resample(cur, rng);
    const double slow = pct_change(ks_of_sample(WeightedSample(rr)).value,
                                   ks_of_sample(WeightedSample(rc)).value);
    CHECK(fast.values[b] == slow);
  }
}

TEST_CASE("bootstrap_distribution: boundaries and null centring") {
  const PeriodSample ref = null_period(Period::Reference, 31, 2000);
  GovernanceConfig config;
  config.seed = 3;
  config.bootstrap_replicates = 1;
  CHECK(bootstrap_distribution(ref, ref, config).values.size() == 1);

  config.bootstrap_replicates = 200;
  const auto d = bootstrap_distribution(ref, ref, config);
  const double mean = std::accumulate(d.values.begin(), d.values.end(), 0.0) / 200.0;
  CHECK(std::fabs(mean) <= 0.05);
}

TEST_CASE("bootstrap_distribution: independent of thread count") {
  const PeriodSample ref = null_period(Period::Reference, 41, 800);
  const PeriodSample cur = null_period(Period::Current, 42, 800);
  GovernanceConfig config;
  config.seed = 5;
  config.bootstrap_replicates = 120;
  config.parallelism = 1;
  const auto one = bootstrap_distribution(ref, cur, config);
  config.parallelism = 7;
  const auto seven = bootstrap_distribution(ref, cur, config);
  CHECK(one.values == seven.values);
}

TEST_CASE("bootstrap: large drop puts every replicate below tau") {
  const GeneratedPair pair = generate(builtin_scenario(ScenarioId::Step1Case4, 0));
  GovernanceConfig config;
  config.bootstrap_replicates = 300;
  const auto d = bootstrap_distribution(pair.ref, pair.cur, config);
  CHECK(std::all_of(d.values.begin(), d.values.end(), [](double v) { return v < -0.20; }));
}

TEST_CASE("percentile_ci and the quantile rule") {
  std::vector<double> grid(100);
  std::iota(grid.begin(), grid.end(), 1.0);
  const auto [lo, hi] = percentile_ci(grid, 0.05);
  CHECK(lo == doctest::Approx(3.475).epsilon(1e-12));
  CHECK(hi == doctest::Approx(97.525).epsilon(1e-12));

  std::vector<double> constant(17, 0.25);
  CHECK(percentile_ci(constant, 0.1) == std::pair(0.25, 0.25));
  std::vector<double> single = {-0.3};
  CHECK(percentile_ci(single, 0.5) == std::pair(-0.3, -0.3));

  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + t * 7);
    for (double& x : v) x = z(gen);
    const auto [l, h] = percentile_ci(v, 0.05);
    CHECK(l == doctest::Approx(quantile_oracle(v, 0.025)).epsilon(1e-14));
    CHECK(h == doctest::Approx(quantile_oracle(v, 0.975)).epsilon(1e-14));
  }
  std::vector<double> empty;
  CHECK_THROWS_AS(percentile_ci(empty, 0.05), Error);
}

TEST_CASE("classify_gate1: decision table rows") {
  CHECK(classify_gate1(-0.15, 0.05, -0.20) == Gate1Class::NoDeterioration);
  CHECK(classify_gate1(-0.18, -0.04, -0.20) == Gate1Class::SignificantNoBreach);
  CHECK(classify_gate1(-0.30, -0.22, -0.20) == Gate1Class::ConfirmedBreach);
  CHECK(classify_gate1(-0.27, -0.12, -0.20) == Gate1Class::BreachNotConfirmed);
  // cells outside the table
  CHECK(classify_gate1(0.01, 0.10, -0.20) == Gate1Class::NoDeterioration);
  CHECK(outside_decision_table(0.01, 0.10, -0.20));
  CHECK(classify_gate1(-0.25, 0.02, -0.20) == Gate1Class::BreachNotConfirmed);
  CHECK(outside_decision_table(-0.25, 0.02, -0.20));
  CHECK_FALSE(outside_decision_table(-0.15, 0.05, -0.20));
  // boundaries
  CHECK(classify_gate1(-0.30, -0.20, -0.20) == Gate1Class::BreachNotConfirmed);
  CHECK(classify_gate1(-0.20, -0.10, -0.20) == Gate1Class::BreachNotConfirmed);
  CHECK(classify_gate1(-0.10, 0.0, -0.20) == Gate1Class::NoDeterioration);
}

TEST_CASE("classify_gate1: exactly one class per interval, consistent with bounds") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-0.6, 0.3);
  std::uniform_real_distribution<double> t(-0.5, -0.01);
  for (int i = 0; i < 20000; ++i) {
    double a = u(gen);
    double b = u(gen);
    if (a > b) std::swap(a, b);
    const double tau = t(gen);
    const Gate1Class c = classify_gate1(a, b, tau);
    switch (c) {
      case Gate1Class::ConfirmedBreach: CHECK(b < tau); break;
      case Gate1Class::BreachNotConfirmed: CHECK((a <= tau && b >= tau)); break;
      case Gate1Class::SignificantNoBreach: CHECK((a > tau && b < 0.0)); break;
      case Gate1Class::NoDeterioration: CHECK((a > tau && b >= 0.0)); break;
    }
  }
}

TEST_CASE("run_gate1: deterministic and monotone in current separation") {
  const PeriodSample ref = null_period(Period::Reference, 51, 2000);
  GovernanceConfig config;
  config.seed = 11;
  config.bootstrap_replicates = 300;
  const auto severity = [](Gate1Class c) {
    switch (c) {
      case Gate1Class::NoDeterioration: return 0;
      case Gate1Class::SignificantNoBreach: return 1;
      case Gate1Class::BreachNotConfirmed: return 2;
      case Gate1Class::ConfirmedBreach: return 3;
    }
    return -1;
  };
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    std::mt19937_64 gen(seed);
    const PeriodSample cur =
        oracle::random_sample(gen, Period::Current, 2000, {"A"}, {1.0}, {1.0});
    const Gate1Result r1 = run_gate1(ref, cur, config);
    const Gate1Result r2 = run_gate1(ref, cur, config);
    CHECK(r1.ci_low == r2.ci_low);
    CHECK(r1.ci_high == r2.ci_high);
    CHECK(r1.distribution == r2.distribution);

    // push current bads further up: separation strictly improves
    std::vector<Observation> rows(cur.observations().begin(), cur.observations().end());
    for (Observation& o : rows) {
      if (o.label == 1) o.score += 0.6;
    }
    const Gate1Result better = run_gate1(ref, PeriodSample(Period::Current, rows), config);
    CHECK(severity(better.classification) <= severity(r1.classification));
    CHECK(r1.replicates_used == 300);
  }
}
