#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ksdiag/error.hpp"
#include "ksdiag/ks.hpp"
#include "oracles.hpp"

using namespace ksdiag;

namespace {

std::vector<WeightedScore> unit(std::initializer_list<double> scores) {
  std::vector<WeightedScore> out;
  for (double s : scores) out.push_back({s, 1.0});
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

PeriodSample two_segment_sample() {
  std::vector<Observation> rows = {
      {0.1, 0, "A", {}}, {0.5, 0, "A", {}}, {0.7, 1, "A", {}}, {0.9, 1, "A", {}},
      {0.2, 0, "B", {}}, {0.8, 0, "B", {}}, {0.3, 1, "B", {}}, {0.4, 1, "B", {}},
  };
  return PeriodSample(Period::Reference, rows);
}

}  // namespace

TEST_CASE("ks: hand-enumerated examples") {
  const KsValue a = weighted_ks(unit({1, 2, 3}), unit({2, 3, 4}));
  CHECK(a.value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(a.argmax_score == 1.0);

  CHECK(weighted_ks(unit({1, 2}), unit({3, 4})).value == 1.0);
  CHECK(weighted_ks(unit({1, 2, 2, 5}), unit({5, 2, 1, 2})).value == 0.0);
}

TEST_CASE("ks: contract violations") {
  CHECK(code_of([] { weighted_ks(unit({}), unit({1})); }) == ErrorCode::EmptyClass);
  CHECK(code_of([] { weighted_ks(unit({1}), {}); }) == ErrorCode::EmptyClass);
  std::vector<WeightedScore> bad_w = {{1.0, 0.0}};
  CHECK(code_of([&] { weighted_ks(bad_w, unit({2})); }) == ErrorCode::NonPositiveWeight);
  std::vector<WeightedScore> neg_w = {{1.0, -1.0}};
  CHECK(code_of([&] { weighted_ks(unit({2}), neg_w); }) == ErrorCode::NonPositiveWeight);
}

TEST_CASE("ks: unit weights match the brute-force oracle, with and without ties") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 60);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> g(size(gen)), b(size(gen));
    for (double& x : g) x = std::round(z(gen) * (trial % 2 ? 2.0 : 1000.0));
    for (double& x : b) x = std::round((z(gen) + 0.5) * (trial % 2 ? 2.0 : 1000.0));
    std::vector<WeightedScore> gw, bw;
    for (double x : g) gw.push_back({x, 1.0});
    for (double x : b) bw.push_back({x, 1.0});
    CHECK(std::fabs(weighted_ks(gw, bw).value - oracle::brute_ks(g, b)) <= 1e-12);
  }
}

TEST_CASE("ks: weighted values match the weighted oracle") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.01, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> g(40), b(30), gwt(40), bwt(30);
    std::vector<WeightedScore> gs, bs;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = std::round(z(gen) * 4) / 4;
      gwt[i] = w(gen);
      gs.push_back({g[i], gwt[i]});
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] = std::round((z(gen) + 1) * 4) / 4;
      bwt[i] = w(gen);
      bs.push_back({b[i], bwt[i]});
    }
    CHECK(weighted_ks(gs, bs).value ==
          doctest::Approx(oracle::brute_ks(g, gwt, b, bwt)).epsilon(1e-12));
  }
}

TEST_CASE("ks: invariances") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<WeightedScore> g(80), b(50);
    for (auto& x : g) x = {z(gen), w(gen)};
    for (auto& x : b) x = {z(gen) + 0.8, w(gen)};
    const KsValue base = weighted_ks(g, b);

    // strictly increasing transform
    auto tg = g;
    auto tb = b;
    for (auto& x : tg) x.score = std::exp(x.score);
    for (auto& x : tb) x.score = std::exp(x.score);
    const KsValue mono = weighted_ks(tg, tb);
    CHECK(mono.value == doctest::Approx(base.value).epsilon(1e-12));
    CHECK(mono.argmax_score == std::exp(base.argmax_score));

    // scaling one class
    auto sg = g;
    for (auto& x : sg) x.weight *= 7.5;
    CHECK(weighted_ks(sg, b).value == doctest::Approx(base.value).epsilon(1e-12));

    // symmetry
    CHECK(weighted_ks(b, g).value == base.value);

    // permutation, bit-identical
    auto pg = g;
    auto pb = b;
    std::shuffle(pg.begin(), pg.end(), gen);
    std::shuffle(pb.begin(), pb.end(), gen);
    const KsValue perm = weighted_ks(pg, pb);
    CHECK(perm.value == base.value);
    CHECK(perm.argmax_score == base.argmax_score);
  }
}

TEST_CASE("ks_of_sample: segment filters") {
  const PeriodSample s = two_segment_sample();
  const WeightedSample ws(s);
  const KsValue all = ks_of_sample(ws);
  CHECK(ks_of_sample(ws, SegmentSet{"A", "B"}).value == all.value);

  const KsValue only_a = ks_of_sample(ws, SegmentSet{"A"});
  CHECK(only_a.value == weighted_ks(unit({0.1, 0.5}), unit({0.7, 0.9})).value);
  CHECK(only_a.value == 1.0);

  CHECK(code_of([&] { ks_of_sample(ws, SegmentSet{}); }) == ErrorCode::EmptyClassAfterFilter);
}

TEST_CASE("ks_of_sample: row weights are applied") {
  const PeriodSample s = two_segment_sample();
  std::vector<double> w = {1, 2, 3, 4, 5, 6, 7, 8};
  const WeightedSample ws(s, w);
  const oracle::Split sp = oracle::split(s, &w);
  CHECK(ks_of_sample(ws).value ==
        doctest::Approx(oracle::brute_ks(sp.goods, sp.good_w, sp.bads, sp.bad_w)).epsilon(1e-12));
}

TEST_CASE("pct_change") {
  CHECK(pct_change(0.5, 0.4) == doctest::Approx(-0.20).epsilon(1e-15));
  CHECK(pct_change(0.5, 0.5) == 0.0);
  CHECK(code_of([] { pct_change(0.0, 0.3); }) == ErrorCode::ZeroReferenceKs);
}
