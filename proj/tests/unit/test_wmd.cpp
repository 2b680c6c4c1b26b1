#include <doctest.h>

#include <random>

#include "capeval/wmd.hpp"
#include "oracles/dense_lp.hpp"
#include "wmd_gen.hpp"

using namespace capeval;

namespace {

Distribution dist(std::vector<double> pts, std::vector<double> w, std::size_t dim = 2) {
  return Distribution(dim, std::move(pts), std::move(w));
}

EmbeddingTable table_ab() {
  EmbeddingTable t(2, Language::target);
  t.add("a", std::vector<double>{0, 0});
  t.add("b", std::vector<double>{3, 4});
  return t;
}

Sentence sent(std::vector<std::string> toks) { return Sentence(std::move(toks), Language::target); }

}  // namespace

TEST_CASE("nbow") {
  const auto t = table_ab();
  const auto d = nbow(sent({"a", "b", "a"}), t);
  REQUIRE(d.size() == 2);
  CHECK(d.labels() == std::vector<std::string>{"a", "b"});
  CHECK(d.weight(0) == doctest::Approx(2.0 / 3.0));
  CHECK(d.weight(1) == doctest::Approx(1.0 / 3.0));

  const auto o = nbow(sent({"a", "x"}), t);
  REQUIRE(o.size() == 1);
  CHECK(o.weight(0) == 1.0);

  try {
    nbow(sent({"x", "y"}), t);
    FAIL("expected AllOovError");
  } catch (const AllOovError& e) {
    CHECK(e.tokens() == std::vector<std::string>{"x", "y"});
  }
}

TEST_CASE("distribution invariants") {
  CHECK_THROWS_AS(dist({0, 0}, {0.5}), ValueError);
  CHECK_THROWS_AS(dist({0, 0, 1, 1}, {1.5, -0.5}), ValueError);
  CHECK_THROWS_AS(dist({}, {}), ValueError);
  CHECK_THROWS_AS(dist({0, 0}, {1.0, 0.0}), ValueError);
}

TEST_CASE("wmd worked examples") {
  CHECK(wmd(dist({0, 0}, {1}), dist({3, 4}, {1})).distance == doctest::Approx(5.0).epsilon(1e-14));
  const auto a = dist({0, 0, 2, 0}, {0.5, 0.5});
  CHECK(wmd(a, a).distance == doctest::Approx(0.0));
  CHECK(wmd(a, dist({1, 0}, {1.0})).distance == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wcd(a, a) == 0.0);
  CHECK(rwmd(a, a) == 0.0);
}

TEST_CASE("single words have no relaxation slack") {
  const auto a = dist({1, 2}, {1}), b = dist({4, 6}, {1});
  CHECK(wcd(a, b) == doctest::Approx(5.0));
  CHECK(rwmd(a, b) == doctest::Approx(5.0));
  CHECK(wmd(a, b).distance == doctest::Approx(5.0));
}

TEST_CASE("centroid distance can exceed the relaxed bound") {
  const auto a = dist({0, 0, 10, 0}, {0.9, 0.1});
  const auto b = dist({0, 0, 10, 0}, {0.1, 0.9});
  CHECK(rwmd(a, b) == doctest::Approx(0.0));
  CHECK(wcd(a, b) == doctest::Approx(8.0));
  CHECK(wmd(a, b).distance == doctest::Approx(8.0));
}

TEST_CASE("wmd agrees with the dense LP oracle") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 300; ++t) {
    const auto a = gen::random_distribution(rng, 6, 3), b = gen::random_distribution(rng, 6, 3);
    const auto res = wmd(a, b);
    const auto cost = ground_costs(a, b);
    const double lp = oracle::transport_lp({a.weights().begin(), a.weights().end()},
                                           {b.weights().begin(), b.weights().end()}, cost);
    CHECK(std::abs(res.distance - lp) <= 1e-7);
    CHECK(res.plan.feasibility_residual(a.weights(), b.weights()) <= 1e-12);
  }
}

TEST_CASE("dual potentials certify optimality") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 300; ++t) {
    const auto a = gen::random_distribution(rng, 6, 2), b = gen::random_distribution(rng, 6, 2);
    const auto res = wmd(a, b);
    const auto& p = res.plan;
    const auto cost = ground_costs(a, b);
    double dual = 0.0, primal = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dual += a.weight(i) * p.row_potentials[i];
    for (std::size_t j = 0; j < b.size(); ++j) dual += b.weight(j) * p.col_potentials[j];
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        CHECK(p.row_potentials[i] + p.col_potentials[j] <= cost[i * b.size() + j] + 1e-9);
    for (const auto& f : p.flows) {
      CHECK(f.amount > 0.0);
      CHECK(std::abs(p.row_potentials[f.from] + p.col_potentials[f.to] - cost[f.from * b.size() + f.to]) <= 1e-9);
      primal += f.amount * cost[f.from * b.size() + f.to];
    }
    CHECK(std::abs(primal - res.distance) <= 1e-12 * std::max(1.0, primal));
    CHECK(std::abs(dual - res.distance) <= 1e-9);
  }
}

TEST_CASE("metric properties") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto a = gen::random_distribution(rng, 5, 2), b = gen::random_distribution(rng, 5, 2),
               c = gen::random_distribution(rng, 5, 2);
    const double ab = wmd(a, b).distance, ba = wmd(b, a).distance, bc = wmd(b, c).distance,
                 ac = wmd(a, c).distance;
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(wmd(a, a).distance <= 1e-12);
    CHECK(ac <= ab + bc + 1e-9);
    CHECK(wcd(a, b) <= ab + 1e-9);
    CHECK(rwmd(a, b) <= ab + 1e-9);
  }
}

TEST_CASE("wmdrel") {
  CHECK(wmdrel(5.0, 20.0) == doctest::Approx(0.75));
  CHECK(wmdrel(20.0, 20.0) == 0.0);
  CHECK(wmdrel(0.0, 20.0) == 1.0);
  CHECK(wmdrel(30.0, 20.0) == 0.0);
  CHECK_THROWS_AS(wmdrel(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(wmdrel(1.0, -2.0), ConfigError);

  const auto t = table_ab();
  CHECK(wmdrel(sent({"a", "b"}), sent({"b", "a"}), t, 3.0) == 1.0);
  CHECK(wmdrel(sent({"a"}), sent({"b"}), t, 20.0) == doctest::Approx(0.75));
  CHECK_THROWS_AS(wmdrel(sent({"x"}), sent({"a"}), t, 1.0), AllOovError);
}
