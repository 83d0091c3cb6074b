#include <catch2/catch_amalgamated.hpp>

#include "effdispatch/curves.hpp"
#include "helpers.hpp"

using namespace effdispatch;
using Catch::Approx;

namespace {
const EfficiencyCurve unit1{0.022, 0.0001375, 0.022 / 0.0001375};
}

TEST_CASE("efficiency evaluation", "[curves]") {
  CHECK(unit1.efficiency(0.0) == 0.0);
  CHECK(unit1.efficiency(66.45) == Approx(0.8547).margin(5e-4));
  CHECK(unit1.efficiency(80.0) == Approx(0.88).margin(1e-12));

  CHECK_THROWS_AS(unit1.efficiency(-1.0), DomainError);
  CHECK_THROWS_AS(unit1.efficiency(161.0), DomainError);
  CHECK_THROWS_WITH(unit1.efficiency(200.0),
                    Catch::Matchers::ContainsSubstring("p_max"));
}

TEST_CASE("output evaluation", "[curves]") {
  CHECK(unit1.output(0.0) == 0.0);
  CHECK(unit1.output(80.0) == Approx(70.4).margin(1e-9));
  CHECK(unit1.output(60.0) == Approx(49.5).margin(1e-9));
}

TEST_CASE("marginal output is the derivative of output", "[curves]") {
  CHECK(unit1.marginal_output(0.0) == 0.0);
  CHECK(unit1.marginal_output(66.45) == Approx(1.1024).margin(1e-3));

  std::mt19937 rng(7);
  const double h = 1e-4;
  for (const auto& curve :
       {unit1, testutil::random_curve(rng), testutil::random_curve(rng)}) {
    std::uniform_real_distribution<double> p_dist(h, curve.p_max - h);
    for (int k = 0; k < 100; ++k) {
      const double p = p_dist(rng);
      const double fd =
          (curve.output(p + h) - curve.output(p - h)) / (2.0 * h);
      CHECK(std::abs(curve.marginal_output(p) - fd) <= 1e-6);
    }
  }
}

TEST_CASE("peak point", "[curves]") {
  CHECK(unit1.peak_input() == Approx(80.0));
  CHECK(unit1.peak_efficiency() == Approx(0.88));

  const EfficiencyCurve unit2{0.0146667, 0.0000611, 0.0146667 / 0.0000611};
  CHECK(unit2.peak_input() == Approx(120.0).margin(0.1));
  CHECK(unit2.peak_efficiency() == Approx(0.88).margin(1e-3));

  // Cap below the vertex clamps the peak to the cap.
  const EfficiencyCurve capped{0.022, 0.0001375, 50.0};
  CHECK(capped.peak_input() == 50.0);
  CHECK(capped.peak_efficiency() == Approx(capped.efficiency(50.0)));
}

TEST_CASE("peak is a local maximum", "[curves]") {
  std::mt19937 rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto c = testutil::random_curve(rng);
    const double pe = c.peak_input();
    const double d = 1e-3 * c.p_max;
    if (pe - d < 0.0 || pe + d > c.p_max) continue;
    CHECK(c.efficiency(pe + d) <= c.efficiency(pe));
    CHECK(c.efficiency(pe - d) <= c.efficiency(pe));
  }
}

TEST_CASE("efficiency stays within [0, peak]", "[curves]") {
  std::mt19937 rng(13);
  for (int k = 0; k < 20; ++k) {
    const auto c = testutil::random_curve(rng);
    const double peak = c.a * c.a / (4.0 * c.b);
    std::uniform_real_distribution<double> p_dist(0.0, c.p_max);
    for (int i = 0; i < 50; ++i) {
      const double eta = c.efficiency(p_dist(rng));
      CHECK(eta >= -1e-12);
      CHECK(eta <= peak + 1e-12);
    }
  }
}

TEST_CASE("curve validation", "[curves]") {
  CHECK(validate(unit1).valid());

  const auto too_efficient = validate({0.03, 0.0001, 100.0});
  REQUIRE_FALSE(too_efficient.valid());
  CHECK_THAT(too_efficient.violations.front(),
             Catch::Matchers::ContainsSubstring("exceeds 1"));

  const auto cap_too_high = validate({0.022, 0.0001375, 200.0});
  REQUIRE_FALSE(cap_too_high.valid());
  CHECK_THAT(cap_too_high.violations.front(),
             Catch::Matchers::ContainsSubstring("a/b"));

  CHECK_FALSE(validate({-0.01, 0.0001, 10.0}).valid());
  CHECK_FALSE(validate({0.01, 0.0, 10.0}).valid());
  CHECK_FALSE(validate({0.01, 0.0001, 0.0}).valid());
}

TEST_CASE("fleet validation", "[curves]") {
  CHECK(validate(testutil::case1_fleet()).valid());

  Fleet dup = testutil::case1_fleet();
  dup.units[1].id = "u1";
  REQUIRE_FALSE(validate(dup).valid());
  CHECK_THAT(validate(dup).violations.front(),
             Catch::Matchers::ContainsSubstring("duplicate"));

  Fleet big;
  for (int i = 0; i < 17; ++i) {
    big.units.push_back({"g" + std::to_string(i), unit1});
  }
  CHECK_FALSE(validate(big).valid());
}

TEST_CASE("similarity factor", "[curves]") {
  CHECK(similarity_factor(unit1, unit1) == 1.0);

  const EfficiencyCurve scaled{0.022 / 1.5, 0.0001375 / 2.25, 240.0};
  auto beta = similarity_factor(unit1, scaled);
  REQUIRE(beta.has_value());
  CHECK(*beta == Approx(1.5).epsilon(1e-12));

  const EfficiencyCurve other{0.0287, 0.000233333, 123.0};
  CHECK_FALSE(similarity_factor(unit1, other).has_value());
}

TEST_CASE("similarity factor recovers random scalings", "[curves]") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> beta_dist(0.1, 10.0);
  for (int k = 0; k < 100; ++k) {
    const auto ref = testutil::random_curve(rng);
    const double beta = beta_dist(rng);
    const EfficiencyCurve scaled{ref.a / beta, ref.b / (beta * beta),
                                 beta * ref.p_max};
    auto found = similarity_factor(ref, scaled);
    REQUIRE(found.has_value());
    CHECK(std::abs(*found - beta) <= 1e-9 * beta);
  }
}

TEST_CASE("inverse efficiency", "[curves]") {
  CHECK(unit1.inverse_efficiency(0.88, Branch::rising) == Approx(80.0));
  CHECK(unit1.inverse_efficiency(0.88, Branch::falling) == Approx(80.0));
  CHECK(unit1.inverse_efficiency(0.805, Branch::falling) ==
        Approx(103.36).margin(0.05));
  CHECK(unit1.inverse_efficiency(0.805, Branch::rising) ==
        Approx(56.64).margin(0.05));

  CHECK_THROWS_AS(unit1.inverse_efficiency(0.9, Branch::falling), DomainError);
  const EfficiencyCurve capped{0.022, 0.0001375, 100.0};
  CHECK_THROWS_AS(capped.inverse_efficiency(0.805, Branch::falling),
                  InfeasibleError);
  CHECK_NOTHROW(capped.inverse_efficiency(0.805, Branch::rising));
}

TEST_CASE("inverse efficiency round-trips", "[curves]") {
  std::mt19937 rng(19);
  for (int k = 0; k < 20; ++k) {
    const auto c = testutil::random_curve(rng);
    const double peak = c.a * c.a / (4.0 * c.b);
    std::uniform_real_distribution<double> level_dist(1e-6, peak);
    for (auto branch : {Branch::rising, Branch::falling}) {
      for (int i = 0; i < 25; ++i) {
        const double level = level_dist(rng);
        const double p = c.inverse_efficiency(level, branch);
        CHECK(std::abs(c.efficiency(p) - level) <= 1e-9);
        CHECK(p >= 0.0);
        CHECK(p <= c.a / c.b + 1e-9);
      }
    }
  }
}

TEST_CASE("family detection", "[curves]") {
  const auto fam = detect_family(testutil::case1_fleet());
  REQUIRE(fam.has_value());
  REQUIRE(fam->betas.size() == 2);
  CHECK(fam->betas[0] == 1.0);
  CHECK(fam->betas[1] == Approx(1.5).epsilon(1e-12));

  // Detected scale factors hold pointwise: eta_i(p) = eta_ref(p / beta_i).
  const auto& member = testutil::case1_fleet().units[1].curve;
  for (int k = 1; k <= 40; ++k) {
    const double p = member.p_max * k / 41.0;
    const double via_ref = fam->reference.efficiency(p / fam->betas[1]);
    const double direct = member.efficiency(p);
    CHECK(std::abs(direct - via_ref) <=
          1e-9 * std::max(1.0, std::abs(direct)));
  }

  CHECK_FALSE(detect_family(testutil::case2_fleet()).has_value());

  Fleet solo;
  solo.units.push_back({"only", unit1});
  const auto single = detect_family(solo);
  REQUIRE(single.has_value());
  CHECK(single->betas == std::vector<double>{1.0});
}
