#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "lvt/oracle_lp.hpp"
#include "lvt/rng.hpp"

using Catch::Approx;
using lvt::Direction;

namespace {

lvt::SettingsEnsemble chsh_settings() {
  const Direction b(1, 0, 0), b2(0, 1, 0);
  const auto a = Direction::normalized(b2.vector() - b.vector());
  const auto a2 = Direction::normalized(-(b2.vector() + b.vector()));
  return {{a, a2}, {b, b2}};
}

}  // namespace

TEST_CASE("strategy enumeration counts and distinctness", "[oracle]") {
  CHECK(lvt::strategy_count(1) == 2);
  CHECK(lvt::strategy_count(2) == 8);
  CHECK(lvt::strategy_count(2, false) == 16);
  CHECK(lvt::enumerate_strategies(1).size() == 2);
  for (int n = 1; n <= 4; ++n) {
    const auto all = lvt::enumerate_strategies(n);
    REQUIRE(all.size() == lvt::strategy_count(n));
    std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
    for (const auto& s : all) {
      REQUIRE(s.a_signs[0] == 1);
      for (int x : s.a_signs) REQUIRE((x == 1 || x == -1));
      for (int x : s.b_signs) REQUIRE((x == 1 || x == -1));
      seen.insert({s.a_signs, s.b_signs});
    }
    REQUIRE(seen.size() == all.size());
  }
  CHECK_THROWS_AS(lvt::strategy_count(13), lvt::ResourceLimit);
  CHECK_THROWS_AS(lvt::enumerate_strategies(13), lvt::ResourceLimit);
  CHECK_THROWS_AS(lvt::strategy_count(0), lvt::InvalidInput);
}

TEST_CASE("oracle examples", "[oracle]") {
  const Direction z(0, 0, 1);
  CHECK(lvt::max_visibility_lp({{z}, {z}}).value == Approx(1.0).margin(1e-9));
  CHECK(lvt::max_visibility_lp({{z}, {-z}}).value == Approx(1.0).margin(1e-9));
  const auto chsh = lvt::max_visibility_lp(chsh_settings());
  CHECK(chsh.value == Approx(1.0 / std::sqrt(2.0)).margin(1e-9));
  CHECK(chsh.provenance == lvt::Provenance::oracle);
  CHECK(chsh.std_error == 0.0);
  CHECK(chsh.n_settings == 2);
}

TEST_CASE("zero Gram matrix gives V = 1", "[oracle]") {
  CHECK(lvt::solve_local_polytope(Eigen::MatrixXd::Zero(3, 3)).visibility == 1.0);
}

TEST_CASE("oracle solution is a certified decomposition", "[oracle][property]") {
  auto rng = lvt::make_rng(1);
  for (int n = 1; n <= 5; ++n)
    for (int trial = 0; trial < 5; ++trial) {
      const auto s = lvt::SettingsEnsemble::random(n, rng);
      const auto sol = lvt::solve_local_polytope(s.gram());
      REQUIRE(sol.visibility > 0.0);
      REQUIRE(sol.visibility <= 1.0);
      REQUIRE(sol.support.size() == sol.weights.size());
      Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
      double total = 0.0;
      for (std::size_t i = 0; i < sol.support.size(); ++i) {
        REQUIRE(sol.weights[i] >= -1e-12);
        total += sol.weights[i];
        const auto st = lvt::strategy_from_index(n, sol.support[i]);
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) corr(j, k) += sol.weights[i] * st.a_signs[j] * st.b_signs[k];
      }
      REQUIRE(total == Approx(1.0).margin(1e-9));
      REQUIRE((corr - sol.visibility * s.gram()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("gauge fixing does not change the optimum", "[oracle][property]") {
  auto rng = lvt::make_rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = lvt::SettingsEnsemble::random(2, rng);
    const double fixed = lvt::solve_local_polytope(s.gram(), true).visibility;
    const double full = lvt::solve_local_polytope(s.gram(), false).visibility;
    REQUIRE(fixed == Approx(full).margin(1e-9));
  }
  const double chsh_full = lvt::solve_local_polytope(chsh_settings().gram(), false).visibility;
  CHECK(chsh_full == Approx(1.0 / std::sqrt(2.0)).margin(1e-9));
}

TEST_CASE("scaling the Gram matrix scales the optimum", "[oracle][property]") {
  auto rng = lvt::make_rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = lvt::SettingsEnsemble::random(2 + trial % 3, rng);
    const double base = lvt::solve_local_polytope(s.gram()).visibility;
    for (double scale : {1.0, 0.9, 0.7, 0.5, 0.2}) {
      const double scaled = lvt::solve_local_polytope(scale * s.gram()).visibility;
      REQUIRE(scaled == Approx(std::min(1.0, base / scale)).margin(1e-8));
    }
  }
}

TEST_CASE("oracle is invariant under relabeling and sign flips of settings", "[oracle][property]") {
  auto rng = lvt::make_rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = lvt::SettingsEnsemble::random(3, rng);
    auto a = s.a_side(), b = s.b_side();
    std::swap(a[0], a[2]);
    b[1] = -b[1];
    REQUIRE(lvt::max_visibility_lp({a, b}).value == Approx(lvt::max_visibility_lp(s).value).margin(1e-9));
  }
}

TEST_CASE("oracle solves a six-setting instance", "[oracle]") {
  auto rng = lvt::make_rng(5);
  const auto s = lvt::SettingsEnsemble::random(6, rng);
  const auto sol = lvt::solve_local_polytope(s.gram());
  CHECK(sol.visibility > 0.0);
  CHECK(sol.visibility < 1.0);
}
