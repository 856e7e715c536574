#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixrl/chain_analysis.hpp"
#include "oracles.hpp"

using namespace mixrl;

namespace {

MarkovChain lazy_ring(int n) {
  MarkovChain c = MarkovChain::zeros(n);
  for (int i = 0; i < n; ++i) {
    c.at(i, i) = 0.5;
    c.at(i, (i + 1) % n) += 0.25;
    c.at(i, (i + n - 1) % n) += 0.25;
  }
  return c;
}

MarkovChain two_cycle() {
  MarkovChain c = MarkovChain::zeros(2);
  c.at(0, 1) = 1.0;
  c.at(1, 0) = 1.0;
  return c;
}

MarkovChain lazify(const MarkovChain& c) {
  MarkovChain out = c;
  for (int i = 0; i < c.n_states; ++i)
    for (int j = 0; j < c.n_states; ++j)
      out.at(i, j) = 0.5 * c.at(i, j) + (i == j ? 0.5 : 0.0);
  return out;
}

// Two states, both rows (0.7, 0.3), reward only in state 1: rho = 0.3 and
// the partial averages deviate by exactly 0.3/h and 0.7/h.
TabularMdp two_state_reward_mdp() {
  TabularMdp m = TabularMdp::zeros(2, 1);
  m.tp(0, 0, 0) = 0.7;
  m.tp(0, 0, 1) = 0.3;
  m.tp(1, 0, 0) = 0.7;
  m.tp(1, 0, 1) = 0.3;
  m.rew(1, 0) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("four-state lazy ring mixes in one step at eps 1/4") {
  MarkovChain c = lazy_ring(4);
  CHECK(exact_mixing_time(c, 0.25, 100) == 1);
}

TEST_CASE("exact mixing time equals the brute-force oracle") {
  for (int n = 4; n <= 8; ++n) {
    MarkovChain c = lazy_ring(n);
    auto mu = oracle::power_iteration_mu(c);
    CHECK(exact_mixing_time(c, 0.25, 1000) ==
          oracle::brute_tv_mixing_time(c, mu, 0.25, 1000));
  }
  Rng rng(51);
  for (int rep = 0; rep < 10; ++rep) {
    MarkovChain c = oracle::random_chain(2 + rng.uniform_int(9), rng);
    auto mu = oracle::power_iteration_mu(c);
    CHECK(exact_mixing_time(c, 0.25, 1000) ==
          oracle::brute_tv_mixing_time(c, mu, 0.25, 1000));
  }
}

TEST_CASE("deterministic two-cycle: cesaro finite, exact diverges") {
  MarkovChain c = two_cycle();
  CHECK(cesaro_mixing_time(c, 0.25, 100) == 2);
  CHECK_THROWS_AS(exact_mixing_time(c, 0.25, 1000), HorizonError);
  CHECK(spectral_gap(c) <= 1e-12);
}

TEST_CASE("cesaro matches its oracle and obeys the 7x bound") {
  Rng rng(53);
  for (int rep = 0; rep < 10; ++rep) {
    MarkovChain c = lazify(oracle::random_chain(2 + rng.uniform_int(9), rng));
    auto mu = oracle::power_iteration_mu(c);
    long tces = cesaro_mixing_time(c, 0.25, 2000);
    CHECK(tces == oracle::brute_cesaro_mixing_time(c, mu, 0.25, 2000));
    long tmix = exact_mixing_time(c, 0.25, 2000);
    CHECK(7 * tmix >= tces);
  }
}

TEST_CASE("twice the mixing time dominates the graph diameter") {
  Rng rng(57);
  for (int rep = 0; rep < 20; ++rep) {
    MarkovChain c = lazify(oracle::random_chain(3 + rng.uniform_int(12), rng));
    long tmix = exact_mixing_time(c, 0.25, 5000);
    DiameterReport rep_d = diameter_report(c);
    CHECK(2 * tmix >= rep_d.graph_diameter);
  }
}

TEST_CASE("return mixing time exact: frozen two-state grid") {
  TabularMdp m = two_state_reward_mdp();
  PolicyTable pi = PolicyTable::uniform(2, 1);
  MixingReport rep = return_mixing_time_exact(m, pi, {0.2, 0.11}, 1000);
  CHECK(rep.rho == doctest::Approx(0.3).epsilon(1e-12));
  // Deviations are 0.3/h (state 0) and 0.7/h (state 1).
  CHECK(rep.points[0].t[0] == 2);  // 0.3/h <= 0.2 from h=2
  CHECK(rep.points[1].t[0] == 4);  // 0.7/h <= 0.2 from h=4
  CHECK(rep.points[0].t[1] == 3);  // 0.3/h <= 0.11 from h=3
  CHECK(rep.points[1].t[1] == 7);  // 0.7/h <= 0.11 from h=7
  CHECK(rep.mean_t[0] == doctest::Approx(3.0));
  CHECK(rep.mean_t[1] == doctest::Approx(5.0));
  CHECK(rep.max_t[1] == doctest::Approx(7.0));
  CHECK(rep.relative_errors[0] == doctest::Approx(0.2 / 0.3));
  CHECK(rep.excluded == 0);
}

TEST_CASE("return mixing time exact: cap violation raises") {
  TabularMdp m = two_state_reward_mdp();
  PolicyTable pi = PolicyTable::uniform(2, 1);
  CHECK_THROWS_AS(return_mixing_time_exact(m, pi, {0.11}, 5), HorizonError);
}

TEST_CASE("return mixing time empirical: deterministic and plausible") {
  TabularMdp m = two_state_reward_mdp();
  PolicyTable pi = PolicyTable::uniform(2, 1);
  MixingReport a =
      return_mixing_time_empirical(m, pi, {0.2, 0.11}, 32, 20000, 99);
  MixingReport b =
      return_mixing_time_empirical(m, pi, {0.2, 0.11}, 32, 20000, 99);
  CHECK(a.rho == doctest::Approx(0.3).epsilon(0.05));
  CHECK(a.rho == b.rho);
  REQUIRE(a.points.size() == 32);
  for (size_t e = 0; e < a.epsilons.size(); ++e) {
    CHECK(a.mean_t[e] == b.mean_t[e]);
    CHECK(a.mean_t[e] >= 1.0);
    CHECK(a.mean_t[e] <= 100.0);
  }
}

TEST_CASE("return mixing time empirical: unreachable epsilon raises") {
  TabularMdp m = two_state_reward_mdp();
  PolicyTable pi = PolicyTable::uniform(2, 1);
  CHECK_THROWS_AS(
      return_mixing_time_empirical(m, pi, {1e-6}, 16, 5000, 7), Error);
}

TEST_CASE("return mixing times fall as the tolerance grows") {
  Rng rng(63);
  for (int rep = 0; rep < 10; ++rep) {
    TabularMdp m = oracle::random_mdp(2 + rng.uniform_int(7),
                                      1 + rng.uniform_int(3), rng);
    PolicyTable pi = PolicyTable::uniform(m.n_states, m.n_actions);
    double rho = average_reward(m, pi);
    // Build the grid from relative errors and read it back off the report.
    std::vector<double> rels{0.05, 0.1, 0.2, 0.4};
    std::vector<double> eps;
    for (double rel : rels) eps.push_back(rel * std::abs(rho));
    MixingReport ex = return_mixing_time_exact(m, pi, eps, 20000);
    for (size_t e = 0; e < eps.size(); ++e) {
      CHECK(ex.relative_errors[e] == doctest::Approx(rels[e]));
      CHECK(ex.mean_t[e] <= ex.max_t[e]);
      for (const MixingPoint& p : ex.points) {
        CHECK(p.t[e] >= 1.0);
        if (e > 0) CHECK(p.t[e] <= p.t[e - 1]);
      }
    }
    MixingReport em =
        return_mixing_time_empirical(m, pi, eps, 16, 30000, 700 + rep);
    for (size_t e = 1; e < eps.size(); ++e)
      for (const MixingPoint& p : em.points)
        if (!std::isnan(p.t[e]) && !std::isnan(p.t[e - 1]))
          CHECK(p.t[e] <= p.t[e - 1]);
  }
}

TEST_CASE("return mixing sits under the distribution mixing bound") {
  // With rewards in [0, 1], averaging h >= 4 t_mix(eps/4) / eps steps pins
  // every partial mean within eps of rho, so t_ret(eps) never exceeds
  // ceil(4 t_mix(eps/4) / eps).
  Rng rng(67);
  for (int rep = 0; rep < 20; ++rep) {
    int n = 3 + rng.uniform_int(10);
    MarkovChain c = oracle::random_chain(n, rng);
    TabularMdp m = TabularMdp::zeros(n, 1, 1.0);
    std::vector<double> raw(n);
    double mx = 0.0;
    for (int s = 0; s < n; ++s) {
      raw[s] = rng.uniform();
      if (raw[s] > mx) mx = raw[s];
    }
    for (int s = 0; s < n; ++s) {
      m.rew(s, 0) = raw[s] / mx;  // r_max exactly 1
      for (int s2 = 0; s2 < n; ++s2) m.tp(s, 0, s2) = c.at(s, s2);
    }
    PolicyTable pi = PolicyTable::uniform(n, 1);
    for (double eps : {0.1, 0.25}) {
      MixingReport r = return_mixing_time_exact(m, pi, {eps}, 20000);
      long tmix = exact_mixing_time(c, eps / 4.0, 20000);
      CHECK(r.max_t[0] <= std::ceil(4.0 * tmix / eps));
    }
  }
}

TEST_CASE("hitting times on the deterministic 3-ring") {
  MarkovChain c = MarkovChain::zeros(3);
  c.at(0, 1) = 1.0;
  c.at(1, 2) = 1.0;
  c.at(2, 0) = 1.0;
  HittingTimes ht = expected_hitting_times(c);
  CHECK(ht.at(0, 2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ht.at(1, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ht.at(2, 2) == 0.0);
  DiameterReport rep = diameter_report(c);
  CHECK(rep.policy_diameter == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.graph_diameter == 1);
}

TEST_CASE("hitting times match fixed-point sweeps and simulation") {
  Rng rng(61);
  MarkovChain c = oracle::random_chain(8, rng);
  HittingTimes ht = expected_hitting_times(c);
  for (int target = 0; target < 3; ++target) {
    auto ref = oracle::hitting_fixed_point(c, target);
    for (int s = 0; s < c.n_states; ++s)
      CHECK(std::abs(ht.at(s, target) - ref[s]) <= 1e-7 * (1.0 + ref[s]));
  }
  auto stat = oracle::simulate_hitting(c, 0, 5, 20000, 4242);
  CHECK(stat.count == 20000);
  CHECK(std::abs(stat.mean - ht.at(0, 5)) <= 3.0 * stat.se + 1e-9);
}

TEST_CASE("min_diameter on a deterministic corridor") {
  TabularMdp m = TabularMdp::zeros(3, 2);
  for (int s = 0; s < 3; ++s) {
    m.tp(s, 0, std::max(0, s - 1)) = 1.0;
    m.tp(s, 1, std::min(2, s + 1)) = 1.0;
  }
  CHECK(min_diameter(m) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("min_diameter lower-bounds any policy diameter") {
  Rng rng(67);
  TabularMdp m = oracle::random_mdp(7, 3, rng, 1e-2);
  double dstar = min_diameter(m);
  DiameterReport rep =
      diameter_report(induce_chain(m, PolicyTable::uniform(7, 3)));
  CHECK(dstar <= rep.policy_diameter + 1e-9);
}

TEST_CASE("bottleneck identity on the symmetric two-state chain") {
  MarkovChain c = MarkovChain::zeros(2);
  c.at(0, 0) = 0.75;
  c.at(0, 1) = 0.25;
  c.at(1, 0) = 0.25;
  c.at(1, 1) = 0.75;
  StationaryDistribution sd = steady_state(c);
  BottleneckReport rep = bottleneck_ratio(c, sd, {0});
  CHECK(rep.mu_region == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.edge_flow == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(rep.ratio == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(rep.residence_analytic == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(rep.ratio * rep.mu_region - rep.edge_flow) <= tol::kExact);
  REQUIRE(rep.boundary.size() == 1);
  CHECK(rep.boundary[0] == 0);

  ResidenceStat st = residence_time_simulated(c, {0}, 200000, 17);
  CHECK(std::abs(st.mean - 4.0) <= 3.0 * st.se + 1e-9);
  CHECK(std::abs(st.mean - 4.0) / 4.0 <= 0.05);
}

TEST_CASE("bottleneck edge cases") {
  MarkovChain c = MarkovChain::zeros(2);
  c.at(0, 0) = 0.75;
  c.at(0, 1) = 0.25;
  c.at(1, 0) = 0.25;
  c.at(1, 1) = 0.75;
  StationaryDistribution sd = steady_state(c);
  BottleneckReport full = bottleneck_ratio(c, sd, {0, 1});
  CHECK(std::isinf(full.residence_analytic));
  CHECK(full.boundary.empty());
  CHECK(std::isinf(residence_time_simulated(c, {0, 1}, 1000, 3).mean));
  CHECK_THROWS_AS(bottleneck_ratio(c, sd, {}), std::invalid_argument);
  CHECK_THROWS_AS(bottleneck_ratio(c, sd, {0, 0}), std::invalid_argument);

  // State 1 is never entered: sojourns in {1} cannot be observed.
  MarkovChain sink = MarkovChain::zeros(2);
  sink.at(0, 0) = 1.0;
  sink.at(1, 0) = 1.0;
  CHECK_THROWS_AS(residence_time_simulated(sink, {1}, 10000, 5), Error);
}

TEST_CASE("spectral gap frozen values") {
  MarkovChain c = MarkovChain::zeros(2);
  c.at(0, 0) = 0.75;
  c.at(0, 1) = 0.25;
  c.at(1, 0) = 0.25;
  c.at(1, 1) = 0.75;
  CHECK(spectral_gap(c) == doctest::Approx(0.5).epsilon(1e-9));

  MarkovChain u = MarkovChain::zeros(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) u.at(i, j) = 1.0 / 3.0;
  CHECK(spectral_gap(u) == doctest::Approx(1.0).epsilon(1e-9));
}
