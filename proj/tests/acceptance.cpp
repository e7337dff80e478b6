// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code is the number of
// failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fairtax/fairtax.hpp"

using namespace fairtax;

namespace {

int failures = 0;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void report(int index, const std::string& name, bool pass,
            const std::string& detail, double seconds) {
  std::printf("%s  criterion %d: %-34s  %s  (%.2fs)\n", pass ? "PASS" : "FAIL",
              index, name.c_str(), detail.c_str(), seconds);
  if (!pass) ++failures;
}

std::string fmt(double v) { return format_sig(v); }

// 1. frontier interval of the uniform marginal is [2/3, 3/4] within 1e-8,
//    in under a second.
void criterion_1() {
  const double t0 = now_seconds();
  const auto f = frontier_interval(uniform_marginal());
  const double elapsed = now_seconds() - t0;
  const double dev = std::max(std::abs(f.k_low - 2.0 / 3.0),
                              std::abs(f.k_high - 0.75));
  const bool pass = dev < 1e-8 && elapsed < 1.0;
  report(1, "uniform frontier [2/3, 3/4]", pass,
         "max endpoint deviation " + fmt(dev), elapsed);
}

// 2. W(theta) = 3 - 4 theta for the uniform marginal, max deviation on a
//    1024 grid below 1e-8.
void criterion_2() {
  const double t0 = now_seconds();
  const auto u = uniform_marginal();
  double dev = 0.0;
  for (int i = 0; i <= 1024; ++i) {
    const double t = i / 1024.0;
    dev = std::max(dev, std::abs(w_function(u, t) - (3.0 - 4.0 * t)));
  }
  report(2, "uniform W formula 3 - 4 theta", dev < 1e-8,
         "max deviation " + fmt(dev), now_seconds() - t0);
}

// 3. cumulative rent curves of the two-market uniform example at grid 2048:
//    antitone matches p^2/4 and monotone matches (p - 1/2)_+^2 within 1e-3,
//    and the antitone distribution SOSD-dominates with nonnegative margin.
void criterion_3() {
  const double t0 = now_seconds();
  const auto u = uniform_marginal();
  const auto rent = rent_function(u, 0.5);
  const int grid = 2048;
  const auto anti = rent_distribution(
      {Coupling::countermonotone(u, u), {rent, rent}}, grid);
  const auto mono =
      rent_distribution({Coupling::comonotone({u, u}), {rent, rent}}, grid);
  const auto ha = cumulative_rents(anti, grid);
  const auto hm = cumulative_rents(mono, grid);
  double dev = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double p = ha.percentiles[i];
    dev = std::max(dev, std::abs(ha.values[i] - p * p / 4.0));
    const double expected = p > 0.5 ? (p - 0.5) * (p - 0.5) : 0.0;
    dev = std::max(dev, std::abs(hm.values[i] - expected));
  }
  const auto verdict = sosd_compare(anti, mono);
  const bool pass = dev < 1e-3 && verdict.dominates && verdict.margin >= -1e-9;
  report(3, "coupling rent curves at 2048", pass,
         "max curve deviation " + fmt(dev) + ", sosd margin " +
             fmt(verdict.margin),
         now_seconds() - t0);
}

// 4. supra-pricing: k_low - theta* = 1/6 within 1e-8 and the check holds.
void criterion_4() {
  const double t0 = now_seconds();
  const auto supra = supra_pricing_check(uniform_marginal());
  const double dev = std::abs(supra.margin - 1.0 / 6.0);
  report(4, "supra-pricing margin 1/6", supra.holds && dev < 1e-8,
         "margin deviation " + fmt(dev), now_seconds() - t0);
}

// 5. fairness battery: across {comonotone, gaussian(0.8), gaussian(0.2),
//    independent, countermonotone} over two uniform markets at thresholds
//    (1/2, 1/2), every pair certified by the joint-CDF test must have the
//    dominated coupling's rent distribution SOSD-dominate; 10/10 pairs.
void criterion_5() {
  const double t0 = now_seconds();
  const auto u = uniform_marginal();
  const auto rent = rent_function(u, 0.5);
  const std::vector<Coupling> family = {
      Coupling::comonotone({u, u}),
      Coupling::gaussian(u, u, 0.8),
      Coupling::gaussian(u, u, 0.2),
      Coupling::independent({u, u}),
      Coupling::countermonotone(u, u)};
  std::vector<RentDistribution> dists;
  for (const auto& c : family) {
    dists.push_back(rent_distribution({c, {rent, rent}}, 256));
  }
  int comparable = 0, passed = 0;
  for (std::size_t f = 0; f < family.size(); ++f) {
    for (std::size_t g = 0; g < family.size(); ++g) {
      if (f == g) continue;
      if (!supermodular_compare(family[f], family[g], 256).dominates) continue;
      ++comparable;
      if (sosd_compare(dists[g], dists[f]).dominates) ++passed;
    }
  }
  const double elapsed = now_seconds() - t0;
  const bool pass = comparable == 10 && passed == 10 && elapsed < 30.0;
  report(5, "fairness direction battery", pass,
         std::to_string(passed) + "/" + std::to_string(comparable) +
             " comparable pairs",
         elapsed);
}

// 6. the two SOSD routes (integrated CDFs vs cumulative rent curves) agree
//    exactly on 50 seeded random threshold pairs under both the uniform and
//    power(2) marginals.
void criterion_6() {
  const double t0 = now_seconds();
  Rng rng(2024);
  int agreements = 0;
  const int pairs = 50;
  for (int trial = 0; trial < pairs; ++trial) {
    const double ka = rng.uniform(0.05, 0.95);
    const double kb = rng.uniform(0.05, 0.95);
    for (const auto& d : {uniform_marginal(), power_marginal(2.0)}) {
      RentProfile pa{Coupling::independent({d}), {rent_function(d, ka)}};
      RentProfile pb{Coupling::independent({d}), {rent_function(d, kb)}};
      const auto da = rent_distribution(pa, 2048);
      const auto db = rent_distribution(pb, 2048);
      const bool direct = sosd_compare(da, db).dominates;
      const bool via_h = sosd_via_H(cumulative_rents(da, 2048),
                                    cumulative_rents(db, 2048))
                             .dominates;
      if (direct == via_h) ++agreements;
    }
  }
  const bool pass = agreements == 2 * pairs;
  report(6, "SOSD route agreement", pass,
         std::to_string(agreements) + "/" + std::to_string(2 * pairs) +
             " verdicts agree",
         now_seconds() - t0);
}

// 7. oracle falsification at m = 32 with 100 random monotone candidates:
//    no domination of grid-frontier thresholds, and the grid-monopoly
//    threshold is dominated by a frontier threshold, for uniform and
//    power(2), in under a minute.
void criterion_7() {
  const double t0 = now_seconds();
  bool pass = true;
  std::string detail;
  for (const auto& d : {uniform_marginal(), power_marginal(2.0)}) {
    const auto report_ =
        dominance_scan(DiscreteInstance::build(d, 32, 100, 0));
    pass = pass && report_.frontier_undominated &&
           report_.monopoly_dominated_by_frontier;
    detail += d.name + (report_.frontier_undominated &&
                                report_.monopoly_dominated_by_frontier
                            ? " ok "
                            : " FAILED ");
  }
  const double elapsed = now_seconds() - t0;
  pass = pass && elapsed < 60.0;
  report(7, "oracle falsification m=32", pass, detail, elapsed);
}

// 8. property suites: W monotonicity, the W tail antiderivative identity,
//    the tax construction round trip, and budget normalization posts.
void criterion_8() {
  const double t0 = now_seconds();
  bool pass = true;
  std::string detail;

  // W and W/(1-F) nonincreasing on 1024 grids; W(0) > 1.
  for (const auto& d : {uniform_marginal(), power_marginal(1.5),
                        power_marginal(2.0), power_marginal(3.0)}) {
    double prev_w = std::numeric_limits<double>::infinity();
    double prev_ratio = std::numeric_limits<double>::infinity();
    bool mono = w_function(d, 0.0) > 1.0;
    for (int i = 0; i <= 1024; ++i) {
      const double t = i / 1024.0;
      const double w = w_function(d, t);
      const double survival = 1.0 - d.cdf(t);
      const double ratio = w / survival;
      if (w > prev_w + 1e-9 || ratio > prev_ratio + 1e-9) mono = false;
      prev_w = w;
      prev_ratio = ratio;
    }
    if (!mono) {
      pass = false;
      detail += "W-monotonicity failed for " + d.name + "; ";
    }
  }

  // tail antiderivative identity within 1e-6.
  for (const auto& d :
       {uniform_marginal(), power_marginal(1.5), power_marginal(2.0),
        truncated_exponential_marginal(1.0)}) {
    for (int j = 0; j < 64; ++j) {
      const double k = (j + 0.5) / 64.0;
      const double quad =
          integrate([&](double s) { return w_function(d, s); }, k, 1.0, 1e-9);
      if (std::abs(w_antiderivative_tail(d, k) - quad) > 1e-6) {
        pass = false;
        detail += "tail identity failed for " + d.name + "; ";
        break;
      }
    }
  }

  // tax construction round trip within sup-distance 1e-4.
  for (const auto& d : {uniform_marginal(), power_marginal(2.0)}) {
    const auto rules = {
        AllocationRule::from_function([](double t) { return t; }, 512),
        AllocationRule::from_function([](double t) { return t * t; }, 512)};
    for (const auto& q : rules) {
      const auto policy = tax_for_allocation(d, q);
      const auto response = best_response_check(d, policy, 512);
      double worst = 0.0;
      for (int a = 0; a < 512; ++a) {
        const double theta = a / 511.0;
        worst = std::max(worst, std::abs(response[a] - q(theta)));
      }
      if (worst > 1e-4) {
        pass = false;
        detail += "round trip sup " + fmt(worst) + " for " + d.name + "; ";
      }
    }
  }

  // budget normalization: demeaned markets and preserved totals.
  {
    const auto u = uniform_marginal();
    const auto p2 = power_marginal(2.0);
    const std::vector<AllocationRule> rules{AllocationRule::threshold(0.7),
                                            AllocationRule::threshold(0.6),
                                            AllocationRule::threshold(0.8)};
    const std::vector<TaxPolicy> policies{
        TaxPolicy::excise({0.02, virtual_value(u, 0.7)}),
        TaxPolicy::excise({-0.05, virtual_value(p2, 0.6)}),
        TaxPolicy::excise({0.0, virtual_value(u, 0.8)})};
    const std::vector<MarketMechanism> mechanisms{
        {rules[0], policies[0], u},
        {rules[1], policies[1], p2},
        {rules[2], policies[2], u}};
    const auto result = budget_normalize(policies, mechanisms);
    double total_before = 0.0, total_after = 0.0;
    for (std::size_t i = 0; i < policies.size(); ++i) {
      total_before += result.pre_expectations[i];
      const double e = expected_tax(mechanisms[i].marginal,
                                    mechanisms[i].allocation, result.policies[i]);
      total_after += e;
      if (i + 1 < policies.size() && std::abs(e) > 1e-9) {
        pass = false;
        detail += "market " + std::to_string(i + 1) + " not demeaned; ";
      }
    }
    if (std::abs(total_before - total_after) > 1e-9) {
      pass = false;
      detail += "totals not preserved; ";
    }
  }

  if (detail.empty()) detail = "all properties hold";
  report(8, "property suites", pass, detail, now_seconds() - t0);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%s: %d/%d criteria passed\n", failures == 0 ? "OK" : "FAILED",
              8 - failures, 8);
  return failures;
}
