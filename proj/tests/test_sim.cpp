#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bioexp/errors.hpp"
#include "bioexp/prob.hpp"
#include "bioexp/rates.hpp"
#include "bioexp/sim.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace bioexp;

namespace {

// Constant-rate table on the blocklength-n type lattice (all types feasible).
RateFunctionTable constant_table(const SourceModel& m, unsigned n, double rw,
                                 double rs) {
  SimplexGrid grid(m.px().alphabet(), n);
  std::vector<double> r_s(grid.size(), rs);
  std::vector<ExtReal> r_w(grid.size(), ExtReal(rw));
  return RateFunctionTable{grid, std::move(r_s), std::move(r_w), 0.0};
}

// Independent error-probability oracle for stochastic decoders: walk every
// observation/helper pair through the public posterior and credit the true
// secret's mass.
double fr_via_posteriors(const SourceModel& m, const CodeRealization& code,
                         const DecodingMetric& metric) {
  std::size_t nx = m.nx(), ny = m.ny();
  std::uint64_t y_total = 1;
  for (unsigned i = 0; i < code.n; ++i) y_total *= ny;
  double correct = 0.0;
  std::vector<unsigned> yd(code.n), xd(code.n);
  for (std::uint64_t yi = 0; yi < y_total; ++yi) {
    std::uint64_t rem = yi;
    for (unsigned pos = code.n; pos-- > 0;) {
      yd[pos] = unsigned(rem % ny);
      rem /= ny;
    }
    for (std::uint64_t xi = 0; xi < code.type_of.size(); ++xi) {
      rem = xi;
      double p = 1.0;
      for (unsigned pos = code.n; pos-- > 0;) {
        xd[pos] = unsigned(rem % nx);
        rem /= nx;
      }
      for (unsigned pos = 0; pos < code.n; ++pos)
        p *= m.joint().at(xd[pos], yd[pos]);
      if (p <= 0.0) continue;
      PosteriorResult post =
          gld_posterior(m, code, metric, yd, code.w_global(xi));
      REQUIRE(!post.empty_bin);
      correct += p * post.posterior[code.g_local[xi]];
    }
  }
  return 1.0 - correct;
}

}  // namespace

TEST_SUITE_BEGIN("sim");

TEST_CASE("single-symbol fixture matches hand-computed probabilities") {
  SourceModel m = testutil::fig1_model();
  // One helper bin, secret = identity map on the two symbols.
  CodeRealization code = fixture_code(m, 1, 1, 2, {0, 0}, {0, 1});

  // Attacker sees nothing useful and guesses the heavier secret.
  CHECK(fa_probability_exact(m, code) == doctest::Approx(0.6).epsilon(1e-15));

  // Deterministic max-posterior rule: credit 0.32 at y0 and 0.54 at y1.
  double fr_map = fr_probability_exact(m, code, DecodingMetric::map());
  CHECK(fr_map == doctest::Approx(0.14).epsilon(1e-13));

  // Stochastic likelihood decoder at unit tilt:
  // 1 - (0.32^2 + 0.06^2)/0.38 - (0.08^2 + 0.54^2)/0.62.
  double fr_gld =
      fr_probability_exact(m, code, DecodingMetric::likelihood(1.0));
  CHECK(fr_gld == doctest::Approx(0.2404074702886248).epsilon(1e-12));

  // Full-rate helper reveals the source sequence: no decoding errors, and
  // the attacker's guess always lands.
  CodeRealization leaky = fixture_code(m, 1, 2, 2, {0, 1}, {0, 1});
  CHECK(fr_probability_exact(m, leaky, DecodingMetric::map()) ==
        doctest::Approx(0.0));
  CHECK(fa_probability_exact(m, leaky) == doctest::Approx(1.0));
}

TEST_CASE("likelihood decoder approaches the deterministic rule as the tilt grows") {
  SourceModel m = testutil::fig1_model();
  CodeRealization code = fixture_code(m, 1, 1, 2, {0, 0}, {0, 1});
  double prev = 1.0;
  for (double beta : {1.0, 4.0, 16.0, 64.0}) {
    double fr = fr_probability_exact(m, code, DecodingMetric::likelihood(beta));
    CHECK(fr <= prev + 1e-15);
    prev = fr;
  }
  CHECK(prev == doctest::Approx(0.14).epsilon(1e-9));
}

TEST_CASE("degenerate rates give certain outcomes") {
  SourceModel m = testutil::fig1_model();

  // Zero secret rate: a single secret value, so guessing and decoding are
  // both trivially right.
  CodeRealization one_secret = draw_code(m, 2, FixedRates{0.3, 0.0}, 7);
  CHECK(one_secret.total_s == 1);
  CHECK(fa_probability_exact(m, one_secret) == doctest::Approx(1.0));
  CHECK(fr_probability_exact(m, one_secret, DecodingMetric::map()) ==
        doctest::Approx(0.0));
  CHECK(fr_probability_exact(m, one_secret, DecodingMetric::likelihood(1.0)) ==
        doctest::Approx(0.0));

  // Helper rate ln 2 at blocklength 2 integerizes to exactly 4 bins.
  CodeRealization four_bins =
      draw_code(m, 2, FixedRates{std::log(2.0), 0.2}, 3);
  CHECK(four_bins.total_w == 4);

  // Noise-free observation: the decoder sees the source exactly.
  SourceModel clean = testutil::make_model({{0.4, 0.0}, {0.0, 0.6}});
  CodeRealization id_code = fixture_code(clean, 1, 1, 2, {0, 0}, {0, 1});
  CHECK(fr_probability_exact(clean, id_code, DecodingMetric::map()) ==
        doctest::Approx(0.0));
  CHECK(fr_probability_exact(clean, id_code, DecodingMetric::likelihood(1.0)) ==
        doctest::Approx(0.0));
}

TEST_CASE("helper-only attack beats blind guessing on every realization") {
  SourceModel m = testutil::fig1_model();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    CodeRealization code = draw_code(m, 3, FixedRates{0.3, 0.4}, seed);
    double fa = fa_probability_exact(m, code);
    CHECK(fa >= 1.0 / double(code.total_s) - 1e-12);
    CHECK(fa <= 1.0 + 1e-12);
  }
}

TEST_CASE("exact pass agrees with the posterior-by-posterior oracle") {
  SourceModel m = testutil::fig1_model();
  CodeRealization code = draw_code(m, 2, FixedRates{0.25, 0.35}, 11);

  std::vector<DecodingMetric> metrics;
  metrics.push_back(DecodingMetric::likelihood(1.7));
  metrics.push_back(DecodingMetric::min_entropy(2.5));
  metrics.push_back(DecodingMetric::mismatched(
      ConditionalPmf(m.joint().y_alphabet(), m.joint().x_alphabet(),
                     {Pmf(m.px().alphabet(), {0.7, 0.3}),
                      Pmf(m.px().alphabet(), {0.2, 0.8})}),
      1.3));
  metrics.push_back(
      DecodingMetric::variable_optimal(constant_table(m, 2, 0.4, 0.1)));

  for (const DecodingMetric& metric : metrics) {
    double fast = fr_probability_exact(m, code, metric);
    double slow = fr_via_posteriors(m, code, metric);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  }
}

TEST_CASE("reference law equal to the true channel reproduces the likelihood decoder") {
  SourceModel m = testutil::fig1_model();
  CodeRealization code = draw_code(m, 2, FixedRates{0.3, 0.3}, 5);
  double a =
      fr_probability_exact(m, code, DecodingMetric::likelihood(1.4));
  double b = fr_probability_exact(
      m, code, DecodingMetric::mismatched(m.x_given_y(), 1.4));
  CHECK(a == b);
}

TEST_CASE("constant rate table reduces the adaptive score to the entropy score") {
  SourceModel m = testutil::fig1_model();
  CodeRealization code = draw_code(m, 3, FixedRates{0.35, 0.25}, 9);
  double varopt = fr_probability_exact(
      m, code, DecodingMetric::variable_optimal(constant_table(m, 3, 0.5, 0.2)));
  double minent =
      fr_probability_exact(m, code, DecodingMetric::min_entropy(1.0));
  CHECK(varopt == doctest::Approx(minent).epsilon(1e-12));
}

TEST_CASE("posterior normalization, point masses, and empty bins") {
  SourceModel m = testutil::fig1_model();
  // Both symbols share helper bin 0, so bin 1 is empty.
  CodeRealization code = fixture_code(m, 1, 2, 2, {0, 0}, {0, 1});

  PosteriorResult live = gld_posterior(m, code, DecodingMetric::likelihood(1.0),
                                       {0}, 0);
  CHECK(!live.empty_bin);
  double sum = 0.0;
  for (std::size_t s = 0; s < live.posterior.size(); ++s)
    sum += live.posterior[s];
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(live.posterior[0] == doctest::Approx(0.32 / 0.38).epsilon(1e-12));
  CHECK(live.posterior[1] == doctest::Approx(0.06 / 0.38).epsilon(1e-12));

  PosteriorResult empty = gld_posterior(
      m, code, DecodingMetric::likelihood(1.0), {0}, 1);
  CHECK(empty.empty_bin);
  CHECK(empty.posterior[0] == doctest::Approx(0.5));

  // A noise-free channel makes the posterior a point mass.
  SourceModel clean = testutil::make_model({{0.4, 0.0}, {0.0, 0.6}});
  CodeRealization id_code = fixture_code(clean, 1, 1, 2, {0, 0}, {0, 1});
  PosteriorResult point = gld_posterior(
      clean, id_code, DecodingMetric::likelihood(1.0), {1}, 0);
  CHECK(point.posterior[0] == doctest::Approx(0.0));
  CHECK(point.posterior[1] == doctest::Approx(1.0));

  CHECK_THROWS_AS(gld_posterior(m, code, DecodingMetric::likelihood(1.0),
                                {0, 1}, 0),
                  InputError);
  CHECK_THROWS_AS(gld_posterior(m, code, DecodingMetric::likelihood(1.0),
                                {5}, 0),
                  InputError);
  CHECK_THROWS_AS(gld_posterior(m, code, DecodingMetric::likelihood(1.0),
                                {0}, 2),
                  InputError);
}

TEST_CASE("imposter audit finds a realizing observation on the hand fixture") {
  SourceModel m = testutil::fig1_model();
  CodeRealization code = fixture_code(m, 1, 1, 2, {0, 0}, {0, 1});
  // The attacker guesses secret 1 (mass 0.6); observing y1 makes the modal
  // decoder output 1 as well.
  AuditResult audit = imposter_audit(m, code, DecodingMetric::likelihood(1.0));
  CHECK(audit.bins_checked == 1);
  CHECK(audit.failures == 0);

  CodeRealization drawn = draw_code(m, 2, FixedRates{0.3, 0.3}, 13);
  AuditResult a2 = imposter_audit(m, drawn, DecodingMetric::map());
  CHECK(a2.bins_checked >= 1);
  CHECK(a2.bins_checked <= drawn.total_w);
  CHECK(a2.failures <= a2.bins_checked);

  // The exhaustive search is capped well below the exact-pass cap.
  CodeRealization big = draw_code(m, 17, FixedRates{0.1, 0.1}, 1);
  CHECK_THROWS_AS(imposter_audit(m, big, DecodingMetric::map()), InputError);
}

TEST_CASE("code drawing validates inputs and caps table sizes") {
  SourceModel m = testutil::fig1_model();
  CHECK_THROWS_AS(draw_code(m, 0, FixedRates{0.1, 0.1}, 1), InputError);
  CHECK_THROWS_AS(draw_code(m, 1, FixedRates{-0.1, 0.1}, 1), InputError);
  CHECK_THROWS_AS(draw_code(m, 1, FixedRates{0.1, -0.1}, 1), InputError);
  // Bin-count and sequence-space overflows are rejected up front.
  CHECK_THROWS_AS(draw_code(m, 1, FixedRates{40.0, 0.1}, 1), InputError);
  CHECK_THROWS_AS(draw_code(m, 25, FixedRates{0.1, 0.1}, 1), InputError);
  CHECK_THROWS_AS(draw_code(m, 10, FixedRates{1.2, 1.2}, 1), InputError);

  CHECK_THROWS_AS(fixture_code(m, 1, 0, 2, {0, 0}, {0, 1}), InputError);
  CHECK_THROWS_AS(fixture_code(m, 1, 1, 2, {0}, {0, 1}), InputError);
  CHECK_THROWS_AS(fixture_code(m, 1, 1, 2, {0, 1}, {0, 1}), InputError);

  CHECK_THROWS_AS(
      fr_probability_exact(m, fixture_code(m, 1, 1, 2, {0, 0}, {0, 1}),
                           DecodingMetric::likelihood(0.0)),
      InputError);
  CHECK_THROWS_AS(
      fr_probability_exact(m, fixture_code(m, 1, 1, 2, {0, 0}, {0, 1}),
                           DecodingMetric::variable_optimal(
                               constant_table(m, 3, 0.4, 0.1))),
      InputError);
}

TEST_CASE("code draws replay byte for byte") {
  SourceModel m = testutil::fig1_model();
  CodeRealization a = draw_code(m, 3, FixedRates{0.3, 0.3}, 7);
  CodeRealization b = draw_code(m, 3, FixedRates{0.3, 0.3}, 7);
  CHECK(a.f_local == b.f_local);
  CHECK(a.g_local == b.g_local);
  CodeRealization c = draw_code(m, 3, FixedRates{0.3, 0.3}, 8);
  CHECK((a.f_local != c.f_local || a.g_local != c.g_local));
}

TEST_CASE("ensemble report fields are consistent and replays are identical") {
  SourceModel m = testutil::fig1_model();
  SimReport rep = ensemble_estimate(m, 3, FixedRates{0.3, 0.3},
                                    DecodingMetric::likelihood(1.0), 12, 42);
  CHECK(rep.exact);
  CHECK(rep.n == 3);
  CHECK(rep.num_codes == 12);
  CHECK(rep.regime == Regime::Fixed);
  CHECK(rep.seed == 42);
  CHECK(rep.metric_tag == "gld:1");
  CHECK(rep.per_code_fr.size() == 12);
  CHECK(rep.per_code_fa.size() == 12);
  CHECK(rep.fr_ci.lo <= rep.p_fr + 1e-15);
  CHECK(rep.p_fr <= rep.fr_ci.hi + 1e-15);
  CHECK(rep.fa_ci.lo <= rep.p_fa + 1e-15);
  CHECK(rep.p_fa <= rep.fa_ci.hi + 1e-15);
  REQUIRE(rep.p_fr > 0.0);
  CHECK(rep.fr_exponent.value() ==
        doctest::Approx(-std::log(rep.p_fr) / 3.0).epsilon(1e-13));
  CHECK(rep.fa_exponent.value() ==
        doctest::Approx(-std::log(rep.p_fa) / 3.0).epsilon(1e-13));
  CHECK(rep.fr_exponent_ci.lo ==
        doctest::Approx(-std::log(rep.fr_ci.hi) / 3.0).epsilon(1e-13));

  SimReport again = ensemble_estimate(m, 3, FixedRates{0.3, 0.3},
                                      DecodingMetric::likelihood(1.0), 12, 42);
  CHECK(rep.per_code_fr == again.per_code_fr);
  CHECK(rep.per_code_fa == again.per_code_fa);
  CHECK(rep.p_fr == again.p_fr);
  CHECK(rep.fr_ci.lo == again.fr_ci.lo);
  CHECK(rep.fr_ci.hi == again.fr_ci.hi);

  CHECK_THROWS_AS(ensemble_estimate(m, 3, FixedRates{0.3, 0.3},
                                    DecodingMetric::map(), 0, 1),
                  InputError);
}

TEST_CASE("variable-rate ensemble uses per-type bin counts") {
  SourceModel m = testutil::fig1_model();
  SimplexGrid grid(m.px().alphabet(), 4);
  RateFunctionTable table = variable_rate_table(m, 0.08, grid);
  CodeRealization base = draw_code(m, 4, table, 21);
  CHECK(base.regime == Regime::Variable);
  // Feasible and infeasible types coexist at this budget.
  bool any_infeasible = false;
  for (std::size_t i = 0; i < table.grid.size(); ++i)
    if (!table.feasible(i)) any_infeasible = true;
  CHECK(any_infeasible);

  SimReport rep = ensemble_estimate(m, 4, table,
                                    DecodingMetric::likelihood(1.0), 6, 21);
  CHECK(rep.regime == Regime::Variable);
  CHECK(rep.p_fr >= 0.0);
  CHECK(rep.p_fr <= 1.0);
  CHECK(rep.p_fa >= 1.0 / double(base.total_s) - 1e-12);
  CHECK(rep.p_fa <= 1.0 + 1e-12);
}

TEST_CASE("error probability decays with blocklength when the exponent is positive") {
  SourceModel m = testutil::fig1_model();
  // Helper rate well above the conditional entropy: the analytic exponent
  // is solidly positive, so longer blocks help. (Closer to the entropy the
  // exponent is tiny and small-length prefactors mask the decay.)
  FixedRates rates{0.65, 0.25};
  SimReport r4 = ensemble_estimate(m, 4, rates,
                                   DecodingMetric::likelihood(1.0), 16, 3);
  SimReport r8 = ensemble_estimate(m, 8, rates,
                                   DecodingMetric::likelihood(1.0), 16, 3);
  REQUIRE(r4.p_fr > 0.0);
  REQUIRE(r8.p_fr > 0.0);
  CHECK(r8.p_fr <=
        r4.p_fr + r4.fr_ci.half_width() + r8.fr_ci.half_width());
  CHECK(r8.p_fr < r4.p_fr);
}

TEST_SUITE_END();
