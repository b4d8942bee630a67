#include <gtest/gtest.h>

#include "drgame/analytic.hpp"
#include "drgame/game.hpp"
#include "drgame/metrics.hpp"

using namespace drgame;
using namespace drgame::analytic;

namespace {

TwoPeriodScenario uniform_five() { return {{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}}; }

} // namespace

TEST(Phi, Endpoints)
{
    EXPECT_DOUBLE_EQ(phi(0.0, 7), 0.0);
    EXPECT_DOUBLE_EQ(phi(1.0, 7), 1.0);
    EXPECT_LT(phi(0.5, 7), 0.5);
}

TEST(DailyEquilibrium, UniformFiveAtHalf)
{
    const auto eq = dp_equilibrium(uniform_five(), 0.5);
    for (std::size_t n = 0; n < 5; ++n) {
        EXPECT_NEAR(eq.peak[n], 0.75, 1e-12);
        EXPECT_NEAR(eq.offpeak[n], 0.25, 1e-12);
    }
}

TEST(DailyEquilibrium, AlphaOneIsPreference)
{
    Rng rng(1);
    const auto s = random_scenario(rng, 6);
    const auto eq = dp_equilibrium(s, 1.0);
    for (std::size_t n = 0; n < 6; ++n) EXPECT_DOUBLE_EQ(eq.peak[n], s.preferred_peak[n]);
}

TEST(DailyEquilibrium, AlphaZeroIsDegenerate)
{
    EXPECT_THROW(dp_equilibrium(uniform_five(), 0.0), DegenerateError);
    EXPECT_DOUBLE_EQ(dp_aggregate_peak(uniform_five(), 0.0), 2.5);
}

TEST(DailyEquilibrium, AggregateMatchesSum)
{
    Rng rng(2);
    for (int k = 0; k < 10; ++k) {
        const auto s = random_scenario(rng, 3 + k % 5);
        const double alpha = uniform(rng, 0.01, 1.0);
        const auto eq = dp_equilibrium(s, alpha);
        double sum = 0.0;
        for (double v : eq.peak) sum += v;
        EXPECT_NEAR(sum, dp_aggregate_peak(s, alpha), 1e-12);
    }
}

TEST(HourlyEquilibrium, UniformFiveAtZero)
{
    const auto eq = hp_equilibrium(uniform_five(), 0.0);
    double sum = 0.0;
    for (std::size_t n = 0; n < 5; ++n) {
        EXPECT_NEAR(eq.peak[n], 0.5, 1e-12);
        sum += eq.peak[n];
    }
    EXPECT_NEAR(sum, 2.5, 1e-12);
}

TEST(HourlyEquilibrium, AggregateMatchesSum)
{
    Rng rng(3);
    for (int k = 0; k < 10; ++k) {
        const auto s = random_scenario(rng, 2 + k % 8);
        const double alpha = uniform(rng, 0.0, 1.0);
        const auto eq = hp_equilibrium(s, alpha);
        double sum = 0.0;
        for (double v : eq.peak) sum += v;
        EXPECT_NEAR(sum, hp_aggregate_peak(s, alpha), 1e-12);
    }
}

TEST(ClosedFormCosts, Endpoints)
{
    Rng rng(4);
    const auto s = random_scenario(rng, 5);
    const double e = s.total_energy(), d = s.peak_gap();
    const auto zero = closed_form_costs(s, 0.0);
    EXPECT_NEAR(zero.dp_system_cost, 0.5 * e * e, 1e-12);
    EXPECT_NEAR(zero.hp_system_cost, 0.5 * e * e, 1e-12);
    const auto one = closed_form_costs(s, 1.0);
    EXPECT_NEAR(one.dp_system_cost, 0.5 * (e * e + d * d), 1e-12);
    EXPECT_NEAR(one.hp_system_cost, 0.5 * (e * e + d * d), 1e-12);
    EXPECT_DOUBLE_EQ(one.dp_social_cost, 0.0);
}

TEST(ClosedFormCosts, UniformFiveEfficiency)
{
    const auto s = uniform_five();
    const double opt = optimal_system_cost(s);
    for (int i = 1; i < 20; ++i) {
        const double alpha = i / 20.0;
        const auto c = closed_form_costs(s, alpha);
        EXPECT_NEAR(c.dp_system_cost / opt - 1.0, alpha * alpha, 1e-12);
        EXPECT_GT(c.dp_system_cost - c.hp_system_cost, 0.0);
    }
}

TEST(ClosedFormCosts, GapFormula)
{
    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const auto s = random_scenario(rng, 2 + k % 8);
        const double alpha = uniform(rng, 0.0, 1.0);
        const auto c = closed_form_costs(s, alpha);
        EXPECT_NEAR(system_cost_gap(s, alpha), c.dp_system_cost - c.hp_system_cost, 1e-10);
    }
}

TEST(TwoPeriodScenario, RejectsBrokenAssumptions)
{
    TwoPeriodScenario offpeak_heavy{{0.2, 0.2}, {1.0, 1.0}};
    EXPECT_THROW(offpeak_heavy.validate(), ValidationError);
    TwoPeriodScenario lopsided{{0.0, 3.0, 3.0}, {1.0, 3.0, 3.0}};
    EXPECT_THROW(lopsided.validate(), ValidationError);
    TwoPeriodScenario mismatch{{1.0}, {1.0, 1.0}};
    EXPECT_THROW(mismatch.validate(), ValidationError);
    EXPECT_THROW(TwoPeriodScenario{}.validate(), ValidationError);
}

TEST(TwoPeriodScenario, RandomScenariosAreValid)
{
    Rng rng(6);
    for (int k = 0; k < 50; ++k) EXPECT_NO_THROW(random_scenario(rng, 2 + k % 9).validate());
}

TEST(TwoPeriodScenario, GameInstanceIsValid)
{
    Rng rng(7);
    const auto s = random_scenario(rng, 4);
    const auto g = to_game_instance(s, 0.3, Mechanism::HourlyProportional);
    EXPECT_NO_THROW(g.validate());
    EXPECT_NEAR(system_cost(g, minimize_system_cost(g)), optimal_system_cost(s), 1e-8);
}
