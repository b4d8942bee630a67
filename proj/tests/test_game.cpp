#include <gtest/gtest.h>

#include "drgame/analytic.hpp"
#include "drgame/game.hpp"
#include "drgame/metrics.hpp"
#include "drgame/validation.hpp"

using namespace drgame;

namespace {

analytic::TwoPeriodScenario uniform_five()
{
    return {{1.0, 1.0, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0, 1.0}};
}

BRDConfig tight()
{
    BRDConfig cfg;
    cfg.max_iterations = 5000;
    cfg.improvement_tol = 1e-16;
    return cfg;
}

} // namespace

TEST(BRD, AlphaOneStopsAtPreferences)
{
    Rng rng(1);
    const auto g = random_instance(rng, 6, 8, 1.0, Mechanism::DailyProportional);
    const auto eq = best_response_dynamics(g, random_feasible_loads(g, rng));
    EXPECT_TRUE(eq.converged);
    EXPECT_LE(eq.iterations_used, 2);
    for (std::size_t n = 0; n < g.users(); ++n) {
        for (std::size_t h = 0; h < g.hours(); ++h) EXPECT_NEAR(eq.loads(n, h), g.consumers[n].preferred_profile[h], 1e-8);
    }
}

TEST(BRD, SingleUserReachesQpOptimum)
{
    Rng rng(2);
    const auto g = random_instance(rng, 1, 6, 0.4, Mechanism::HourlyProportional);
    const auto eq = best_response_dynamics(g);
    EXPECT_TRUE(eq.converged);
    EXPECT_LE(eq.iterations_used, 2);
    const auto sol = solve_diagonal_qp(assemble_best_response(g, g.preferred_loads(), 0));
    for (std::size_t h = 0; h < 6; ++h) EXPECT_NEAR(eq.loads(0, h), sol.x[h], 1e-8);
}

TEST(BRD, TwoPeriodFixedPoint)
{
    const auto s = uniform_five();
    for (const auto m : {Mechanism::DailyProportional, Mechanism::HourlyProportional}) {
        const auto g = analytic::to_game_instance(s, 0.5, m);
        const auto eq = best_response_dynamics(g, tight());
        const auto ref = m == Mechanism::DailyProportional ? analytic::dp_equilibrium(s, 0.5) : analytic::hp_equilibrium(s, 0.5);
        for (std::size_t n = 0; n < 5; ++n) {
            EXPECT_NEAR(eq.loads(n, 0), ref.peak[n], 1e-6);
            EXPECT_NEAR(eq.loads(n, 1), ref.offpeak[n], 1e-6);
        }
    }
}

TEST(BRD, ConvergedRunHasSmallRegret)
{
    Rng rng(3);
    for (const auto m : {Mechanism::DailyProportional, Mechanism::HourlyProportional}) {
        const auto g = random_instance(rng, 8, 10, 0.3, m);
        BRDConfig cfg;
        const auto eq = best_response_dynamics(g, cfg);
        ASSERT_TRUE(eq.converged);
        for (double r : eq.per_user_regret) EXPECT_LE(r, cfg.improvement_tol);
    }
}

TEST(BRD, IterationCapIsReported)
{
    Rng rng(4);
    const auto g = random_instance(rng, 10, 12, 0.05, Mechanism::DailyProportional);
    BRDConfig cfg;
    cfg.max_iterations = 1;
    const auto eq = best_response_dynamics(g, cfg);
    EXPECT_FALSE(eq.converged);
    EXPECT_EQ(eq.iterations_used, 1);
}

TEST(BRD, PotentialNeverIncreases)
{
    Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const auto m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
        const auto g = random_instance(rng, 6, 6, uniform(rng, 0.0, 1.0), m);
        const auto eq = best_response_dynamics(g, random_feasible_loads(g, rng));
        const auto& t = eq.potential_trace;
        ASSERT_EQ(t.size(), 1 + g.users() * static_cast<std::size_t>(eq.iterations_used));
        double scale = 1.0;
        for (double v : t) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 1; i < t.size(); ++i) EXPECT_LE(t[i], t[i - 1] + 1e-9 * scale);
    }
}

TEST(BRD, SeedMakesRunsReproducible)
{
    Rng rng(6);
    const auto g = random_instance(rng, 7, 5, 0.2, Mechanism::HourlyProportional);
    BRDConfig cfg;
    cfg.seed = 99;
    const auto a = best_response_dynamics(g, cfg);
    const auto b = best_response_dynamics(g, cfg);
    EXPECT_EQ(a.loads, b.loads);
    EXPECT_EQ(a.potential_trace, b.potential_trace);
}

TEST(BRD, RejectsInfeasibleStart)
{
    Rng rng(7);
    const auto g = random_instance(rng, 3, 4, 0.2, Mechanism::HourlyProportional);
    auto start = g.preferred_loads();
    start(0, 0) += 1.0;
    EXPECT_THROW(best_response_dynamics(g, start), ValidationError);
}

TEST(BRDConfig, Validation)
{
    BRDConfig cfg;
    cfg.max_iterations = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.improvement_tol = 0.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Potential, DailyAtAlphaZeroIsSystemCost)
{
    Rng rng(8);
    const auto g = random_instance(rng, 4, 5, 0.0, Mechanism::DailyProportional);
    const auto l = random_feasible_loads(g, rng);
    EXPECT_NEAR(potential(g, l), system_cost(g, l), 1e-9);
}

TEST(Potential, DeviationIdentities)
{
    Rng rng(9);
    for (int k = 0; k < 40; ++k) {
        const auto m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
        const auto g = random_instance(rng, 4, 5, uniform(rng, 0.0, 1.0), m);
        const auto x = random_feasible_loads(g, rng);
        auto y = x;
        const std::size_t n = static_cast<std::size_t>(k) % 4;
        y.set_row(n, random_feasible_loads(g, rng).row(n));
        const double w = m == Mechanism::DailyProportional ? g.consumers[n].energy_need / g.total_energy() : 1.0;
        const double df = objective(g, x, n) - objective(g, y, n);
        const double dw = w * (potential(g, x) - potential(g, y));
        EXPECT_NEAR(df, dw, 1e-9 * std::max(1.0, std::abs(df)));
    }
}

TEST(Potential, DailyRejectsZeroEnergyUser)
{
    Rng rng(10);
    auto g = random_instance(rng, 2, 3, 0.5, Mechanism::DailyProportional);
    g.consumers[0].lower_bounds.assign(3, 0.0);
    g.consumers[0].energy_need = 0.0;
    g.consumers[0].preferred_profile.assign(3, 0.0);
    EXPECT_THROW(potential(g, g.preferred_loads()), ValidationError);
}

TEST(VerifyEquilibrium, PreferencesAtAlphaOne)
{
    Rng rng(11);
    const auto g = random_instance(rng, 5, 4, 1.0, Mechanism::HourlyProportional);
    const auto check = verify_equilibrium(g, g.preferred_loads(), 1e-12);
    EXPECT_TRUE(check.is_equilibrium);
    EXPECT_LE(check.max_regret, 1e-12);
}

TEST(VerifyEquilibrium, PerturbedUserHasRegret)
{
    Rng rng(12);
    const auto g = random_instance(rng, 5, 6, 0.5, Mechanism::DailyProportional);
    const auto eq = best_response_dynamics(g);
    ASSERT_TRUE(eq.converged);

    // Move 10% of user 1's energy from its fullest hour into hours with headroom.
    auto moved = eq.loads;
    const std::size_t n = 1;
    const auto& c = g.consumers[n];
    const double shift = 0.1 * c.energy_need;
    std::size_t from = 0;
    for (std::size_t h = 0; h < g.hours(); ++h) {
        if (moved(n, h) - c.lower_bounds[h] > moved(n, from) - c.lower_bounds[from]) from = h;
    }
    double take = std::min(shift, moved(n, from) - c.lower_bounds[from]);
    moved(n, from) -= take;
    for (std::size_t h = 0; h < g.hours() && take > 0.0; ++h) {
        if (h == from) continue;
        const double room = std::min(take, c.upper_bounds[h] - moved(n, h));
        moved(n, h) += room;
        take -= room;
    }
    ASSERT_LE(take, 1e-12);

    const auto check = verify_equilibrium(g, moved, 1e-9);
    EXPECT_GT(check.regret[n], 1e-6);
    EXPECT_FALSE(check.is_equilibrium);
}

TEST(Uniqueness, IndependentStartsAgree)
{
    Rng rng(13);
    for (int k = 0; k < 6; ++k) {
        const auto m = k % 2 ? Mechanism::HourlyProportional : Mechanism::DailyProportional;
        const auto g = random_instance(rng, 5, 5, uniform(rng, 0.1, 1.0), m);
        auto cfg = tight();
        cfg.seed = 1;
        const auto a = best_response_dynamics(g, random_feasible_loads(g, rng), cfg);
        cfg.seed = 2;
        const auto b = best_response_dynamics(g, random_feasible_loads(g, rng), cfg);
        for (std::size_t i = 0; i < a.loads.values().size(); ++i) {
            EXPECT_NEAR(a.loads.values()[i], b.loads.values()[i], 1e-5);
        }
    }
}

TEST(RandomFeasible, PointsAreFeasible)
{
    Rng rng(14);
    for (int k = 0; k < 20; ++k) {
        const auto g = random_instance(rng, 4, 7, 0.5, Mechanism::HourlyProportional);
        EXPECT_NO_THROW(check_feasible(g, random_feasible_loads(g, rng)));
    }
}
