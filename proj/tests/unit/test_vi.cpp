#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "snep/cournot.hpp"
#include "snep/vi.hpp"
#include "support/oracles.hpp"

using namespace snep;

namespace {

VIProblem affine_problem(const std::vector<std::vector<double>>& M, const Vector& d, BoxSet box) {
    VIProblem p;
    p.op = [M, d](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            out[i] = d[i];
            for (std::size_t j = 0; j < d.size(); ++j) out[i] += M[i][j] * x[j];
        }
    };
    p.shift.assign(d.size(), 0.0);
    p.set = std::move(box);
    p.strictly_monotone = true;
    return p;
}

VIProblem scalar_problem(std::function<double(double)> f, double lo, double hi) {
    VIProblem p;
    p.op = [f](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
    p.shift = {0.0};
    p.set = BoxSet{{lo}, {hi}};
    return p;
}

// Random symmetric positive definite matrix B B^T + 0.1 I.
std::vector<std::vector<double>> random_spd(std::size_t m, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> B(m, std::vector<double>(m)), M(m, std::vector<double>(m));
    for (auto& row : B) for (auto& v : row) v = u(gen);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += B[i][k] * B[j][k];
            M[i][j] = s + (i == j ? 0.1 : 0.0);
        }
    }
    return M;
}

}  // namespace

TEST_CASE("project clamps onto the box") {
    const BoxSet box = BoxSet::uniform(2, 0.0, 4.0);
    CHECK(project(std::vector{5.0, -3.0}, box) == Vector{4.0, 0.0});
    CHECK(project(std::vector{1.0, 2.0}, box) == Vector{1.0, 2.0});
    CHECK(project(std::vector{0.5}, BoxSet{{0.0}, {0.0}}) == Vector{0.0});
    CHECK_THROWS_AS(project(std::vector{1.0}, box), std::invalid_argument);
}

TEST_CASE("projection is idempotent and nearest") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int t = 0; t < 200; ++t) {
        BoxSet box = BoxSet::uniform(4, 0.0, 0.0);
        for (std::size_t i = 0; i < 4; ++i) {
            const double a = u(gen), b = u(gen);
            box.lower[i] = std::min(a, b);
            box.upper[i] = std::max(a, b);
        }
        Vector x{u(gen), u(gen), u(gen), u(gen)};
        const Vector p = project(x, box);
        CHECK(project(p, box) == p);
        CHECK(box.contains(p));
        double dp = 0.0;
        for (std::size_t i = 0; i < 4; ++i) dp += (x[i] - p[i]) * (x[i] - p[i]);
        for (int k = 0; k < 20; ++k) {
            double dz = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                const double z = box.lower[i] + (box.upper[i] - box.lower[i]) * (u(gen) + 10.0) / 20.0;
                dz += (x[i] - z) * (x[i] - z);
            }
            CHECK(dp <= dz);
        }
    }
}

TEST_CASE("BoxSet validation") {
    CHECK_THROWS_AS((BoxSet{{1.0}, {0.0}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((BoxSet{{0.0}, {INFINITY}}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((BoxSet{{0.0, 0.0}, {1.0}}).validate(), std::invalid_argument);
    CHECK_NOTHROW((BoxSet{{0.0}, {0.0}}).validate());
}

TEST_CASE("natural residual examples") {
    CHECK(natural_residual(scalar_problem([](double x) { return x; }, -1, 1), std::vector{0.0}, 1.0) == 0.0);
    CHECK(natural_residual(scalar_problem([](double x) { return x; }, 1, 2), std::vector{1.0}, 1.0) == 0.0);
    CHECK(natural_residual(scalar_problem([](double x) { return x - 3.0; }, 0, 1), std::vector{0.0}, 1.0) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(natural_residual(scalar_problem([](double x) { return x; }, 0, 1), std::vector{0.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("zero residual implies the VI inequality at every vertex") {
    std::mt19937_64 gen(11);
    for (std::size_t m = 1; m <= 6; ++m) {
        const auto M = random_spd(m, gen);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Vector d(m);
        for (auto& v : d) v = u(gen);
        const BoxSet box = BoxSet::uniform(m, -1.0, 1.0);
        const auto exact = testing::affine_box_vi(M, d, box.lower, box.upper);
        REQUIRE(exact);
        const VIProblem p = affine_problem(M, d, box);
        CHECK(natural_residual(p, *exact, 1.0) < 1e-12);
        Vector fx(m);
        p.op(*exact, fx);
        for (std::size_t v = 0; v < (std::size_t{1} << m); ++v) {
            double inner = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double z = (v >> i) & 1 ? box.upper[i] : box.lower[i];
                inner += fx[i] * (z - (*exact)[i]);
            }
            CHECK(inner >= -1e-10);
        }
    }
}

TEST_CASE("solve_vi on simple problems") {
    SolverConfig cfg;
    SUBCASE("unconstrained zero of x - c") {
        const Vector c{0.3, -0.2, 0.7};
        VIProblem p;
        p.op = [&](std::span<const double> x, std::span<double> out) {
            for (std::size_t i = 0; i < 3; ++i) out[i] = x[i] - c[i];
        };
        p.shift.assign(3, 0.0);
        p.set = BoxSet::uniform(3, -1.0, 1.0);
        const auto res = solve_vi(p, cfg);
        REQUIRE(res.report.converged());
        for (std::size_t i = 0; i < 3; ++i) CHECK(res.x[i] == doctest::Approx(c[i]).epsilon(1e-7));
        CHECK(res.report.residual <= cfg.tolerance);
    }
    SUBCASE("degenerate coordinate stays fixed") {
        VIProblem p;
        p.op = [](std::span<const double> x, std::span<double> out) {
            out[0] = x[0] - 5.0;
            out[1] = x[1] + 0.5 * x[0];
        };
        p.shift = {0.0, 0.0};
        p.set = BoxSet{{2.0, -10.0}, {2.0, 10.0}};
        const auto res = solve_vi(p, cfg);
        REQUIRE(res.report.converged());
        CHECK(res.x[0] == 2.0);
        CHECK(res.x[1] == doctest::Approx(-1.0).epsilon(1e-7));
    }
    SUBCASE("non-finite operator is reported") {
        auto p = scalar_problem([](double) { return NAN; }, 0, 1);
        const auto res = solve_vi(p, cfg);
        CHECK(res.report.status == SolveStatus::non_finite);
    }
    SUBCASE("iteration cap is reported with the last residual") {
        SolverConfig tight = cfg;
        tight.max_iterations = 1;
        tight.tolerance = 1e-15;
        auto p = scalar_problem([](double x) { return 1e-3 * (x - 0.25); }, 0, 1);
        const auto res = solve_vi(p, tight);
        CHECK(res.report.status == SolveStatus::max_iterations);
        CHECK(res.report.residual > tight.tolerance);
    }
    SUBCASE("uniqueness flag follows the problem") {
        auto p = scalar_problem([](double) { return 0.0; }, 0, 1);
        CHECK_FALSE(solve_vi(p, cfg).report.uniqueness_certified);
    }
}

TEST_CASE("solver config validation") {
    SolverConfig c;
    c.tolerance = 0;
    CHECK_THROWS(c.validate());
    c = {};
    c.step_shrink = 1.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.max_iterations = 0;
    CHECK_THROWS(c.validate());
}

TEST_CASE("single-firm Cournot cell matches a bisection root") {
    std::vector<FirmParams> firm{{6.0, 5.0, 1.0, RandomFactor::constant(100.0)}};
    const CournotInstance inst(firm, 1.0 / 1.1, 1e-4, RandomFactor::constant(0.0),
                               RandomFactor::constant(5000.0));
    const Realization w = inst.mean_realization();
    auto scalar_f = [&](double q) {
        // Closed form of the operator with m = 1, written out independently.
        const double a = 1.0 / 1.1, s = 5000.0, e = 1e-4;
        return 6.0 + q / 5.0 + a * std::pow(s, a) * q / std::pow(q + e, a + 1.0) -
               std::pow(s, a) / std::pow(q + e, a);
    };
    const double root = testing::bisect(scalar_f, 1e-9, 100.0, 1e-12);
    CHECK(root == doctest::Approx(25.3855292360976).epsilon(1e-12));

    VIProblem p{[&](std::span<const double> q, std::span<double> out) { operator_eval(inst, q, w, out); },
                {0.0}, inst.mean_box(), true};
    const auto res = solve_vi(p, SolverConfig{});
    REQUIRE(res.report.converged());
    CHECK(std::abs(res.x[0] - root) < 1e-7);
}

TEST_CASE("deterministic five-firm market reproduces the published projection solution") {
    const CournotInstance inst = CournotInstance::table1();
    const Realization w = inst.mean_realization();
    VIProblem p{[&](std::span<const double> q, std::span<double> out) { operator_eval(inst, q, w, out); },
                Vector(5, 0.0), inst.mean_box(), true};
    const auto res = solve_vi(p, SolverConfig{});
    REQUIRE(res.report.converged());
    const double golden[] = {36.937, 41.817, 43.706, 42.659, 39.179};
    for (int i = 0; i < 5; ++i) CHECK(std::abs(res.x[i] - golden[i]) <= 5e-3);
}

TEST_CASE("solver agrees with active-set enumeration and ignores the warm start") {
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    SolverConfig cfg;
    for (int t = 0; t < 30; ++t) {
        const std::size_t m = 1 + t % 6;
        const auto M = random_spd(m, gen);
        Vector d(m);
        for (auto& v : d) v = u(gen);
        BoxSet box = BoxSet::uniform(m, 0.0, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            box.lower[i] = -std::abs(u(gen)) - 0.1;
            box.upper[i] = std::abs(u(gen)) + 0.1;
        }
        const auto exact = testing::affine_box_vi(M, d, box.lower, box.upper);
        REQUIRE(exact);
        const VIProblem p = affine_problem(M, d, box);
        const auto cold = solve_vi(p, cfg);
        Vector ws(m);
        for (auto& v : ws) v = 10.0 * u(gen);
        const auto warm = solve_vi(p, cfg, ws);
        REQUIRE(cold.report.converged());
        REQUIRE(warm.report.converged());
        // Error bound: residual / strong-monotonicity modulus, with the modulus >= 0.1.
        for (std::size_t i = 0; i < m; ++i) {
            CHECK(std::abs(cold.x[i] - (*exact)[i]) <= 10 * cfg.tolerance / 0.1);
            CHECK(std::abs(cold.x[i] - warm.x[i]) <= 10 * cfg.tolerance / 0.1);
        }
    }
}

TEST_CASE("check_monotone") {
    const BoxSet box = BoxSet::uniform(2, 0.0, 1.0);
    const OperatorFn id = [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0];
        out[1] = x[1];
    };
    const OperatorFn neg = [](std::span<const double> x, std::span<double> out) {
        out[0] = -x[0];
        out[1] = -x[1];
    };
    const auto a = check_monotone(id, box, 100, 3);
    CHECK(a.min_ratio == doctest::Approx(1.0));
    CHECK(a.strictly_monotone);
    const auto b = check_monotone(neg, box, 100, 3);
    CHECK(b.min_ratio == doctest::Approx(-1.0));
    CHECK_FALSE(b.strictly_monotone);

    const auto c = check_monotone(id, BoxSet{{0.5, 0.5}, {0.5, 0.5}}, 10, 1);
    CHECK(c.pairs_skipped == 10);
    CHECK(c.pairs_evaluated == 0);
    CHECK_FALSE(c.strictly_monotone);

    CHECK(check_monotone(id, box, 50, 9).min_ratio == check_monotone(id, box, 50, 9).min_ratio);
    CHECK_THROWS_AS(check_monotone(id, box, 0, 1), std::invalid_argument);
}
