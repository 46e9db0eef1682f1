#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>
#include <sstream>

#include "snep/aggregate.hpp"
#include "snep/discretize.hpp"
#include "support/oracles.hpp"

using namespace snep;

namespace {

const RandomFactor kR = RandomFactor::truncated_normal(0.0, 0.25, -0.5, 0.5);
const RandomFactor kS = RandomFactor::truncated_normal(5000.0, 10.0, 4950.0, 5050.0);

CournotInstance with_factors(RandomFactor r, RandomFactor s) {
    const auto t = CournotInstance::table1();
    return CournotInstance(t.firms(), t.a(), t.e(), r, s);
}

Vector direct_solve(const CournotInstance& inst, const Realization& w, const BoxSet& box) {
    VIProblem p{[&](std::span<const double> q, std::span<double> out) { operator_eval(inst, q, w, out); },
                Vector(inst.size(), 0.0), box, true};
    auto res = solve_vi(p, SolverConfig{});
    REQUIRE(res.report.converged());
    return res.x;
}

}  // namespace

TEST_CASE("enumerate_cells order and weights") {
    auto r = make_partition(RandomFactor::uniform(0, 1), 2, RepresentativeRule::lower_endpoint);
    auto s = make_partition(RandomFactor::uniform(0, 1), 3, RepresentativeRule::lower_endpoint);
    const CellGrid grid = enumerate_cells({r, s});
    CHECK(grid.size() == 6);
    std::vector<CellIndex> seen;
    grid.for_each([&](const CellIndex& idx, double w) {
        seen.push_back(idx);
        CHECK(w == doctest::Approx(1.0 / 6.0));
    });
    REQUIRE(seen.size() == 6);
    CHECK(seen[0].per_factor == std::vector<std::size_t>{0, 0});
    CHECK(seen[1].per_factor == std::vector<std::size_t>{0, 1});
    CHECK(seen[3].per_factor == std::vector<std::size_t>{1, 0});
    for (std::size_t c = 0; c < 6; ++c) CHECK(grid.index(c) == seen[c]);

    const CellGrid single = enumerate_cells({make_partition(RandomFactor::constant(2), 5, RepresentativeRule::midpoint)});
    CHECK(single.size() == 1);
    CHECK(single.weight(single.index(0).per_factor) == 1.0);

    CHECK_THROWS_AS(enumerate_cells({r, s}, 5), CellCapExceeded);
    CHECK_THROWS_AS(enumerate_cells({}), std::invalid_argument);
    CHECK_THROWS_AS(grid.index(6), std::out_of_range);
}

TEST_CASE("full-size grid weights sum to one") {
    const auto inst = with_factors(kR, kS);
    DiscretizationSpec spec;
    spec.r.cells = 200;
    spec.s.cells = 20000;
    const CellGrid grid = make_cournot_grid(inst, spec);
    CHECK(grid.size() == 4'000'000);
    CompensatedSum total;
    std::vector<std::size_t> idx(grid.factor_count());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.decode(c, idx);
        total.add(grid.weight(idx));
    }
    CHECK(std::abs(total.value() - 1.0) <= 1e-9);
    CHECK_THROWS_AS(make_cournot_grid(inst, spec, 1'000'000), CellCapExceeded);
}

TEST_CASE("cell problems") {
    SUBCASE("deterministic cell equals the deterministic VI") {
        const auto inst = CournotInstance::table1();
        const CellGrid grid = make_cournot_grid(inst, DiscretizationSpec{});
        REQUIRE(grid.size() == 1);
        const CellProblem cell = cell_problem(grid, 0);
        CHECK(cell.weight == 1.0);
        const VIProblem p = build_cell_problem(inst, cell);
        const auto res = solve_vi(p, SolverConfig{});
        const double golden[] = {36.937, 41.817, 43.706, 42.659, 39.179};
        for (int i = 0; i < 5; ++i) CHECK(std::abs(res.x[i] - golden[i]) <= 5e-3);
    }
    SUBCASE("r enters only through the shift") {
        const auto inst = with_factors(RandomFactor::uniform(0.0, 1.0), RandomFactor::constant(5000));
        DiscretizationSpec spec;
        spec.r.cells = 2;
        const CellGrid grid = make_cournot_grid(inst, spec);
        const CellProblem c0 = cell_problem(grid, 0), c1 = cell_problem(grid, 1);
        CHECK(c0.realization.r == 0.0);
        CHECK(c1.realization.r == 0.5);
        const VIProblem p0 = build_cell_problem(inst, c0), p1 = build_cell_problem(inst, c1);
        for (std::size_t i = 0; i < 5; ++i) CHECK(p0.shift[i] - p1.shift[i] == 0.5);
        const Vector q{1, 2, 3, 4, 5};
        Vector f0(5), f1(5);
        p0.op(q, f0);
        p1.op(q, f1);
        CHECK(f0 == f1);
    }
    SUBCASE("operator minus shift matches operator_eval at the representatives") {
        const auto inst = with_factors(kR, kS);
        DiscretizationSpec spec;
        spec.r.cells = 7;
        spec.s.cells = 9;
        const CellGrid grid = make_cournot_grid(inst, spec);
        const CellProblem cell = cell_problem(grid, 40);
        const VIProblem p = build_cell_problem(inst, cell);
        const Vector q{10, 20, 30, 40, 50};
        Vector f(5);
        p.op(q, f);
        const auto direct = operator_eval(inst, q, cell.realization);
        for (std::size_t i = 0; i < 5; ++i) CHECK(f[i] - p.shift[i] == doctest::Approx(direct[i]).epsilon(1e-13));
    }
}

TEST_CASE("solve_all") {
    SUBCASE("all-constant factors give the deterministic solution") {
        const auto inst = CournotInstance::table1();
        const auto sol = solve_all(inst, make_cournot_grid(inst, {}), SolverConfig{});
        const auto direct = direct_solve(inst, inst.mean_realization(), inst.mean_box());
        for (std::size_t i = 0; i < 5; ++i) CHECK(sol.cell_value(0)[i] == doctest::Approx(direct[i]).epsilon(1e-9));
        const auto rep = expectation(sol);
        CHECK(rep.variance == Vector(5, 0.0));
    }
    SUBCASE("two-cell toy equals the average of two direct solves") {
        const auto inst = with_factors(RandomFactor::uniform(0.0, 1.0), RandomFactor::constant(5000));
        DiscretizationSpec spec;
        spec.r.cells = 2;
        const auto sol = solve_all(inst, make_cournot_grid(inst, spec), SolverConfig{});
        Realization w = inst.mean_realization();
        w.r = 0.0;
        const auto a = direct_solve(inst, w, inst.mean_box());
        w.r = 0.5;
        const auto b = direct_solve(inst, w, inst.mean_box());
        const auto rep = expectation(sol);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(rep.mean[i] - 0.5 * (a[i] + b[i])) <= 1e-7);
    }
    SUBCASE("every stored cell re-checks below tolerance and lies in its box") {
        std::vector<FirmParams> firms = CournotInstance::table1().firms();
        firms[0].q_bar = RandomFactor::uniform(20.0, 60.0);
        firms[4].q_bar = RandomFactor::truncated_normal(40.0, 5.0, 30.0, 50.0);
        std::vector<RandomFactor> beta(5, RandomFactor::constant(1.0));
        beta[2] = RandomFactor::uniform(0.8, 1.2);
        const CournotInstance inst(firms, 1.0 / 1.1, 1e-4, kR, kS, beta, RandomFactor::uniform(-0.2, 0.2));
        DiscretizationSpec spec;
        spec.r.cells = 3;
        spec.s.cells = 4;
        spec.alpha.cells = 2;
        spec.beta.cells = 2;
        spec.q_bar.cells = 3;
        const CellGrid grid = make_cournot_grid(inst, spec);
        CHECK(grid.size() == 3 * 3 * 2 * 2 * 3 * 4);
        SolverConfig cfg;
        const auto sol = solve_all(inst, grid, cfg);
        CHECK(sol.flagged_cells == 0);
        for (std::size_t c = 0; c < grid.size(); ++c) {
            const CellProblem cell = cell_problem(grid, c);
            const VIProblem p = build_cell_problem(inst, cell);
            CHECK(cell.box.contains(sol.cell_value(c)));
            CHECK(natural_residual(p, sol.cell_value(c), cfg.gamma) <= cfg.tolerance);
        }
        const auto rep = expectation(sol);
        CHECK(std::abs(rep.total_weight - 1.0) <= 1e-9);
        // Capacity-bound firms produce less on average than their bound mean.
        CHECK(rep.mean[0] <= firms[0].q_bar.mean());
    }
    SUBCASE("worker count and block size do not change the answer") {
        const auto inst = with_factors(kR, kS);
        DiscretizationSpec spec;
        spec.r.cells = 20;
        spec.s.cells = 200;
        const CellGrid grid = make_cournot_grid(inst, spec);
        SweepOptions one;
        SweepOptions three = one;
        three.workers = 3;
        one.block_size = three.block_size = 500;
        const auto a = solve_all(inst, grid, SolverConfig{}, one);
        const auto b = solve_all(inst, grid, SolverConfig{}, three);
        CHECK(a.values == b.values);
        CHECK(expectation(a).mean == expectation(b).mean);

        SweepOptions small = one;
        small.block_size = 37;
        const auto c = solve_all(inst, grid, SolverConfig{}, small);
        for (std::size_t k = 0; k < a.values.size(); ++k) CHECK(std::abs(a.values[k] - c.values[k]) <= 1e-7);

        SweepOptions streaming = three;
        streaming.store_cells = false;
        const auto d = solve_all(inst, grid, SolverConfig{}, streaming);
        CHECK_FALSE(d.stores_cells());
        const auto ra = expectation(a), rd = expectation(d);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(ra.mean[i] - rd.mean[i]) <= 1e-12);
    }
    SUBCASE("flagged cells fail the sweep") {
        const auto inst = with_factors(kR, RandomFactor::constant(5000));
        DiscretizationSpec spec;
        spec.r.cells = 3;
        SolverConfig cfg;
        cfg.max_iterations = 1;
        cfg.tolerance = 1e-14;
        CHECK_THROWS_AS(solve_all(inst, make_cournot_grid(inst, spec), cfg), SweepFailure);
        SweepOptions lenient;
        lenient.max_flagged_fraction = 1.0;
        const auto sol = solve_all(inst, make_cournot_grid(inst, spec), cfg, lenient);
        CHECK(sol.flagged_cells == 3);
        CHECK(expectation(sol).flagged_cells == 3);
    }
}

TEST_CASE("cell dump") {
    const auto inst = with_factors(kR, kS);
    DiscretizationSpec spec;
    spec.r.cells = 2;
    spec.s.cells = 3;
    const auto sol = solve_all(inst, make_cournot_grid(inst, spec), SolverConfig{});
    std::ostringstream out;
    write_cells_csv(out, sol);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("idx_q_bar_1,", 0) == 0);
    CHECK(header.find(",weight,q_1,q_2,q_3,q_4,q_5,residual,iterations") != std::string::npos);
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 6);
}

TEST_CASE("mean-value truncation") {
    SUBCASE("constants are preserved") {
        const CellGrid grid = enumerate_cells({make_partition(kR, 10, RepresentativeRule::lower_endpoint)});
        const auto m = mean_truncation(grid, [](std::span<const double>) { return 3.25; });
        for (double v : m.values) CHECK(v == 3.25);
    }
    SUBCASE("identity on a uniform factor gives cell midpoints") {
        const CellGrid grid =
            enumerate_cells({make_partition(RandomFactor::uniform(0, 1), 4, RepresentativeRule::lower_endpoint)});
        const auto m = mean_truncation(grid, [](std::span<const double> x) { return x[0]; });
        const double want[] = {0.125, 0.375, 0.625, 0.875};
        for (int k = 0; k < 4; ++k) CHECK(m.values[k] == doctest::Approx(want[k]).epsilon(1e-14));
    }
    SUBCASE("square on the truncated normal matches per-cell quadrature") {
        const auto part = make_partition(kR, 10, RepresentativeRule::lower_endpoint);
        const CellGrid grid = enumerate_cells({part});
        const auto m = mean_truncation(grid, [](std::span<const double> x) { return x[0] * x[0]; });
        CHECK(m.quadrature_flags == 0);
        const double frozen[] = {0.198017208172991182, 0.120104925353495993, 0.0616798740681043018,
                                 0.0227342494865277218, 0.00326276966020365551};
        for (std::size_t k = 0; k < 10; ++k) {
            const double a = part.breakpoints[k], b = part.breakpoints[k + 1];
            const double oracle =
                testing::integrate([](double t) { return t * t * testing::gauss_kernel(t, 0, 0.25); }, a, b, 1e-17) /
                testing::integrate([](double t) { return testing::gauss_kernel(t, 0, 0.25); }, a, b, 1e-17);
            CHECK(std::abs(m.values[k] - oracle) <= 1e-8);
            CHECK(std::abs(m.values[k] - frozen[k < 5 ? k : 9 - k]) <= 1e-8);
        }
    }
    SUBCASE("idempotent on cell-constant functions") {
        const auto pr = make_partition(kR, 5, RepresentativeRule::lower_endpoint);
        const auto ps = make_partition(kS, 4, RepresentativeRule::lower_endpoint);
        const CellGrid grid = enumerate_cells({pr, ps});
        auto target = [](std::span<const double> x) { return std::sin(3 * x[0]) + 1e-3 * x[1]; };
        const auto once = mean_truncation(grid, target);
        auto step = [&](std::span<const double> x) {
            std::size_t i = 0, j = 0;
            while (i + 1 < pr.size() && x[0] >= pr.breakpoints[i + 1]) ++i;
            while (j + 1 < ps.size() && x[1] >= ps.breakpoints[j + 1]) ++j;
            return once.values[i * ps.size() + j];
        };
        const auto twice = mean_truncation(grid, step);
        CHECK(twice.values == once.values);
    }
    SUBCASE("zero-probability cells map to zero") {
        Partition1D p = make_partition(RandomFactor::uniform(0, 1), 2, RepresentativeRule::midpoint);
        p.probabilities = {1.0, 0.0};
        const auto m = mean_truncation(enumerate_cells({p}), [](std::span<const double>) { return 5.0; });
        CHECK(m.values[1] == 0.0);
        CHECK(m.null_cells == 1);
    }
}

TEST_CASE("mean-value truncation contracts p-norms") {
    const auto pr = make_partition(kR, 8, RepresentativeRule::lower_endpoint);
    const auto ps = make_partition(kS, 3, RepresentativeRule::lower_endpoint);
    const CellGrid grid = enumerate_cells({pr, ps});
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        double c[4];
        for (double& v : c) v = u(gen);
        auto w = [&](std::span<const double> x) {
            const double r = x[0], s = (x[1] - 5000.0) / 50.0;
            return c[0] + c[1] * r + c[2] * r * r * s + c[3] * s * s * s;
        };
        const auto mw = mean_truncation(grid, w);
        for (double p : {2.0, 9.0 / 4.0}) {
            const auto mabs = mean_truncation(grid, [&](std::span<const double> x) { return std::pow(std::abs(w(x)), p); });
            double lhs = 0.0, rhs = 0.0;
            grid.for_each([&, k = std::size_t{0}](const CellIndex&, double weight) mutable {
                lhs += weight * std::pow(std::abs(mw.values[k]), p);
                rhs += weight * mabs.values[k];
                ++k;
            });
            CHECK(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("mean-value truncation converges pointwise") {
    auto w = [](std::span<const double> x) { return std::exp(2.0 * x[0]); };
    double prev = INFINITY;
    for (int n : {10, 40, 160}) {
        const auto part = make_partition(kR, n, RepresentativeRule::lower_endpoint);
        const auto m = mean_truncation(enumerate_cells({part}), w);
        double worst = 0.0;
        for (std::size_t k = 0; k < part.size(); ++k) {
            worst = std::max(worst, std::abs(m.values[k] - std::exp(2.0 * part.representatives[k])));
        }
        CHECK(worst < prev);
        prev = worst;
    }
}
