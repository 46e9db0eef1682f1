#include "run.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <string>

#include "snep/aggregate.hpp"
#include "snep/discretize.hpp"
#include "snep/format.hpp"
#include "snep/oracle.hpp"

namespace snep::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

SweepOptions sweep_options(const RunConfig& c, bool store) {
    SweepOptions o;
    o.workers = c.run.threads;
    o.store_cells = store;
    o.max_flagged_fraction = c.run.max_flagged_fraction;
    return o;
}

void print_means(std::ostream& log, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        log << (i ? "," : "");
        write_number(log, v[i]);
    }
    log << '\n';
}

void run_deterministic(const RunConfig& c, const fs::path& dir, RunOutcome& outcome, std::ostream& log) {
    const CournotInstance inst = mean_instance(c.instance());
    const CellGrid grid = make_cournot_grid(inst, DiscretizationSpec{}, c.run.cell_cap);
    const StepSolution sol = solve_all(inst, grid, c.solver, sweep_options(c, true));
    outcome.summary = expectation(sol);

    for (std::size_t i = 0; i < sol.dimension; ++i) log << (i ? ",q_" : "q_") << i + 1;
    log << '\n';
    print_means(log, outcome.summary.mean);

    const fs::path path = dir / "summary.csv";
    auto out = open_output(path);
    write_summary_csv(out, outcome.summary);
    outcome.files.push_back(path);
    if (sol.flagged_cells) {
        log << "solve did not converge: " << to_string(sol.reports.front().status) << '\n';
        outcome.exit_code = kExitSolverFailure;
    }
}

StepSolution discretized(const RunConfig& c, const CournotInstance& inst, const DiscretizationSpec& spec,
                         bool store, std::ostream& log) {
    const CellGrid grid = make_cournot_grid(inst, spec, c.run.cell_cap);
    const auto t0 = Clock::now();
    StepSolution sol = solve_all(inst, grid, c.solver, sweep_options(c, store));
    log << grid.size() << " cells solved in " << seconds_since(t0) << " s (" << sol.total_iterations
        << " iterations, " << sol.flagged_cells << " flagged)\n";
    return sol;
}

void run_discretize(const RunConfig& c, const fs::path& dir, RunOutcome& outcome, std::ostream& log) {
    const CournotInstance inst = c.instance();
    const StepSolution sol = discretized(c, inst, c.discretization, c.run.cells_csv, log);
    outcome.summary = expectation(sol);
    print_means(log, outcome.summary.mean);

    const fs::path summary = dir / "summary.csv";
    auto out = open_output(summary);
    write_summary_csv(out, outcome.summary);
    outcome.files.push_back(summary);
    if (c.run.cells_csv) {
        const fs::path cells = dir / "cells.csv";
        auto cout = open_output(cells);
        write_cells_csv(cout, sol);
        outcome.files.push_back(cells);
    }
    if (sol.flagged_cells) outcome.exit_code = kExitSolverFailure;
}

void run_oracle(const RunConfig& c, const fs::path& dir, RunOutcome& outcome, std::ostream& log) {
    const auto t0 = Clock::now();
    const OracleReport rep = monte_carlo_mean(c.instance(), c.run.n_samples, c.run.seed, c.solver, c.run.threads);
    log << rep.n_samples << " samples solved in " << seconds_since(t0) << " s (" << rep.failed_solves
        << " failed)\n";
    print_means(log, rep.mean);
    outcome.summary.mean = rep.mean;
    outcome.summary.cells = rep.n_samples;

    const fs::path path = dir / "oracle.csv";
    auto out = open_output(path);
    write_oracle_csv(out, rep);
    outcome.files.push_back(path);
    if (rep.failed_solves) outcome.exit_code = kExitSolverFailure;
}

void run_ladder(const RunConfig& c, const fs::path& dir, RunOutcome& outcome, std::ostream& log) {
    const CournotInstance inst = c.instance();
    const DiscretizationSpec& base = c.discretization;

    // n_r and n_s always; the other factor groups only when they are actually split.
    std::vector<std::string> columns{"n_r", "n_s"};
    std::vector<const FactorDiscretization DiscretizationSpec::*> members{&DiscretizationSpec::r,
                                                                          &DiscretizationSpec::s};
    if (base.alpha.cells > 1) {
        columns.push_back("n_alpha");
        members.push_back(&DiscretizationSpec::alpha);
    }
    if (base.beta.cells > 1) {
        columns.push_back("n_beta");
        members.push_back(&DiscretizationSpec::beta);
    }
    if (base.q_bar.cells > 1) {
        columns.push_back("n_q_bar");
        members.push_back(&DiscretizationSpec::q_bar);
    }

    std::vector<LadderLevel> levels;
    int factor = 1;
    bool flagged = false;
    for (int l = 0; l < c.run.ladder_levels; ++l, factor *= c.run.ladder_factor) {
        const DiscretizationSpec spec = base.refined(factor);
        LadderLevel level;
        for (auto m : members) level.cells.push_back(static_cast<std::size_t>((spec.*m).cells));
        log << "level " << l << ": ";
        const StepSolution sol = discretized(c, inst, spec, false, log);
        level.report = expectation(sol);
        flagged = flagged || sol.flagged_cells > 0;
        levels.push_back(std::move(level));
    }
    const auto rows = convergence_report(levels);
    outcome.summary = levels.back().report;
    print_means(log, outcome.summary.mean);

    const fs::path path = dir / "ladder.csv";
    auto out = open_output(path);
    write_convergence_csv(out, rows, columns);
    outcome.files.push_back(path);
    if (flagged) outcome.exit_code = kExitSolverFailure;
}

RandomFactor at_mean(const RandomFactor& f) { return RandomFactor::constant(f.mean()); }

}  // namespace

CournotInstance mean_instance(const CournotInstance& inst) {
    std::vector<FirmParams> firms = inst.firms();
    for (auto& f : firms) f.q_bar = at_mean(f.q_bar);
    std::vector<RandomFactor> beta;
    for (const auto& b : inst.beta_factors()) beta.push_back(at_mean(b));
    return CournotInstance(firms, inst.a(), inst.e(), at_mean(inst.r_factor()), at_mean(inst.s_factor()), beta,
                           at_mean(inst.alpha_factor()));
}

RunOutcome run(const RunConfig& config, std::ostream& log) {
    RunOutcome outcome;
    const fs::path dir = config.run.out.empty() ? fs::path(".") : fs::path(config.run.out);
    try {
        fs::create_directories(dir);
        switch (config.run.mode) {
            case Mode::deterministic: run_deterministic(config, dir, outcome, log); break;
            case Mode::discretize: run_discretize(config, dir, outcome, log); break;
            case Mode::oracle: run_oracle(config, dir, outcome, log); break;
            case Mode::ladder: run_ladder(config, dir, outcome, log); break;
        }
    } catch (const CellCapExceeded& e) {
        log << "error: " << e.what() << '\n';
        outcome.exit_code = kExitInfeasible;
    } catch (const SweepFailure& e) {
        log << "error: " << e.what() << '\n';
        outcome.exit_code = kExitSolverFailure;
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << '\n';
        outcome.exit_code = kExitInfeasible;
    } catch (const std::runtime_error& e) {
        log << "error: " << e.what() << '\n';
        outcome.exit_code = kExitInfeasible;
    }
    return outcome;
}

}  // namespace snep::cli
