#include "snep/oracle.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "snep/discretize.hpp"
#include "snep/format.hpp"
#include "snep/random.hpp"
#include "snep/summation.hpp"

namespace snep {

namespace {

double draw(const RandomFactor& f, const CounterRng& rng, std::uint64_t index, std::uint64_t lane) {
    if (f.is_constant()) return f.mu();
    return f.quantile(rng.uniform(index, lane));
}

constexpr std::size_t kChunk = 1024;

}  // namespace

void draw_sample(const CournotInstance& instance, std::uint64_t seed, std::uint64_t index,
                 Realization& w, BoxSet& box) {
    const CournotLayout layout{instance.size()};
    const CounterRng rng(seed);
    const std::size_t m = instance.size();
    w.beta.resize(m);
    box.lower.assign(m, 0.0);
    box.upper.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        box.upper[i] = draw(instance.firms()[i].q_bar, rng, index, layout.q_bar(i));
        w.beta[i] = draw(instance.beta_factors()[i], rng, index, layout.beta(i));
    }
    w.alpha = draw(instance.alpha_factor(), rng, index, layout.alpha());
    w.r = draw(instance.r_factor(), rng, index, layout.r());
    w.s = draw(instance.s_factor(), rng, index, layout.s());
}

OracleReport monte_carlo_mean(const CournotInstance& instance, std::size_t n_samples,
                              std::uint64_t seed, const SolverConfig& config, unsigned workers) {
    if (n_samples < 1) throw std::invalid_argument("monte_carlo_mean: n_samples must be >= 1");
    config.validate();
    const std::size_t m = instance.size();

    // Common warm start: the solution at the mean realization.
    Vector start;
    {
        const Realization mean = instance.mean_realization();
        VIProblem problem{[&](std::span<const double> q, std::span<double> out) {
                              operator_eval_unchecked(instance, q, mean, out);
                          },
                          Vector(m, 0.0), instance.mean_box(), true};
        start = solve_vi(problem, config).x;
    }

    std::vector<double> values(n_samples * m);
    std::vector<unsigned char> failed(n_samples, 0);
    const std::size_t n_chunks = (n_samples + kChunk - 1) / kChunk;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&]() {
        try {
            ExtragradientSolver solver(config);
            Realization w;
            VIProblem problem;
            problem.strictly_monotone = true;
            problem.shift.assign(m, 0.0);
            problem.op = [&](std::span<const double> q, std::span<double> out) {
                operator_eval_unchecked(instance, q, w, out);
            };
            Vector x(m);
            for (;;) {
                const std::size_t chunk = next.fetch_add(1);
                if (chunk >= n_chunks) return;
                const std::size_t end = std::min(n_samples, (chunk + 1) * kChunk);
                for (std::size_t i = chunk * kChunk; i < end; ++i) {
                    draw_sample(instance, seed, i, w, problem.set);
                    x = start;
                    const SolveReport rep = solver.solve(problem, x);
                    failed[i] = rep.converged() ? 0 : 1;
                    std::copy(x.begin(), x.end(), values.begin() + i * m);
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(n_chunks);
        }
    };

    const unsigned n_workers =
        std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_chunks)));
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    OracleReport report;
    report.n_samples = n_samples;
    report.seed = seed;
    report.mean.resize(m);
    report.standard_error.resize(m);
    for (std::size_t i = 0; i < n_samples; ++i) report.failed_solves += failed[i];

    const double n = static_cast<double>(n_samples);
    for (std::size_t j = 0; j < m; ++j) {
        CompensatedSum sum;
        for (std::size_t i = 0; i < n_samples; ++i) sum.add(values[i * m + j]);
        const double mean = sum.value() / n;
        CompensatedSum sq;
        for (std::size_t i = 0; i < n_samples; ++i) {
            const double d = values[i * m + j] - mean;
            sq.add(d * d);
        }
        report.mean[j] = mean;
        report.standard_error[j] = n_samples > 1 ? std::sqrt(sq.value() / (n - 1.0) / n) : 0.0;
    }
    return report;
}

void write_oracle_csv(std::ostream& out, const OracleReport& report) {
    out << "component,mc_mean,std_error,n_samples,seed\n";
    for (std::size_t i = 0; i < report.mean.size(); ++i) {
        out << "q_" << i + 1 << ',';
        write_number(out, report.mean[i]);
        out << ',';
        write_number(out, report.standard_error[i]);
        out << ',' << report.n_samples << ',' << report.seed << '\n';
    }
}

}  // namespace snep
