#include "snep/vi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "snep/random.hpp"

namespace snep {

namespace {

// Predictor acceptance: t ||g(y) - g(x)|| <= kAccept ||y - x||.
constexpr double kAccept = 0.9;
constexpr double kMinStep = 1e-14;
constexpr double kMaxStep = 1e8;

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(got) +
                                    " does not match box dimension " + std::to_string(want));
    }
}

}  // namespace

BoxSet BoxSet::uniform(std::size_t dim, double lo, double hi) {
    return BoxSet{Vector(dim, lo), Vector(dim, hi)};
}

bool BoxSet::contains(std::span<const double> x) const {
    if (x.size() != dimension()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    }
    return true;
}

Vector BoxSet::midpoint() const {
    Vector mid(dimension());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (lower[i] + upper[i]);
    return mid;
}

bool BoxSet::degenerate() const {
    for (std::size_t i = 0; i < dimension(); ++i) {
        if (lower[i] == upper[i]) return true;
    }
    return false;
}

void BoxSet::validate() const {
    if (lower.size() != upper.size()) {
        throw std::invalid_argument("BoxSet: lower and upper have different lengths");
    }
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
            throw std::invalid_argument("BoxSet: non-finite bound at coordinate " +
                                        std::to_string(i));
        }
        if (lower[i] > upper[i]) {
            throw std::invalid_argument("BoxSet: lower > upper at coordinate " +
                                        std::to_string(i));
        }
    }
}

void SolverConfig::validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("SolverConfig: max_iterations must be >= 1");
    if (!(initial_step > 0.0)) throw std::invalid_argument("SolverConfig: initial_step must be > 0");
    if (!(step_shrink > 0.0 && step_shrink < 1.0)) {
        throw std::invalid_argument("SolverConfig: step_shrink must lie in (0, 1)");
    }
    if (!(gamma > 0.0)) throw std::invalid_argument("SolverConfig: gamma must be > 0");
}

const char* to_string(SolveStatus status) noexcept {
    switch (status) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::non_finite: return "non_finite";
    }
    return "unknown";
}

void project_in_place(std::span<double> point, const BoxSet& set) {
    check_dim(point.size(), set.dimension(), "project");
    for (std::size_t i = 0; i < point.size(); ++i) {
        point[i] = std::clamp(point[i], set.lower[i], set.upper[i]);
    }
}

Vector project(std::span<const double> point, const BoxSet& set) {
    Vector out(point.begin(), point.end());
    project_in_place(out, set);
    return out;
}

double natural_residual(const VIProblem& problem, std::span<const double> point, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("natural_residual: gamma must be > 0");
    const std::size_t m = problem.set.dimension();
    check_dim(point.size(), m, "natural_residual");
    Vector g(m);
    problem.op(point, g);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double step = point[i] - gamma * (g[i] - problem.shift[i]);
        const double d = point[i] - std::clamp(step, problem.set.lower[i], problem.set.upper[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

ExtragradientSolver::ExtragradientSolver(SolverConfig config)
    : config_(config), step_(config.initial_step) {
    config_.validate();
}

bool ExtragradientSolver::evaluate(const VIProblem& problem, std::span<const double> x,
                                   std::span<double> g) {
    problem.op(x, g);
    ++evaluations_;
    bool finite = true;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] -= problem.shift[i];
        finite = finite && std::isfinite(g[i]);
    }
    return finite;
}

double ExtragradientSolver::residual_from(const VIProblem& problem, std::span<const double> x,
                                          std::span<const double> g) {
    const BoxSet& box = problem.set;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - std::clamp(x[i] - config_.gamma * g[i], box.lower[i], box.upper[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

SolveReport ExtragradientSolver::solve(const VIProblem& problem, std::span<double> x) {
    const BoxSet& box = problem.set;
    const std::size_t m = box.dimension();
    check_dim(x.size(), m, "solve_vi");
    check_dim(problem.shift.size(), m, "solve_vi shift");

    gx_.resize(m);
    y_.resize(m);
    gy_.resize(m);
    evaluations_ = 0;

    SolveReport report;
    report.uniqueness_certified = problem.strictly_monotone;

    project_in_place(x, box);
    if (!evaluate(problem, x, gx_)) {
        report.status = SolveStatus::non_finite;
        report.operator_evaluations = evaluations_;
        return report;
    }
    report.residual = residual_from(problem, x, gx_);

    double step = carry_step_ ? step_ : config_.initial_step;
    for (int it = 0; it < config_.max_iterations; ++it) {
        if (report.residual <= config_.tolerance) {
            report.status = SolveStatus::converged;
            report.operator_evaluations = evaluations_;
            step_ = step;
            return report;
        }

        // Predictor with backtracking.
        double dx = 0.0;
        double dg = 0.0;
        for (;;) {
            for (std::size_t i = 0; i < m; ++i) {
                y_[i] = std::clamp(x[i] - step * gx_[i], box.lower[i], box.upper[i]);
            }
            if (!evaluate(problem, y_, gy_)) {
                // Non-finite values inside the box are a defect of the operator, not the step.
                report.status = SolveStatus::non_finite;
                report.operator_evaluations = evaluations_;
                return report;
            }
            dx = distance(y_, x);
            dg = distance(gy_, gx_);
            if (step * dg <= kAccept * dx || dx == 0.0) break;
            step *= config_.step_shrink;
            if (step < kMinStep) break;
        }

        // Corrector.
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = std::clamp(x[i] - step * gy_[i], box.lower[i], box.upper[i]);
        }
        report.iterations = it + 1;
        if (!evaluate(problem, x, gx_)) {
            report.status = SolveStatus::non_finite;
            report.operator_evaluations = evaluations_;
            return report;
        }
        report.residual = residual_from(problem, x, gx_);

        if (step * dg <= 0.5 * kAccept * dx) step = std::min(step / config_.step_shrink, kMaxStep);
    }

    report.status = report.residual <= config_.tolerance ? SolveStatus::converged
                                                         : SolveStatus::max_iterations;
    report.operator_evaluations = evaluations_;
    step_ = config_.initial_step;
    return report;
}

SolveResult solve_vi(const VIProblem& problem, const SolverConfig& config,
                     std::optional<std::span<const double>> warm_start) {
    problem.set.validate();
    SolveResult result;
    if (warm_start) {
        check_dim(warm_start->size(), problem.set.dimension(), "solve_vi warm start");
        result.x.assign(warm_start->begin(), warm_start->end());
    } else {
        result.x = problem.set.midpoint();
    }
    ExtragradientSolver solver(config);
    result.report = solver.solve(problem, result.x);
    return result;
}

MonotonicityReport check_monotone(const OperatorFn& op, const BoxSet& set, std::size_t num_pairs,
                                  std::uint64_t seed) {
    if (num_pairs < 1) throw std::invalid_argument("check_monotone: num_pairs must be >= 1");
    set.validate();
    const std::size_t m = set.dimension();
    std::mt19937_64 gen(seed);
    auto draw = [&](Vector& v) {
        for (std::size_t i = 0; i < m; ++i) {
            v[i] = set.lower[i] + to_unit_open(gen()) * (set.upper[i] - set.lower[i]);
        }
    };

    MonotonicityReport report;
    report.min_ratio = std::numeric_limits<double>::infinity();
    Vector q(m), qp(m), fq(m), fqp(m);
    for (std::size_t p = 0; p < num_pairs; ++p) {
        draw(q);
        draw(qp);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) norm2 += (q[i] - qp[i]) * (q[i] - qp[i]);
        if (norm2 == 0.0) {
            ++report.pairs_skipped;
            continue;
        }
        op(q, fq);
        op(qp, fqp);
        double inner = 0.0;
        for (std::size_t i = 0; i < m; ++i) inner += (fq[i] - fqp[i]) * (q[i] - qp[i]);
        report.min_ratio = std::min(report.min_ratio, inner / norm2);
        ++report.pairs_evaluated;
    }
    report.strictly_monotone = report.pairs_evaluated > 0 && report.min_ratio > 0.0;
    if (report.pairs_evaluated == 0) report.min_ratio = 0.0;
    return report;
}

}  // namespace snep
