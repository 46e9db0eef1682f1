#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace snep {

using Vector = std::vector<double>;

/// Axis-aligned box {x : lower <= x <= upper}. Coordinates with lower == upper are fixed.
struct BoxSet {
    Vector lower;
    Vector upper;

    static BoxSet uniform(std::size_t dim, double lo, double hi);

    std::size_t dimension() const noexcept { return lower.size(); }
    bool contains(std::span<const double> x) const;
    Vector midpoint() const;
    bool degenerate() const;  ///< true if some coordinate is fixed

    /// Throws std::invalid_argument unless lower <= upper, finite, same length.
    void validate() const;

    friend bool operator==(const BoxSet&, const BoxSet&) = default;
};

/// F : R^m -> R^m, written into `out` (same length as `x`).
using OperatorFn = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Find x in `set` with <op(x) - shift, z - x> >= 0 for every z in `set`.
struct VIProblem {
    OperatorFn op;
    Vector shift;
    BoxSet set;
    /// Caller's assertion that `op` is strictly monotone on `set`; copied to the report.
    bool strictly_monotone = false;
};

struct SolverConfig {
    double tolerance = 1e-8;  ///< on the natural residual, absolute
    int max_iterations = 100000;
    double initial_step = 1.0;
    double step_shrink = 0.5;
    double gamma = 1.0;  ///< scaling used inside the natural residual

    void validate() const;

    friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

enum class SolveStatus { converged, max_iterations, non_finite };

const char* to_string(SolveStatus status) noexcept;

struct SolveReport {
    SolveStatus status = SolveStatus::max_iterations;
    int iterations = 0;
    long operator_evaluations = 0;
    double residual = 0.0;
    bool uniqueness_certified = false;

    bool converged() const noexcept { return status == SolveStatus::converged; }
};

struct SolveResult {
    Vector x;
    SolveReport report;
};

/// Componentwise clamp onto the box. Throws std::invalid_argument on dimension mismatch.
Vector project(std::span<const double> point, const BoxSet& set);
void project_in_place(std::span<double> point, const BoxSet& set);

/// ||x - P(x - gamma (F(x) - shift))||_2. Zero exactly at solutions.
double natural_residual(const VIProblem& problem, std::span<const double> point, double gamma);

/**
 * Extragradient projection method with backtracking on the step size.
 *
 * Each iteration takes a predictor y = P(x - t g(x)) and corrector
 * x+ = P(x - t g(y)), g = F - shift. The step t is shrunk until
 * t ||g(y) - g(x)|| <= 0.9 ||y - x|| and allowed to grow again after easy
 * acceptances, so no Lipschitz constant is needed. Convergence holds for
 * continuous monotone F on a box.
 *
 * The workspace is reused between calls; one solver per thread.
 */
class ExtragradientSolver {
public:
    explicit ExtragradientSolver(SolverConfig config = {});

    const SolverConfig& config() const noexcept { return config_; }

    /// Solves in place: `x` is the warm start on entry (projected first) and the iterate on exit.
    SolveReport solve(const VIProblem& problem, std::span<double> x);

    /// When enabled, each solve starts from the last accepted step instead of initial_step.
    void set_step_carry(bool enabled) noexcept { carry_step_ = enabled; }
    void reset_step() noexcept { step_ = config_.initial_step; }

private:
    bool evaluate(const VIProblem& problem, std::span<const double> x, std::span<double> g);
    double residual_from(const VIProblem& problem, std::span<const double> x,
                         std::span<const double> g);

    SolverConfig config_;
    Vector gx_, y_, gy_, trial_;
    long evaluations_ = 0;
    double step_ = 1.0;
    bool carry_step_ = false;
};

/// Convenience wrapper; the initial iterate is the box midpoint unless a warm start is given.
SolveResult solve_vi(const VIProblem& problem, const SolverConfig& config,
                     std::optional<std::span<const double>> warm_start = std::nullopt);

struct MonotonicityReport {
    double min_ratio = 0.0;  ///< min <F(q)-F(q'), q-q'> / ||q-q'||^2
    bool strictly_monotone = false;
    std::size_t pairs_evaluated = 0;
    std::size_t pairs_skipped = 0;  ///< q == q' draws (degenerate boxes)
};

/// Samples pairs uniformly in the box with a seeded generator and records the worst monotonicity ratio.
MonotonicityReport check_monotone(const OperatorFn& op, const BoxSet& set, std::size_t num_pairs,
                                  std::uint64_t seed);

}  // namespace snep
