#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "snep/discretize.hpp"
#include "snep/summation.hpp"

namespace snep {

/// Mean, second moment and variance of the step solution. Uses the stored cells when present,
/// otherwise the moments streamed during the sweep.
MomentReport expectation(const StepSolution& solution);

/// Moments of explicit (weight, value) cells; values row-major with `dimension` columns.
MomentReport expectation(std::span<const double> weights, std::span<const double> values,
                         std::size_t dimension);

/// One refinement level of a ladder: cell counts per varying factor plus its moments.
struct LadderLevel {
    std::vector<std::size_t> cells;  ///< e.g. (n_r, n_s)
    MomentReport report;
};

struct ConvergenceRow {
    std::size_t level = 0;  ///< index of the finer level
    std::vector<std::size_t> cells;
    std::vector<double> delta;  ///< |mean(level) - mean(level - 1)|
    double max_delta = 0.0;
};

/// Successive mean differences along a refinement ladder. Needs at least two levels.
std::vector<ConvergenceRow> convergence_report(std::span<const LadderLevel> levels);

/// component,mean,variance
void write_summary_csv(std::ostream& out, const MomentReport& report);

/// level,<cell columns>,delta_1..delta_m,max_delta
void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows,
                           std::span<const std::string> cell_columns);

}  // namespace snep
