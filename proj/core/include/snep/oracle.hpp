#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "snep/cournot.hpp"
#include "snep/vi.hpp"

namespace snep {

struct OracleReport {
    std::vector<double> mean;
    std::vector<double> standard_error;  ///< sample standard deviation / sqrt(n)
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::size_t failed_solves = 0;
};

/**
 * Sample-average estimate of E[u]: draws every random input by inverse CDF
 * from a counter-based stream (sample i depends only on seed and i), solves
 * the pointwise VI for each draw and averages. Each solve is warm-started
 * from the solution at the mean realization, so the report is bit-identical
 * for any worker count.
 */
OracleReport monte_carlo_mean(const CournotInstance& instance, std::size_t n_samples,
                              std::uint64_t seed, const SolverConfig& config,
                              unsigned workers = 1);

/// Realization and capacity box of sample `index`.
void draw_sample(const CournotInstance& instance, std::uint64_t seed, std::uint64_t index,
                 Realization& w, BoxSet& box);

/// component,mc_mean,std_error,n_samples,seed
void write_oracle_csv(std::ostream& out, const OracleReport& report);

}  // namespace snep
