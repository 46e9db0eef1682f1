#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace snep {

enum class FactorKind { constant, uniform, truncated_normal };

/// A bounded scalar random input: a point mass, a uniform law, or a normal truncated to [lo, hi].
class RandomFactor {
public:
    RandomFactor() = default;  ///< constant 0

    static RandomFactor constant(double value);
    static RandomFactor uniform(double lo, double hi);
    static RandomFactor truncated_normal(double mu, double sigma, double lo, double hi);

    FactorKind kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return kind_ == FactorKind::constant; }

    /// Support endpoints; both equal the value for constants.
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    /// Location parameter: the value (constant), unused (uniform), mu (truncated normal).
    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }

    double mean() const;
    double pdf(double x) const;
    double cdf(double x) const;
    /// Inverse CDF on (0, 1).
    double quantile(double u) const;

    friend bool operator==(const RandomFactor&, const RandomFactor&) = default;

private:
    FactorKind kind_ = FactorKind::constant;
    double mu_ = 0.0;
    double sigma_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
};

const char* to_string(FactorKind kind) noexcept;

/// P(a <= X < b). Requires a < b.
double cell_probability(const RandomFactor& factor, double a, double b);

/// E[X | a <= X < b]; the cell midpoint when the cell has probability zero.
double cell_conditional_mean(const RandomFactor& factor, double a, double b);

enum class RepresentativeRule { lower_endpoint, conditional_mean, midpoint };

const char* to_string(RepresentativeRule rule) noexcept;
RepresentativeRule parse_representative_rule(std::string_view name);

/// Uniform grid over the factor support with one representative and probability per cell.
struct Partition1D {
    RandomFactor factor;
    std::vector<double> breakpoints;      ///< size() + 1 entries
    std::vector<double> representatives;  ///< one per cell
    std::vector<double> probabilities;    ///< one per cell

    std::size_t size() const noexcept { return representatives.size(); }
};

/// Constants always yield the single cell [v, v] with probability 1.
Partition1D make_partition(const RandomFactor& factor, int n_cells, RepresentativeRule rule);

}  // namespace snep
