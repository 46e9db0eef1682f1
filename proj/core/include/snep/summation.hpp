#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace snep {

/// Neumaier's compensated sum. Merging two partial sums keeps both compensations.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    void merge(const CompensatedSum& other) noexcept {
        add(other.sum_);
        comp_ += other.comp_;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Weighted first and second moments of vector-valued cells.
struct MomentReport {
    std::vector<double> mean;
    std::vector<double> second_moment;
    std::vector<double> variance;  ///< floored at 0
    double total_weight = 0.0;
    std::size_t flagged_cells = 0;
    std::size_t cells = 0;
};

/// Streaming reduction over (weight, value) pairs. merge() is associative; combine partials
/// in a fixed order for bit-reproducible results.
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t dim = 0) : first_(dim), second_(dim) {}

    std::size_t dimension() const noexcept { return first_.size(); }

    void add(double weight, std::span<const double> value, bool flagged = false);
    void merge(const MomentAccumulator& other);

    MomentReport report() const;

private:
    std::vector<CompensatedSum> first_;
    std::vector<CompensatedSum> second_;
    CompensatedSum weight_;
    std::size_t flagged_ = 0;
    std::size_t cells_ = 0;
};

}  // namespace snep
