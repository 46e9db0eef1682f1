#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snep/cournot.hpp"
#include "snep/distributions.hpp"
#include "snep/summation.hpp"
#include "snep/vi.hpp"

namespace snep {

inline constexpr std::size_t kDefaultCellCap = 100'000'000;

/// Thrown when the Cartesian grid would exceed the configured cell cap.
class CellCapExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Per-factor cell indices of one Cartesian cell.
struct CellIndex {
    std::vector<std::size_t> per_factor;

    friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/**
 * Cartesian product of one-dimensional partitions, enumerated in
 * lexicographic order with the last factor varying fastest.
 * Cells are addressed by a linear index in [0, size()).
 */
class CellGrid {
public:
    explicit CellGrid(std::vector<Partition1D> partitions, std::size_t cell_cap = kDefaultCellCap);

    std::size_t size() const noexcept { return size_; }
    std::size_t factor_count() const noexcept { return partitions_.size(); }
    const Partition1D& partition(std::size_t f) const { return partitions_.at(f); }
    const std::vector<Partition1D>& partitions() const noexcept { return partitions_; }

    CellIndex index(std::size_t linear) const;
    void decode(std::size_t linear, std::span<std::size_t> out) const noexcept;
    double weight(std::span<const std::size_t> index) const noexcept;

    /// Visits every cell once in lexicographic order: fn(const CellIndex&, double weight).
    void for_each(const std::function<void(const CellIndex&, double)>& fn) const;

private:
    std::vector<Partition1D> partitions_;
    std::vector<std::size_t> extents_;
    std::size_t size_ = 1;
};

/// Same as constructing a CellGrid; throws CellCapExceeded with a sizing message.
CellGrid enumerate_cells(std::vector<Partition1D> partitions,
                         std::size_t cell_cap = kDefaultCellCap);

/// Frozen representatives and weight of one cell of a Cournot grid.
struct CellProblem {
    Realization realization;
    BoxSet box;
    double weight = 0.0;
};

/// How each random input of a Cournot instance is cut into cells.
struct FactorDiscretization {
    int cells = 1;
    RepresentativeRule rule = RepresentativeRule::lower_endpoint;

    friend bool operator==(const FactorDiscretization&, const FactorDiscretization&) = default;
};

/// Constant factors always get a single cell regardless of the requested count.
struct DiscretizationSpec {
    FactorDiscretization r{1, RepresentativeRule::lower_endpoint};
    FactorDiscretization s{1, RepresentativeRule::lower_endpoint};
    FactorDiscretization alpha{1, RepresentativeRule::lower_endpoint};
    FactorDiscretization beta{1, RepresentativeRule::lower_endpoint};   ///< applied to every firm
    FactorDiscretization q_bar{1, RepresentativeRule::conditional_mean};  ///< applied to every firm

    /// Multiplies every cell count by `factor`.
    DiscretizationSpec refined(int factor) const;

    friend bool operator==(const DiscretizationSpec&, const DiscretizationSpec&) = default;
};

/**
 * Factor layout of a Cournot grid, outermost first:
 * q_bar_1..q_bar_m, beta_1..beta_m, alpha, r, s.
 * The price scale s varies fastest, so consecutive cells differ only slightly.
 */
struct CournotLayout {
    std::size_t firms = 0;

    std::size_t q_bar(std::size_t i) const noexcept { return i; }
    std::size_t beta(std::size_t i) const noexcept { return firms + i; }
    std::size_t alpha() const noexcept { return 2 * firms; }
    std::size_t r() const noexcept { return 2 * firms + 1; }
    std::size_t s() const noexcept { return 2 * firms + 2; }
    std::size_t factor_count() const noexcept { return 2 * firms + 3; }

    std::vector<std::string> factor_names() const;
};

CellGrid make_cournot_grid(const CournotInstance& instance, const DiscretizationSpec& spec,
                           std::size_t cell_cap = kDefaultCellCap);

/// Fills `cell` with the representatives, bound box and weight of grid cell `index`.
void fill_cell_problem(const CellGrid& grid, std::span<const std::size_t> index, CellProblem& cell);
CellProblem cell_problem(const CellGrid& grid, std::size_t linear);

/**
 * VI of one cell: operator q -> F(q; r = 0, s, beta, alpha = 0) and constant
 * shift (alpha - r) 1, so that the additive randomness sits entirely in the shift.
 * The returned problem refers to `instance` and `cell`; both must outlive it.
 */
VIProblem build_cell_problem(const CournotInstance& instance, const CellProblem& cell);

struct CellReport {
    int iterations = 0;
    double residual = 0.0;
    SolveStatus status = SolveStatus::converged;
};

struct SweepOptions {
    unsigned workers = 1;
    /// Cells per work unit; fixed so results do not depend on the worker count.
    std::size_t block_size = 8192;
    /// Keep every cell solution; otherwise only the streamed moments are retained.
    bool store_cells = true;
    /// Fraction of cells allowed to miss the tolerance before solve_all throws.
    double max_flagged_fraction = 0.0;
};

/// Thrown by solve_all when too many cell problems fail.
class SweepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Piecewise-constant approximation: one solution vector per grid cell.
struct StepSolution {
    CellGrid grid;
    std::size_t dimension = 0;
    std::vector<double> values;   ///< row-major, size() x dimension; empty unless stored
    std::vector<double> weights;  ///< empty unless stored
    std::vector<CellReport> reports;
    MomentAccumulator streamed;   ///< always filled, block by block in grid order
    std::size_t flagged_cells = 0;
    long total_iterations = 0;

    bool stores_cells() const noexcept { return !weights.empty(); }
    std::span<const double> cell_value(std::size_t linear) const {
        return {values.data() + linear * dimension, dimension};
    }
};

/// Solves every cell, warm-starting each from the previous cell of its block.
StepSolution solve_all(const CournotInstance& instance, const CellGrid& grid,
                       const SolverConfig& config, const SweepOptions& options = {});

/// Writes the cell dump: indices, representatives, weight, solution, residual, iterations.
void write_cells_csv(std::ostream& out, const StepSolution& solution);

struct MeanTruncation {
    std::vector<double> values;  ///< one per cell, lexicographic
    std::size_t quadrature_flags = 0;
    std::size_t null_cells = 0;
};

/**
 * Replaces `target` by its conditional mean on every cell of the grid,
 * integrating against the factor densities with 16-point Gauss-Legendre
 * per dimension. Zero on cells of probability zero. A cell is flagged
 * when the 8-point rule disagrees beyond `tolerance` (relative).
 */
MeanTruncation mean_truncation(const CellGrid& grid,
                               const std::function<double(std::span<const double>)>& target,
                               double tolerance = 1e-10);

}  // namespace snep
