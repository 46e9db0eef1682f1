#include "snep/discretize.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "snep/format.hpp"
#include "snep/quadrature.hpp"

namespace snep {

CellGrid::CellGrid(std::vector<Partition1D> partitions, std::size_t cell_cap)
    : partitions_(std::move(partitions)) {
    if (partitions_.empty()) throw std::invalid_argument("CellGrid: at least one factor required");
    extents_.reserve(partitions_.size());
    for (std::size_t f = 0; f < partitions_.size(); ++f) {
        const std::size_t n = partitions_[f].size();
        if (n == 0) throw std::invalid_argument("CellGrid: factor " + std::to_string(f) + " has no cells");
        if (size_ > cell_cap / n) {
            throw CellCapExceeded("grid needs more than " + std::to_string(cell_cap) +
                                  " cells (factor " + std::to_string(f) + " has " +
                                  std::to_string(n) + " cells); reduce the cell counts or raise the cap");
        }
        size_ *= n;
        extents_.push_back(n);
    }
    if (size_ > cell_cap) {
        throw CellCapExceeded("grid has " + std::to_string(size_) + " cells, cap is " +
                              std::to_string(cell_cap));
    }
}

void CellGrid::decode(std::size_t linear, std::span<std::size_t> out) const noexcept {
    for (std::size_t f = extents_.size(); f-- > 0;) {
        out[f] = linear % extents_[f];
        linear /= extents_[f];
    }
}

CellIndex CellGrid::index(std::size_t linear) const {
    if (linear >= size_) throw std::out_of_range("CellGrid::index: linear index out of range");
    CellIndex idx{std::vector<std::size_t>(extents_.size())};
    decode(linear, idx.per_factor);
    return idx;
}

double CellGrid::weight(std::span<const std::size_t> index) const noexcept {
    double w = 1.0;
    for (std::size_t f = 0; f < partitions_.size(); ++f) w *= partitions_[f].probabilities[index[f]];
    return w;
}

void CellGrid::for_each(const std::function<void(const CellIndex&, double)>& fn) const {
    CellIndex idx{std::vector<std::size_t>(extents_.size(), 0)};
    for (std::size_t linear = 0; linear < size_; ++linear) {
        fn(idx, weight(idx.per_factor));
        // Odometer increment, last factor fastest.
        for (std::size_t f = extents_.size(); f-- > 0;) {
            if (++idx.per_factor[f] < extents_[f]) break;
            idx.per_factor[f] = 0;
        }
    }
}

CellGrid enumerate_cells(std::vector<Partition1D> partitions, std::size_t cell_cap) {
    return CellGrid(std::move(partitions), cell_cap);
}

DiscretizationSpec DiscretizationSpec::refined(int factor) const {
    if (factor < 1) throw std::invalid_argument("DiscretizationSpec::refined: factor must be >= 1");
    DiscretizationSpec out = *this;
    for (FactorDiscretization* d : {&out.r, &out.s, &out.alpha, &out.beta, &out.q_bar}) {
        d->cells *= factor;
    }
    return out;
}

std::vector<std::string> CournotLayout::factor_names() const {
    std::vector<std::string> names(factor_count());
    for (std::size_t i = 0; i < firms; ++i) {
        names[q_bar(i)] = "q_bar_" + std::to_string(i + 1);
        names[beta(i)] = "beta_" + std::to_string(i + 1);
    }
    names[alpha()] = "alpha";
    names[r()] = "r";
    names[s()] = "s";
    return names;
}

CellGrid make_cournot_grid(const CournotInstance& instance, const DiscretizationSpec& spec,
                           std::size_t cell_cap) {
    const CournotLayout layout{instance.size()};
    std::vector<Partition1D> parts(layout.factor_count());
    for (std::size_t i = 0; i < instance.size(); ++i) {
        parts[layout.q_bar(i)] =
            make_partition(instance.firms()[i].q_bar, spec.q_bar.cells, spec.q_bar.rule);
        parts[layout.beta(i)] =
            make_partition(instance.beta_factors()[i], spec.beta.cells, spec.beta.rule);
    }
    parts[layout.alpha()] = make_partition(instance.alpha_factor(), spec.alpha.cells, spec.alpha.rule);
    parts[layout.r()] = make_partition(instance.r_factor(), spec.r.cells, spec.r.rule);
    parts[layout.s()] = make_partition(instance.s_factor(), spec.s.cells, spec.s.rule);
    return CellGrid(std::move(parts), cell_cap);
}

void fill_cell_problem(const CellGrid& grid, std::span<const std::size_t> index, CellProblem& cell) {
    const CournotLayout layout{(grid.factor_count() - 3) / 2};
    const std::size_t m = layout.firms;
    cell.realization.beta.resize(m);
    cell.box.lower.assign(m, 0.0);
    cell.box.upper.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        cell.box.upper[i] = grid.partition(layout.q_bar(i)).representatives[index[layout.q_bar(i)]];
        cell.realization.beta[i] =
            grid.partition(layout.beta(i)).representatives[index[layout.beta(i)]];
    }
    cell.realization.alpha = grid.partition(layout.alpha()).representatives[index[layout.alpha()]];
    cell.realization.r = grid.partition(layout.r()).representatives[index[layout.r()]];
    cell.realization.s = grid.partition(layout.s()).representatives[index[layout.s()]];
    cell.weight = grid.weight(index);
}

CellProblem cell_problem(const CellGrid& grid, std::size_t linear) {
    if ((grid.factor_count() < 3) || (grid.factor_count() - 3) % 2 != 0) {
        throw std::invalid_argument("cell_problem: grid does not have the Cournot factor layout");
    }
    const CellIndex idx = grid.index(linear);
    CellProblem cell;
    fill_cell_problem(grid, idx.per_factor, cell);
    return cell;
}

VIProblem build_cell_problem(const CournotInstance& instance, const CellProblem& cell) {
    if (cell.box.dimension() != instance.size()) {
        throw std::invalid_argument("build_cell_problem: box dimension does not match the instance");
    }
    cell.box.validate();
    VIProblem problem;
    const Realization* w = &cell.realization;
    const CournotInstance* inst = &instance;
    problem.op = [inst, w](std::span<const double> q, std::span<double> out) {
        Realization frozen = *w;
        frozen.r = 0.0;
        frozen.alpha = 0.0;
        operator_eval_unchecked(*inst, q, frozen, out);
    };
    problem.shift.assign(instance.size(), cell.realization.alpha - cell.realization.r);
    problem.set = cell.box;
    problem.strictly_monotone = true;
    return problem;
}

namespace {

// Per-worker state for the sweep; the operator closure points at `cell`.
struct SweepWorker {
    SweepWorker(const CournotInstance& instance, const SolverConfig& config)
        : solver(config) {
        problem.strictly_monotone = true;
        problem.op = [inst = &instance, w = &frozen](std::span<const double> q, std::span<double> out) {
            operator_eval_unchecked(*inst, q, *w, out);
        };
    }

    ExtragradientSolver solver;
    CellProblem cell;
    Realization frozen;
    VIProblem problem;
    std::vector<std::size_t> index;
    std::vector<std::size_t> prev_index;
    Vector x;
    Vector prev_x;
    std::size_t streak = 0;  ///< consecutive innermost successors ending at the last cell
};

// True when `b` follows `a` along the innermost factor with all outer indices equal.
bool innermost_successor(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    const std::size_t last = a.size() - 1;
    for (std::size_t f = 0; f < last; ++f) {
        if (a[f] != b[f]) return false;
    }
    return b[last] == a[last] + 1;
}

struct BlockResult {
    MomentAccumulator moments;
    std::size_t flagged = 0;
    long iterations = 0;
};

}  // namespace

StepSolution solve_all(const CournotInstance& instance, const CellGrid& grid,
                       const SolverConfig& config, const SweepOptions& options) {
    config.validate();
    const CournotLayout layout{instance.size()};
    if (grid.factor_count() != layout.factor_count()) {
        throw std::invalid_argument("solve_all: grid layout does not match the instance");
    }
    if (options.block_size == 0) throw std::invalid_argument("solve_all: block_size must be >= 1");

    const std::size_t m = instance.size();
    const std::size_t n_cells = grid.size();
    const std::size_t block = options.block_size;
    const std::size_t n_blocks = (n_cells + block - 1) / block;

    StepSolution sol{grid, m, {}, {}, {}, MomentAccumulator(m), 0, 0};
    if (options.store_cells) {
        sol.values.assign(n_cells * m, 0.0);
        sol.weights.assign(n_cells, 0.0);
        sol.reports.assign(n_cells, CellReport{});
    }
    std::vector<BlockResult> blocks(n_blocks, BlockResult{MomentAccumulator(m), 0, 0});

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&]() {
        try {
            SweepWorker wk(instance, config);
            wk.index.resize(grid.factor_count());
            wk.prev_index.resize(grid.factor_count());
            wk.prev_x.resize(m);
            wk.solver.set_step_carry(true);
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks) return;
                BlockResult& out = blocks[b];
                const std::size_t begin = b * block;
                const std::size_t end = std::min(n_cells, begin + block);
                for (std::size_t c = begin; c < end; ++c) {
                    grid.decode(c, wk.index);
                    fill_cell_problem(grid, wk.index, wk.cell);
                    wk.frozen = wk.cell.realization;
                    wk.frozen.r = 0.0;
                    wk.frozen.alpha = 0.0;
                    wk.problem.shift.assign(m, wk.cell.realization.alpha - wk.cell.realization.r);
                    wk.problem.set = wk.cell.box;
                    bool successor = false;
                    if (c == begin) {
                        wk.x = wk.cell.box.midpoint();
                        wk.streak = 0;
                        wk.solver.reset_step();
                    } else {
                        successor = innermost_successor(wk.prev_index, wk.index);
                        const bool extrapolate = successor && wk.streak >= 2;
                        for (std::size_t i = 0; i < m; ++i) {
                            const double last = wk.x[i];
                            // Linear predictor along the innermost factor.
                            if (extrapolate) wk.x[i] = 2.0 * last - wk.prev_x[i];
                            wk.prev_x[i] = last;
                        }
                    }
                    wk.streak = successor ? wk.streak + 1 : 1;
                    std::copy(wk.index.begin(), wk.index.end(), wk.prev_index.begin());

                    const SolveReport rep = wk.solver.solve(wk.problem, wk.x);
                    const bool flagged = !rep.converged();
                    out.moments.add(wk.cell.weight, wk.x, flagged);
                    out.flagged += flagged ? 1 : 0;
                    out.iterations += rep.iterations;
                    if (options.store_cells) {
                        std::copy(wk.x.begin(), wk.x.end(), sol.values.begin() + c * m);
                        sol.weights[c] = wk.cell.weight;
                        sol.reports[c] = CellReport{rep.iterations, rep.residual, rep.status};
                    }
                    if (flagged) {
                        wk.x = wk.cell.box.midpoint();
                        wk.streak = 0;
                    }
                }
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next.store(n_blocks);
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers,
                                                             static_cast<unsigned>(n_blocks)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    for (const BlockResult& b : blocks) {
        sol.streamed.merge(b.moments);
        sol.flagged_cells += b.flagged;
        sol.total_iterations += b.iterations;
    }

    if (static_cast<double>(sol.flagged_cells) >
        options.max_flagged_fraction * static_cast<double>(n_cells)) {
        throw SweepFailure(std::to_string(sol.flagged_cells) + " of " + std::to_string(n_cells) +
                           " cell problems did not reach the solver tolerance");
    }
    return sol;
}

void write_cells_csv(std::ostream& out, const StepSolution& solution) {
    if (!solution.stores_cells()) {
        throw std::invalid_argument("write_cells_csv: solution was computed without storing cells");
    }
    const CellGrid& grid = solution.grid;
    const CournotLayout layout{solution.dimension};
    const auto names = layout.factor_names();
    for (const auto& n : names) out << "idx_" << n << ',';
    for (const auto& n : names) out << "rep_" << n << ',';
    out << "weight";
    for (std::size_t i = 0; i < solution.dimension; ++i) out << ",q_" << i + 1;
    out << ",residual,iterations\n";

    std::vector<std::size_t> idx(grid.factor_count());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.decode(c, idx);
        for (std::size_t f = 0; f < idx.size(); ++f) out << idx[f] << ',';
        for (std::size_t f = 0; f < idx.size(); ++f) {
            write_number(out, grid.partition(f).representatives[idx[f]]);
            out << ',';
        }
        write_number(out, solution.weights[c]);
        for (double v : solution.cell_value(c)) {
            out << ',';
            write_number(out, v);
        }
        out << ',';
        write_number(out, solution.reports[c].residual);
        out << ',' << solution.reports[c].iterations << '\n';
    }
}

MeanTruncation mean_truncation(const CellGrid& grid,
                               const std::function<double(std::span<const double>)>& target,
                               double tolerance) {
    static const GaussRule fine = gauss_legendre(16);
    static const GaussRule coarse = gauss_legendre(8);

    const std::size_t d = grid.factor_count();
    std::vector<std::size_t> random_dims;
    for (std::size_t f = 0; f < d; ++f) {
        if (!grid.partition(f).factor.is_constant()) random_dims.push_back(f);
    }

    MeanTruncation result;
    result.values.resize(grid.size());
    std::vector<std::size_t> idx(d);
    std::vector<double> point(d);
    std::vector<std::size_t> node(random_dims.size());

    // Conditional mean of the target on one cell with the given rule; sets `all_equal`
    // when every sample coincides (the target is constant on the cell).
    auto cell_mean = [&](const GaussRule& rule, bool& all_equal) {
        const std::size_t q = rule.nodes.size();
        std::size_t total = 1;
        for (std::size_t k = 0; k < random_dims.size(); ++k) total *= q;
        CompensatedSum num, den;
        double first = 0.0;
        all_equal = true;
        std::fill(node.begin(), node.end(), 0);
        for (std::size_t t = 0; t < total; ++t) {
            double w = 1.0;
            for (std::size_t k = 0; k < random_dims.size(); ++k) {
                const Partition1D& p = grid.partition(random_dims[k]);
                const double a = p.breakpoints[idx[random_dims[k]]];
                const double b = p.breakpoints[idx[random_dims[k]] + 1];
                const double half = 0.5 * (b - a);
                const double x = 0.5 * (a + b) + half * rule.nodes[node[k]];
                point[random_dims[k]] = x;
                w *= half * rule.weights[node[k]] * p.factor.pdf(x);
            }
            const double fx = target(point);
            if (t == 0) first = fx;
            all_equal = all_equal && fx == first;
            num.add(w * fx);
            den.add(w);
            for (std::size_t k = random_dims.size(); k-- > 0;) {
                if (++node[k] < q) break;
                node[k] = 0;
            }
        }
        if (all_equal) return first;
        return num.value() / den.value();
    };

    for (std::size_t c = 0; c < grid.size(); ++c) {
        grid.decode(c, idx);
        for (std::size_t f = 0; f < d; ++f) {
            if (grid.partition(f).factor.is_constant()) point[f] = grid.partition(f).factor.mu();
        }
        if (grid.weight(idx) == 0.0) {
            result.values[c] = 0.0;
            ++result.null_cells;
            continue;
        }
        bool constant_fine = false;
        const double v = cell_mean(fine, constant_fine);
        result.values[c] = v;
        if (!constant_fine) {
            bool constant_coarse = false;
            const double check = cell_mean(coarse, constant_coarse);
            if (!(std::abs(check - v) <= tolerance * std::max(1.0, std::abs(v)))) {
                ++result.quadrature_flags;
            }
        }
    }
    return result;
}

}  // namespace snep
