#include "snep/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "snep/format.hpp"

namespace snep {

void MomentAccumulator::add(double weight, std::span<const double> value, bool flagged) {
    if (value.size() != first_.size()) {
        throw std::invalid_argument("MomentAccumulator::add: dimension mismatch");
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
        const double wv = weight * value[i];
        first_[i].add(wv);
        second_[i].add(wv * value[i]);
    }
    weight_.add(weight);
    flagged_ += flagged ? 1 : 0;
    ++cells_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
    if (other.first_.size() != first_.size()) {
        throw std::invalid_argument("MomentAccumulator::merge: dimension mismatch");
    }
    for (std::size_t i = 0; i < first_.size(); ++i) {
        first_[i].merge(other.first_[i]);
        second_[i].merge(other.second_[i]);
    }
    weight_.merge(other.weight_);
    flagged_ += other.flagged_;
    cells_ += other.cells_;
}

MomentReport MomentAccumulator::report() const {
    MomentReport r;
    const std::size_t m = first_.size();
    r.mean.resize(m);
    r.second_moment.resize(m);
    r.variance.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        r.mean[i] = first_[i].value();
        r.second_moment[i] = second_[i].value();
        r.variance[i] = std::max(0.0, r.second_moment[i] - r.mean[i] * r.mean[i]);
    }
    r.total_weight = weight_.value();
    r.flagged_cells = flagged_;
    r.cells = cells_;
    return r;
}

MomentReport expectation(std::span<const double> weights, std::span<const double> values,
                         std::size_t dimension) {
    if (values.size() != weights.size() * dimension) {
        throw std::invalid_argument("expectation: values do not match weights x dimension");
    }
    MomentAccumulator acc(dimension);
    for (std::size_t c = 0; c < weights.size(); ++c) {
        acc.add(weights[c], values.subspan(c * dimension, dimension));
    }
    return acc.report();
}

MomentReport expectation(const StepSolution& solution) {
    if (!solution.stores_cells()) return solution.streamed.report();
    MomentAccumulator acc(solution.dimension);
    for (std::size_t c = 0; c < solution.weights.size(); ++c) {
        acc.add(solution.weights[c], solution.cell_value(c),
                !(solution.reports.empty() || solution.reports[c].status == SolveStatus::converged));
    }
    return acc.report();
}

std::vector<ConvergenceRow> convergence_report(std::span<const LadderLevel> levels) {
    if (levels.size() < 2) throw std::invalid_argument("convergence_report: need at least two levels");
    const std::size_t m = levels.front().report.mean.size();
    std::vector<ConvergenceRow> rows;
    for (std::size_t l = 1; l < levels.size(); ++l) {
        const auto& prev = levels[l - 1].report.mean;
        const auto& cur = levels[l].report.mean;
        if (prev.size() != m || cur.size() != m) {
            throw std::invalid_argument("convergence_report: levels have different dimensions");
        }
        ConvergenceRow row{l, levels[l].cells, std::vector<double>(m), 0.0};
        for (std::size_t i = 0; i < m; ++i) {
            row.delta[i] = std::abs(cur[i] - prev[i]);
            row.max_delta = std::max(row.max_delta, row.delta[i]);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const MomentReport& report) {
    out << "component,mean,variance\n";
    for (std::size_t i = 0; i < report.mean.size(); ++i) {
        out << "q_" << i + 1 << ',';
        write_number(out, report.mean[i]);
        out << ',';
        write_number(out, report.variance[i]);
        out << '\n';
    }
}

void write_convergence_csv(std::ostream& out, std::span<const ConvergenceRow> rows,
                           std::span<const std::string> cell_columns) {
    out << "level";
    for (const auto& c : cell_columns) out << ',' << c;
    const std::size_t m = rows.empty() ? 0 : rows.front().delta.size();
    for (std::size_t i = 0; i < m; ++i) out << ",delta_" << i + 1;
    out << ",max_delta\n";
    for (const auto& row : rows) {
        out << row.level;
        for (std::size_t c = 0; c < cell_columns.size(); ++c) {
            out << ',' << (c < row.cells.size() ? row.cells[c] : 0);
        }
        for (double d : row.delta) {
            out << ',';
            write_number(out, d);
        }
        out << ',';
        write_number(out, row.max_delta);
        out << '\n';
    }
}

}  // namespace snep
