#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snep/distributions.hpp"
#include "snep/vi.hpp"

namespace snep {

/// Firm i produces q_i at cost (c + r) q + beta (b / (b + 1)) k^(-1/b) q^((b + 1) / b), q_i <= q_bar.
struct FirmParams {
    double c = 0.0;
    double k = 1.0;
    double b = 1.0;
    RandomFactor q_bar = RandomFactor::constant(100.0);

    friend bool operator==(const FirmParams&, const FirmParams&) = default;
};

/// One draw of the random inputs entering the operator (capacities live in the box).
struct Realization {
    double r = 0.0;      ///< additive cost perturbation
    double s = 1.0;      ///< price scale
    Vector beta;         ///< multiplicative perturbation of the power-law cost, one per firm
    double alpha = 0.0;  ///< additive price perturbation
};

/**
 * Stochastic Cournot oligopoly with price p(Q) = S^a / (Q + e)^a + alpha.
 *
 * Randomness is separated: r and alpha shift the operator by a constant,
 * S scales the price part, beta_i scales each firm's marginal power-law
 * cost and q_bar_i bounds each firm's output. Immutable after construction.
 */
class CournotInstance {
public:
    CournotInstance(std::vector<FirmParams> firms, double a, double e, RandomFactor r,
                    RandomFactor s, std::vector<RandomFactor> beta = {},
                    RandomFactor alpha = RandomFactor::constant(0.0));

    std::size_t size() const noexcept { return firms_.size(); }
    const std::vector<FirmParams>& firms() const noexcept { return firms_; }
    double a() const noexcept { return a_; }
    double e() const noexcept { return e_; }
    const RandomFactor& r_factor() const noexcept { return r_; }
    const RandomFactor& s_factor() const noexcept { return s_; }
    const std::vector<RandomFactor>& beta_factors() const noexcept { return beta_; }
    const RandomFactor& alpha_factor() const noexcept { return alpha_; }

    /// Every factor replaced by its mean.
    Realization mean_realization() const;
    /// Box [0, mean q_bar].
    BoxSet mean_box() const;

    /// Deterministic five-firm market with bounds 100, a = 1/1.1, e = 1e-4, S = 5000, r = 0.
    static CournotInstance table1();

    // Cached k^(-1/b) and 1/b per firm.
    double marginal_scale(std::size_t i) const noexcept { return scale_[i]; }
    double marginal_exponent(std::size_t i) const noexcept { return inv_b_[i]; }

private:
    std::vector<FirmParams> firms_;
    double a_;
    double e_;
    RandomFactor r_;
    RandomFactor s_;
    std::vector<RandomFactor> beta_;
    RandomFactor alpha_;
    Vector scale_;
    Vector inv_b_;
};

/// Throws std::invalid_argument for q < 0 or beta <= 0.
double cost(const FirmParams& firm, double q, double r, double beta);

/// s^a / (Q + e)^a.
double price(const CournotInstance& instance, double total, double s);

/**
 * F_i(q) = c_i + r + beta_i k_i^(-1/b_i) q_i^(1/b_i) + a s^a q_i / (Q + e)^(a + 1)
 *          - s^a / (Q + e)^a - alpha,   Q = sum_j q_j.
 *
 * The terms in r and alpha are added last, so they form an exact constant shift.
 * `out` must have the same length as `q`. q_i < 0 is rejected.
 */
void operator_eval(const CournotInstance& instance, std::span<const double> q,
                   const Realization& w, std::span<double> out);
Vector operator_eval(const CournotInstance& instance, std::span<const double> q,
                     const Realization& w);

/// Hot-path variant without argument checks; q must be nonnegative and w.beta sized.
void operator_eval_unchecked(const CournotInstance& instance, std::span<const double> q,
                             const Realization& w, std::span<double> out) noexcept;

/// (p(Q) + alpha) q_i - cost_i(q_i).
double welfare(const CournotInstance& instance, std::size_t i, std::span<const double> q,
               const Realization& w);

/// h^T J h for the Jacobian J of the price part of the operator at q.
double jacobian_form_test(const CournotInstance& instance, std::span<const double> q,
                          std::span<const double> h, double s);

}  // namespace snep
