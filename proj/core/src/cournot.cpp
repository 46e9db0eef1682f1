#include "snep/cournot.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace snep {

namespace {

// q^(1/b), continuously extended by 0 at q = 0.
inline double root_power(double q, double inv_b) noexcept {
    if (q <= 0.0) return 0.0;
    if (inv_b == 1.0) return q;
    return std::pow(q, inv_b);
}

void check_realization(const CournotInstance& instance, const Realization& w) {
    if (w.beta.size() != instance.size()) {
        throw std::invalid_argument("realization: beta has " + std::to_string(w.beta.size()) +
                                    " entries, expected " + std::to_string(instance.size()));
    }
    if (!(w.s > 0.0)) throw std::invalid_argument("realization: s must be > 0");
    for (double beta : w.beta) {
        if (!(beta > 0.0)) throw std::invalid_argument("realization: beta must be > 0");
    }
}

void check_quantities(std::span<const double> q, std::size_t m) {
    if (q.size() != m) {
        throw std::invalid_argument("quantity vector has " + std::to_string(q.size()) +
                                    " entries, expected " + std::to_string(m));
    }
    for (double v : q) {
        if (!(v >= 0.0)) throw std::invalid_argument("quantities must be nonnegative");
    }
}

}  // namespace

CournotInstance::CournotInstance(std::vector<FirmParams> firms, double a, double e,
                                 RandomFactor r, RandomFactor s, std::vector<RandomFactor> beta,
                                 RandomFactor alpha)
    : firms_(std::move(firms)), a_(a), e_(e), r_(r), s_(s), beta_(std::move(beta)),
      alpha_(alpha) {
    if (firms_.empty()) throw std::invalid_argument("CournotInstance: at least one firm required");
    if (!(a_ > 0.0 && a_ < 1.0)) {
        throw std::invalid_argument("CournotInstance: price exponent a must satisfy 0 < a < 1");
    }
    if (!(e_ > 0.0)) throw std::invalid_argument("CournotInstance: e must be > 0");
    if (!(s_.lo() > 0.0)) {
        throw std::invalid_argument("CournotInstance: price scale S must have support in (0, inf)");
    }
    if (beta_.empty()) beta_.assign(firms_.size(), RandomFactor::constant(1.0));
    if (beta_.size() != firms_.size()) {
        throw std::invalid_argument("CournotInstance: need one beta factor per firm");
    }
    for (const auto& f : beta_) {
        if (!(f.lo() > 0.0)) {
            throw std::invalid_argument("CournotInstance: beta factors must have support in (0, inf)");
        }
    }
    for (std::size_t i = 0; i < firms_.size(); ++i) {
        const FirmParams& f = firms_[i];
        if (!(f.c >= 0.0)) throw std::invalid_argument("firm " + std::to_string(i + 1) + ": c must be >= 0");
        if (!(f.k > 0.0)) throw std::invalid_argument("firm " + std::to_string(i + 1) + ": k must be > 0");
        if (!(f.b > 0.0)) throw std::invalid_argument("firm " + std::to_string(i + 1) + ": b must be > 0");
        if (!(f.q_bar.lo() >= 0.0)) {
            throw std::invalid_argument("firm " + std::to_string(i + 1) +
                                        ": production bound must be nonnegative");
        }
        inv_b_.push_back(1.0 / f.b);
        scale_.push_back(std::pow(f.k, -1.0 / f.b));
    }
}

Realization CournotInstance::mean_realization() const {
    Realization w;
    w.r = r_.mean();
    w.s = s_.mean();
    w.alpha = alpha_.mean();
    w.beta.reserve(beta_.size());
    for (const auto& f : beta_) w.beta.push_back(f.mean());
    return w;
}

BoxSet CournotInstance::mean_box() const {
    BoxSet box = BoxSet::uniform(size(), 0.0, 0.0);
    for (std::size_t i = 0; i < size(); ++i) box.upper[i] = firms_[i].q_bar.mean();
    return box;
}

CournotInstance CournotInstance::table1() {
    const double c[] = {10, 8, 6, 4, 2};
    const double b[] = {1.2, 1.1, 1.0, 0.9, 0.8};
    std::vector<FirmParams> firms;
    for (int i = 0; i < 5; ++i) firms.push_back({c[i], 5.0, b[i], RandomFactor::constant(100.0)});
    return CournotInstance(std::move(firms), 1.0 / 1.1, 1e-4, RandomFactor::constant(0.0),
                           RandomFactor::constant(5000.0));
}

double cost(const FirmParams& firm, double q, double r, double beta) {
    if (!(q >= 0.0)) throw std::invalid_argument("cost: q must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("cost: beta must be > 0");
    const double power = q > 0.0 ? std::pow(q, (firm.b + 1.0) / firm.b) : 0.0;
    return (firm.c + r) * q + beta * (firm.b / (firm.b + 1.0)) * std::pow(firm.k, -1.0 / firm.b) * power;
}

double price(const CournotInstance& instance, double total, double s) {
    if (!(total >= 0.0)) throw std::invalid_argument("price: total quantity must be >= 0");
    if (!(s > 0.0)) throw std::invalid_argument("price: s must be > 0");
    return std::pow(s / (total + instance.e()), instance.a());
}

void operator_eval_unchecked(const CournotInstance& instance, std::span<const double> q,
                             const Realization& w, std::span<double> out) noexcept {
    const std::size_t m = q.size();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += q[i];
    const double a = instance.a();
    const double base = total + instance.e();
    const double p = std::pow(w.s / base, a);  // s^a / (Q + e)^a
    const double slope = a * p / base;         // a s^a / (Q + e)^(a + 1)
    const double shift = w.r - w.alpha;
    for (std::size_t i = 0; i < m; ++i) {
        const double marginal =
            w.beta[i] * instance.marginal_scale(i) * root_power(q[i], instance.marginal_exponent(i));
        out[i] = (instance.firms()[i].c + marginal + slope * q[i] - p) + shift;
    }
}

void operator_eval(const CournotInstance& instance, std::span<const double> q,
                   const Realization& w, std::span<double> out) {
    check_quantities(q, instance.size());
    check_realization(instance, w);
    if (out.size() != q.size()) throw std::invalid_argument("operator_eval: output size mismatch");
    operator_eval_unchecked(instance, q, w, out);
}

Vector operator_eval(const CournotInstance& instance, std::span<const double> q,
                     const Realization& w) {
    Vector out(q.size());
    operator_eval(instance, q, w, out);
    return out;
}

double welfare(const CournotInstance& instance, std::size_t i, std::span<const double> q,
               const Realization& w) {
    if (i >= instance.size()) {
        throw std::out_of_range("welfare: firm index " + std::to_string(i) + " out of range");
    }
    check_quantities(q, instance.size());
    check_realization(instance, w);
    double total = 0.0;
    for (double v : q) total += v;
    return (price(instance, total, w.s) + w.alpha) * q[i] -
           cost(instance.firms()[i], q[i], w.r, w.beta[i]);
}

double jacobian_form_test(const CournotInstance& instance, std::span<const double> q,
                          std::span<const double> h, double s) {
    check_quantities(q, instance.size());
    if (h.size() != q.size()) throw std::invalid_argument("jacobian_form_test: h size mismatch");
    if (!(s > 0.0)) throw std::invalid_argument("jacobian_form_test: s must be > 0");
    double total = 0.0, sum_h = 0.0, sum_qh = 0.0, norm2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        total += q[i];
        sum_h += h[i];
        sum_qh += q[i] * h[i];
        norm2 += h[i] * h[i];
    }
    if (norm2 == 0.0) throw std::invalid_argument("jacobian_form_test: h must be nonzero");
    const double a = instance.a();
    const double base = total + instance.e();
    const double p = std::pow(s / base, a);
    const double dp = -a * p / base;                        // p'
    const double d2p = a * (a + 1.0) * p / (base * base);  // p''
    return -(dp * (sum_h * sum_h + norm2) + d2p * sum_h * sum_qh);
}

}  // namespace snep
