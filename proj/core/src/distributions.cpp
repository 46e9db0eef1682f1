#include "snep/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace snep {

namespace {

double std_normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_upper(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Phi(z2) - Phi(z1) for z1 <= z2, evaluated on the tail that avoids cancellation.
double normal_mass(double z1, double z2) {
    if (z1 >= 0.0) return std_normal_upper(z1) - std_normal_upper(z2);
    if (z2 <= 0.0) return std_normal_cdf(z2) - std_normal_cdf(z1);
    return 1.0 - std_normal_cdf(z1) - std_normal_upper(z2);
}

void require_interval(double a, double b, const char* what) {
    if (!(a < b)) throw std::invalid_argument(std::string(what) + ": cell requires a < b");
}

}  // namespace

RandomFactor RandomFactor::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("constant factor must be finite");
    RandomFactor f;
    f.kind_ = FactorKind::constant;
    f.mu_ = f.lo_ = f.hi_ = value;
    return f;
}

RandomFactor RandomFactor::uniform(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
        throw std::invalid_argument("uniform factor requires finite lo < hi");
    }
    RandomFactor f;
    f.kind_ = FactorKind::uniform;
    f.lo_ = lo;
    f.hi_ = hi;
    f.mu_ = 0.5 * (lo + hi);
    return f;
}

RandomFactor RandomFactor::truncated_normal(double mu, double sigma, double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
        throw std::invalid_argument("truncated_normal factor requires finite lo < hi");
    }
    if (!(std::isfinite(mu) && sigma > 0.0 && std::isfinite(sigma))) {
        throw std::invalid_argument("truncated_normal factor requires finite mu and sigma > 0");
    }
    RandomFactor f;
    f.kind_ = FactorKind::truncated_normal;
    f.mu_ = mu;
    f.sigma_ = sigma;
    f.lo_ = lo;
    f.hi_ = hi;
    if (!(normal_mass((lo - mu) / sigma, (hi - mu) / sigma) > 0.0)) {
        throw std::invalid_argument("truncated_normal factor has no mass on [lo, hi]");
    }
    return f;
}

double RandomFactor::mean() const {
    switch (kind_) {
        case FactorKind::constant: return mu_;
        case FactorKind::uniform: return 0.5 * (lo_ + hi_);
        case FactorKind::truncated_normal: {
            const double za = (lo_ - mu_) / sigma_;
            const double zb = (hi_ - mu_) / sigma_;
            return mu_ + sigma_ * (std_normal_pdf(za) - std_normal_pdf(zb)) / normal_mass(za, zb);
        }
    }
    return mu_;
}

double RandomFactor::pdf(double x) const {
    switch (kind_) {
        case FactorKind::constant: return 0.0;
        case FactorKind::uniform: return (x >= lo_ && x <= hi_) ? 1.0 / (hi_ - lo_) : 0.0;
        case FactorKind::truncated_normal: {
            if (x < lo_ || x > hi_) return 0.0;
            const double z = normal_mass((lo_ - mu_) / sigma_, (hi_ - mu_) / sigma_);
            return std_normal_pdf((x - mu_) / sigma_) / (sigma_ * z);
        }
    }
    return 0.0;
}

double RandomFactor::cdf(double x) const {
    if (kind_ == FactorKind::constant) return x < mu_ ? 0.0 : 1.0;
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    if (kind_ == FactorKind::uniform) return (x - lo_) / (hi_ - lo_);
    const double za = (lo_ - mu_) / sigma_;
    const double zb = (hi_ - mu_) / sigma_;
    return std::clamp(normal_mass(za, (x - mu_) / sigma_) / normal_mass(za, zb), 0.0, 1.0);
}

double RandomFactor::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile: u must lie in (0, 1)");
    switch (kind_) {
        case FactorKind::constant: return mu_;
        case FactorKind::uniform: return lo_ + u * (hi_ - lo_);
        case FactorKind::truncated_normal: {
            const boost::math::normal_distribution<double> standard;
            const double za = (lo_ - mu_) / sigma_;
            const double zb = (hi_ - mu_) / sigma_;
            const double mass = normal_mass(za, zb);
            double z = 0.0;
            const double p = std_normal_cdf(za) + u * mass;
            if (p < 0.5) {
                z = boost::math::quantile(standard, p);
            } else {
                const double q = std_normal_upper(zb) + (1.0 - u) * mass;
                z = boost::math::quantile(boost::math::complement(standard, q));
            }
            return std::clamp(mu_ + sigma_ * z, lo_, hi_);
        }
    }
    return mu_;
}

const char* to_string(FactorKind kind) noexcept {
    switch (kind) {
        case FactorKind::constant: return "constant";
        case FactorKind::uniform: return "uniform";
        case FactorKind::truncated_normal: return "truncated_normal";
    }
    return "unknown";
}

double cell_probability(const RandomFactor& factor, double a, double b) {
    require_interval(a, b, "cell_probability");
    switch (factor.kind()) {
        case FactorKind::constant:
            return (factor.mu() >= a && factor.mu() < b) ? 1.0 : 0.0;
        case FactorKind::uniform: {
            const double lo = std::max(a, factor.lo());
            const double hi = std::min(b, factor.hi());
            return hi > lo ? (hi - lo) / (factor.hi() - factor.lo()) : 0.0;
        }
        case FactorKind::truncated_normal: {
            const double lo = std::max(a, factor.lo());
            const double hi = std::min(b, factor.hi());
            if (!(hi > lo)) return 0.0;
            const double mu = factor.mu();
            const double s = factor.sigma();
            return normal_mass((lo - mu) / s, (hi - mu) / s) /
                   normal_mass((factor.lo() - mu) / s, (factor.hi() - mu) / s);
        }
    }
    return 0.0;
}

double cell_conditional_mean(const RandomFactor& factor, double a, double b) {
    require_interval(a, b, "cell_conditional_mean");
    const double midpoint = 0.5 * (a + b);
    switch (factor.kind()) {
        case FactorKind::constant:
            return (factor.mu() >= a && factor.mu() <= b) ? factor.mu() : midpoint;
        case FactorKind::uniform: {
            const double lo = std::max(a, factor.lo());
            const double hi = std::min(b, factor.hi());
            return hi > lo ? 0.5 * (lo + hi) : midpoint;
        }
        case FactorKind::truncated_normal: {
            const double lo = std::max(a, factor.lo());
            const double hi = std::min(b, factor.hi());
            if (!(hi > lo)) return midpoint;
            const double mu = factor.mu();
            const double s = factor.sigma();
            const double za = (lo - mu) / s;
            const double zb = (hi - mu) / s;
            const double mass = normal_mass(za, zb);
            if (!(mass > 0.0)) return midpoint;
            return std::clamp(mu + s * (std_normal_pdf(za) - std_normal_pdf(zb)) / mass, a, b);
        }
    }
    return midpoint;
}

const char* to_string(RepresentativeRule rule) noexcept {
    switch (rule) {
        case RepresentativeRule::lower_endpoint: return "lower_endpoint";
        case RepresentativeRule::conditional_mean: return "conditional_mean";
        case RepresentativeRule::midpoint: return "midpoint";
    }
    return "unknown";
}

RepresentativeRule parse_representative_rule(std::string_view name) {
    if (name == "lower_endpoint") return RepresentativeRule::lower_endpoint;
    if (name == "conditional_mean") return RepresentativeRule::conditional_mean;
    if (name == "midpoint") return RepresentativeRule::midpoint;
    throw std::invalid_argument("unknown representative rule '" + std::string(name) +
                                "' (expected lower_endpoint, conditional_mean or midpoint)");
}

Partition1D make_partition(const RandomFactor& factor, int n_cells, RepresentativeRule rule) {
    if (n_cells < 1) throw std::invalid_argument("make_partition: n_cells must be >= 1");
    Partition1D part;
    part.factor = factor;
    if (factor.is_constant()) {
        part.breakpoints = {factor.mu(), factor.mu()};
        part.representatives = {factor.mu()};
        part.probabilities = {1.0};
        return part;
    }

    const auto n = static_cast<std::size_t>(n_cells);
    const double lo = factor.lo();
    const double width = factor.hi() - lo;
    part.breakpoints.resize(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        part.breakpoints[k] = lo + width * static_cast<double>(k) / static_cast<double>(n);
    }
    part.breakpoints[n] = factor.hi();

    part.representatives.resize(n);
    part.probabilities.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = part.breakpoints[k];
        const double b = part.breakpoints[k + 1];
        part.probabilities[k] = cell_probability(factor, a, b);
        switch (rule) {
            case RepresentativeRule::lower_endpoint: part.representatives[k] = a; break;
            case RepresentativeRule::midpoint: part.representatives[k] = 0.5 * (a + b); break;
            case RepresentativeRule::conditional_mean:
                part.representatives[k] = cell_conditional_mean(factor, a, b);
                break;
        }
    }
    return part;
}

}  // namespace snep
