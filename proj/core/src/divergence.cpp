#include "symfit/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "symfit/error.hpp"

namespace symfit {

double FSpec::deriv2_at(double x) const {
    if (deriv2) return deriv2(x);
    double h = 1e-5 * std::max(1.0, std::abs(x));
    if (x - h <= 0.0) h = 0.5 * x;
    return (deriv(x + h) - deriv(x - h)) / (2.0 * h);
}

double FSpec::deriv3_at(double x) const {
    if (deriv3) return deriv3(x);
    double h = 1e-4 * std::max(1.0, std::abs(x));
    if (x - h <= 0.0) h = 0.5 * x;
    return (deriv2_at(x + h) - deriv2_at(x - h)) / (2.0 * h);
}

FSpec kl_spec() {
    FSpec s;
    s.name = "kl";
    s.f = [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; };
    s.deriv = [](double x) { return 1.0 + std::log(x); };
    s.deriv_inv = [](double y) { return std::exp(y - 1.0); };
    s.deriv2 = [](double x) { return 1.0 / x; };
    s.deriv3 = [](double x) { return -1.0 / (x * x); };
    s.f_at_zero = 0.0;
    s.slope_at_infinity = std::numeric_limits<double>::infinity();
    return s;
}

FSpec pearson_spec() {
    FSpec s;
    s.name = "pearson";
    s.f = [](double x) { return (1.0 - x) * (1.0 - x); };
    s.deriv = [](double x) { return 2.0 * x - 2.0; };
    s.deriv_inv = [](double y) { return 1.0 + 0.5 * y; };
    s.deriv2 = [](double) { return 2.0; };
    s.deriv3 = [](double) { return 0.0; };
    s.f_at_zero = 1.0;
    s.slope_at_infinity = std::numeric_limits<double>::infinity();
    return s;
}

FSpec fspec_by_name(std::string_view name) {
    if (name == "kl") return kl_spec();
    if (name == "pearson") return pearson_spec();
    throw InputError("unknown f-divergence spec '" + std::string(name) + "' (known: kl, pearson)");
}

double f_divergence(std::span<const double> p, std::span<const double> q, const FSpec& spec) {
    if (p.size() != q.size())
        throw InputError("f_divergence: size mismatch " + std::to_string(p.size()) + " vs " + std::to_string(q.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("f_divergence: negative entry at index " + std::to_string(i));
        if (q[i] > 0.0) {
            total += p[i] > 0.0 ? q[i] * spec.f(p[i] / q[i]) : q[i] * spec.f_at_zero;
        } else if (p[i] > 0.0) {
            total += p[i] * spec.slope_at_infinity;  // 0 * f(a/0)
        }
        // 0 * f(0/0) = 0
    }
    return total;
}

double f_divergence(const ProbVector& p, const ProbVector& q, const FSpec& spec) {
    return f_divergence(std::span<const double>(p.values().data(), p.size()),
                        std::span<const double>(q.values().data(), q.size()), spec);
}

FSpecDiagnostics validate_fspec(const FSpec& spec) {
    FSpecDiagnostics d;
    d.f_at_one = std::abs(spec.f(1.0));

    constexpr int points = 400;
    std::vector<double> grid(points);
    const double lo = std::log(1e-4);
    const double hi = std::log(1e4);
    for (int k = 0; k < points; ++k) grid[static_cast<std::size_t>(k)] = std::exp(lo + (hi - lo) * k / (points - 1));

    d.min_second_difference = std::numeric_limits<double>::infinity();
    d.deriv_increasing = true;
    for (double x : grid) {
        double h = 1e-2 * x;
        double second = (spec.f(x + h) - 2.0 * spec.f(x) + spec.f(x - h)) / (h * h);
        d.min_second_difference = std::min(d.min_second_difference, second * std::max(1.0, x));

        double y = spec.deriv(x);
        double back = spec.deriv_inv(y);
        d.max_inverse_error = std::max(d.max_inverse_error, std::abs(back - x) / std::max(1.0, std::abs(x)));
    }
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(spec.deriv(grid[k]) > spec.deriv(grid[k - 1]))) d.deriv_increasing = false;
    return d;
}

}  // namespace symfit
