#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "symfit/table.hpp"

namespace symfit {

/// A strictly convex f on (0, inf) with f(1) = 0, together with its
/// derivative F = f' and the closed-form inverse of F.
struct FSpec {
    std::string name;
    std::function<double(double)> f;
    std::function<double(double)> deriv;      // F
    std::function<double(double)> deriv_inv;  // F^{-1}
    // F' (= f''). Optional; a central difference of F is used when empty.
    std::function<double(double)> deriv2;
    // F'' (= f'''). Optional; a central difference of F' is used when empty.
    std::function<double(double)> deriv3;

    double f_at_zero = 0.0;          // lim_{t->0} f(t)
    double slope_at_infinity = 0.0;  // lim_{t->inf} f(t)/t, may be +inf

    double deriv2_at(double x) const;
    double deriv3_at(double x) const;
};

FSpec kl_spec();       // f(x) = x log x
FSpec pearson_spec();  // f(x) = (1 - x)^2

/// Built-in spec by name ("kl", "pearson").
FSpec fspec_by_name(std::string_view name);

/// sum_i q_i f(p_i / q_i), with the usual conventions at q_i = 0.
double f_divergence(std::span<const double> p, std::span<const double> q, const FSpec& spec);
double f_divergence(const ProbVector& p, const ProbVector& q, const FSpec& spec);

struct FSpecDiagnostics {
    double f_at_one = 0.0;                 // |f(1)|
    double min_second_difference = 0.0;    // f'' * max(1, x) on a log grid over [1e-4, 1e4]
    double max_inverse_error = 0.0;        // max |F^{-1}(F(x)) - x| / max(1, |x|)
    bool deriv_increasing = false;

    bool f_at_one_ok() const { return f_at_one < 1e-12; }
    // rounding noise of an affine f stays far below this
    bool convex() const { return min_second_difference > 1e-8; }
    bool inverse_ok() const { return max_inverse_error < 1e-10; }
    bool passed() const { return f_at_one_ok() && convex() && inverse_ok() && deriv_increasing; }
};

FSpecDiagnostics validate_fspec(const FSpec& spec);

}  // namespace symfit
