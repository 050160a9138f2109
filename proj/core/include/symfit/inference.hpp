#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "symfit/constraints.hpp"
#include "symfit/solver.hpp"
#include "symfit/table.hpp"

namespace symfit {

enum class StatisticKind { likelihood_ratio, wald, conditional };

std::string to_string(StatisticKind kind);

struct TestReport {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
    StatisticKind kind = StatisticKind::likelihood_ratio;
    double condition_number = 1.0;  // of H Sigma H^T, Wald only
    std::vector<std::string> warnings;
};

/// 2 sum n_i log(n_i / m_i); cells with n_i = 0 contribute 0.
double g_squared(const Table& table, const Eigen::VectorXd& m_hat);

/// Sigma(pi) = D(pi) - pi pi^T.
Eigen::MatrixXd multinomial_covariance(const Eigen::VectorXd& pi);

/// n h(p)^T (H Sigma H^T)^{-1} h(p) at the sample proportions.
TestReport wald_delta(const Table& table, const ConstraintSystem& cs);
TestReport wald_delta(const ProbVector& p, double n, const ConstraintSystem& cs);

/// G^2(S) - G^2(sub) for a model sub implied by S.
TestReport conditional_test(const FitResult& fit_s, const FitResult& fit_sub);

/// Regularized upper incomplete gamma Q(a, x).
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-squared distribution.
double chisq_sf(double x, int df);

}  // namespace symfit
