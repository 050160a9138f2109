#include "symfit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symfit/error.hpp"

namespace symfit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower regularized gamma by its power series; valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma by modified Lentz continued fraction; valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

std::string to_string(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::likelihood_ratio: return "likelihood-ratio";
        case StatisticKind::wald: return "wald";
        case StatisticKind::conditional: return "conditional";
    }
    return "unknown";
}

double g_squared(const Table& table, const VectorXd& m_hat) {
    const auto& counts = table.counts();
    if (static_cast<std::size_t>(m_hat.size()) != counts.size())
        throw InputError("g_squared: expected counts have wrong length");
    double g = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        double m = m_hat[static_cast<Index>(i)];
        if (!(m > 0.0))
            throw DomainError("g_squared is infinite: zero expected count at observed cell " +
                              cell_at(i, table.categories(), table.axes()).to_string());
        double c = static_cast<double>(counts[i]);
        g += c * std::log(c / m);
    }
    g *= 2.0;
    if (g < 0.0 && g > -1e-9) g = 0.0;
    return g;
}

MatrixXd multinomial_covariance(const VectorXd& pi) {
    MatrixXd sigma = -pi * pi.transpose();
    sigma.diagonal() += pi;
    return sigma;
}

TestReport wald_delta(const ProbVector& p, double n, const ConstraintSystem& cs) {
    if (!(n > 0.0)) throw InputError("wald_delta: sample size must be positive");
    TestReport report;
    report.kind = StatisticKind::wald;
    report.df = cs.dim();
    if (cs.dim() == 0) return report;

    const VectorXd& pv = p.values();
    VectorXd h = cs.h(pv);
    MatrixXd H = cs.jacobian(pv);
    VectorXd Hp = H * pv;
    MatrixXd V = H * pv.asDiagonal() * H.transpose() - Hp * Hp.transpose();

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(V);
    const VectorXd& ev = eig.eigenvalues();
    double top = std::max(std::abs(ev[ev.size() - 1]), std::numeric_limits<double>::min());
    if (!(ev[0] > 1e-13 * top)) {
        Index worst = 0;
        eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
        throw SingularityError("wald_delta(" + cs.tag() + "): H Sigma H^T is singular; deficient direction is dominated by constraint " +
                               std::to_string(worst) + " (zero cells in the sample?)");
    }
    report.condition_number = top / ev[0];
    if (report.condition_number > 1e12)
        report.warnings.push_back("H Sigma H^T is ill-conditioned (condition number " +
                                  std::to_string(report.condition_number) + ")");

    Eigen::LDLT<MatrixXd> ldlt(V);
    VectorXd x = ldlt.solve(h);
    report.statistic = std::max(0.0, n * h.dot(x));
    report.p_value = chisq_sf(report.statistic, report.df);
    return report;
}

TestReport wald_delta(const Table& table, const ConstraintSystem& cs) {
    return wald_delta(table.proportions(), static_cast<double>(table.total()), cs);
}

TestReport conditional_test(const FitResult& fit_s, const FitResult& fit_sub) {
    if (fit_s.pi_hat.lattice_ptr() != fit_sub.pi_hat.lattice_ptr())
        throw InputError("conditional_test: fits are on different tables");
    double n_s = fit_s.m_hat.sum();
    double n_sub = fit_sub.m_hat.sum();
    if (std::abs(n_s - n_sub) > 1e-6 * std::max(1.0, n_s))
        throw InputError("conditional_test: fits have different sample sizes");
    TestReport report;
    report.kind = StatisticKind::conditional;
    report.df = fit_s.df - fit_sub.df;
    if (report.df < 0)
        throw InputError("conditional_test: " + fit_sub.model + " has more df than " + fit_s.model + "; not nested");
    double stat = fit_s.g_squared - fit_sub.g_squared;
    if (stat < -1e-8)
        throw InconsistencyError("conditional_test: G2(" + fit_s.model + ") < G2(" + fit_sub.model +
                                 "); nesting violated, a fit likely failed");
    report.statistic = std::max(0.0, stat);
    report.p_value = report.df > 0 ? chisq_sf(report.statistic, report.df) : 1.0;
    return report;
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw InputError("regularized_gamma_q: shape must be positive");
    if (x < 0.0 || std::isnan(x)) throw InputError("regularized_gamma_q: x must be nonnegative");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

double chisq_sf(double x, int df) {
    if (df < 1) throw InputError("chisq_sf: df must be at least 1, got " + std::to_string(df));
    if (x < 0.0 || std::isnan(x)) throw InputError("chisq_sf: statistic must be nonnegative");
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace symfit
