#pragma once

// Constrained maximum likelihood for multinomial tables.
//
// fit() maximizes sum_i n_i log pi_i subject to h(pi) = 0 and sum(pi) = 1.
// Each iteration linearizes the Lagrangian stationarity conditions in
// theta = log pi and solves the reduced (Schur complement) KKT system,
// so iterates stay strictly positive. Steps are halved until an exact
// l1 penalty merit, loglik - rho * |h|_1, does not decrease.
//
// fit_loglinear_kl() is an independent route for the log-linear members
// (S, QS, OQS): Newton on log mu = X theta.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "symfit/constraints.hpp"
#include "symfit/table.hpp"

namespace symfit {

struct SolverConfig {
    int max_iterations = 200;
    double update_tolerance = 1e-9;      // on max |delta m| (expected counts)
    double constraint_tolerance = 1e-10; // on max |h|
    int max_step_halvings = 30;
    double start_smoothing = 0.1;        // pi0 = (n + delta0) / (n + delta0 * r^T)
    std::optional<Eigen::VectorXd> start;
};

/// beta_t (t = 1..T) normalized so beta_{reference_axis} = 0, and psi per orbit
/// (ordered as Lattice::orbits()).
struct OrbitRatioParams {
    std::vector<double> beta;
    int reference_axis = 0;
    std::vector<double> psi;
    double residual = 0.0;
};

/// delta_{t-1}, t = 2..T, from logit F^(1) - logit F^(t).
struct LogitShiftParams {
    std::vector<double> delta;
    double spread = 0.0;  // max deviation of the shift across categories
};

using FitParams = std::variant<std::monostate, OrbitRatioParams, LogitShiftParams>;

struct FitResult {
    std::string model;
    ProbVector pi_hat;
    Eigen::VectorXd m_hat;
    FitParams params;
    double g_squared = 0.0;
    int df = 0;
    double p_value = 1.0;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    double max_constraint_residual = 0.0;
    std::vector<std::string> warnings;
};

FitResult fit(const Table& table, const ConstraintSystem& cs, const SolverConfig& cfg = {});

enum class LoglinearModel { s, qs, oqs };

FitResult fit_loglinear_kl(const Table& table, LoglinearModel model, const ScoreVector& u,
                           const SolverConfig& cfg = {});

/// Decodes model parameters from a fit. reference_axis is 1-based.
/// Throws InconsistencyError when the fitted table does not satisfy the model.
FitParams recover_params(const FitResult& fit, const ConstraintSystem& cs, int reference_axis);

}  // namespace symfit
