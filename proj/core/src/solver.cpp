#include "symfit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "symfit/error.hpp"
#include "symfit/inference.hpp"

namespace symfit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kTinyProb = 1e-280;
constexpr double kMaxLogStep = 30.0;
constexpr double kMaxLogGrowth = 3.0;
constexpr double kCurvatureFloor = 0.1;
constexpr double kEmptyCellFloor = 1e-9;
constexpr double kDenseCheckFloor = 0.1;

double log_likelihood_of(const VectorXd& counts, const VectorXd& pi) {
    double ll = 0.0;
    for (Index i = 0; i < counts.size(); ++i)
        if (counts[i] > 0.0) ll += counts[i] * std::log(pi[i]);
    return ll;
}

VectorXd start_point(const Table& table, const SolverConfig& cfg) {
    const auto cells = static_cast<Index>(table.lattice().size());
    if (cfg.start) {
        if (cfg.start->size() != cells) throw InputError("solver start has wrong length");
        if ((cfg.start->array() <= 0.0).any()) throw InputError("solver start must be strictly positive");
        return *cfg.start / cfg.start->sum();
    }
    if (!(cfg.start_smoothing > 0.0)) throw InputError("start smoothing must be positive");
    VectorXd pi = table.count_vector().array() + cfg.start_smoothing;
    return pi / pi.sum();
}

void check_config(const SolverConfig& cfg) {
    if (cfg.max_iterations <= 0 || cfg.max_step_halvings < 0 || !(cfg.update_tolerance > 0.0) ||
        !(cfg.constraint_tolerance > 0.0))
        throw InputError("solver configuration values must be positive");
}

// Solves the Newton system by partial-pivot LU with two rounds of iterative
// refinement. Falls back to a minimum-norm least-squares solution when the
// result is not accurate.
VectorXd solve_newton(const MatrixXd& K, const VectorXd& rhs, bool& fallback) {
    Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd x = lu.solve(rhs);
    for (int k = 0; k < 2; ++k) x += lu.solve(VectorXd(rhs - K * x));
    double tol = 1e-8 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    if (x.allFinite() && (K * x - rhs).lpNorm<Eigen::Infinity>() <= tol) return x;
    fallback = true;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(K);
    cod.setThreshold(1e-12);
    return cod.solve(rhs);
}

void attach_test(FitResult& out, const Table& table) {
    out.g_squared = g_squared(table, out.m_hat);
    out.p_value = out.df > 0 ? chisq_sf(std::max(0.0, out.g_squared), out.df) : 1.0;
}

void attach_params(FitResult& out, const ConstraintSystem& cs) {
    if (std::holds_alternative<std::monostate>(cs.recovery())) return;
    try {
        out.params = recover_params(out, cs, cs.lattice().axes());
    } catch (const Error& e) {
        out.warnings.push_back(std::string("parameter recovery failed: ") + e.what());
    }
}

}  // namespace

FitResult fit(const Table& table, const ConstraintSystem& cs, const SolverConfig& cfg) {
    check_config(cfg);
    if (cs.lattice_ptr() != table.lattice_ptr()) throw InputError("constraint system and table shapes differ");
    const auto cells = static_cast<Index>(table.lattice().size());
    const int d = cs.dim();
    if (d >= cells) throw InputError("constraint dimension must be below the cell count");

    const VectorXd counts = table.count_vector();
    const double n = static_cast<double>(table.total());
    const VectorXd phat = counts / n;
    const VectorXd orbit_totals = table.lattice().orbit_totals(counts);

    VectorXd pi = start_point(table, cfg);
    VectorXd hv = cs.h(pi);
    VectorXd lambda = VectorXd::Zero(d);
    double gamma = 1.0;
    double rho = 1.0;
    bool warned_fallback = false;
    bool warned_halving = false;

    auto merit = [&](const VectorXd& p, const VectorXd& h) {
        return log_likelihood_of(phat, p) - rho * h.lpNorm<1>();
    };

    FitResult out{cs.tag(), ProbVector(table.lattice_ptr(), pi), VectorXd(), {}, 0.0, d};
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        MatrixXd H = cs.jacobian(pi);

        // Jacobian of [h; sum] with respect to theta = log pi.
        MatrixXd A(d + 1, cells);
        A.topRows(d) = H * pi.asDiagonal();
        A.row(d) = pi.transpose();

        // Newton system in (step, mu): G step - A^T mu = phat, A step = -[h; 0], where
        // G = diag(pi * (gamma - H^T lambda)) - D(pi) Q D(pi) is the negative Lagrangian
        // Hessian in theta and Q = sum lambda_k d^2 h_k / dpi^2. Cell rows are divided by pi_i.
        VectorXd Hl = d > 0 ? VectorXd(H.transpose() * lambda) : VectorXd::Zero(cells);
        VectorXd gap(cells);
        for (Index i = 0; i < cells; ++i) gap[i] = gamma - Hl[i];
        MatrixXd Q;
        if (!cs.is_linear() && lambda.lpNorm<Eigen::Infinity>() > 0.0) {
            Q = cs.lagrangian_hessian(pi, lambda);
            for (Index i = 0; i < cells; ++i)
                if (orbit_totals[i] == 0.0) {
                    Q.row(i).setZero();
                    Q.col(i).setZero();
                }
            MatrixXd G = -(pi.asDiagonal() * Q * pi.asDiagonal());
            G.diagonal() += pi.cwiseProduct(gap.cwiseMax(kDenseCheckFloor));
            Eigen::LLT<MatrixXd> check(G);
            if (check.info() != Eigen::Success) Q.resize(0, 0);
        }

        const Index m = d + 1;
        MatrixXd K = MatrixXd::Zero(cells + m, cells + m);
        // Empty cells on their way to zero keep their exact, possibly tiny, curvature.
        for (Index i = 0; i < cells; ++i)
            K(i, i) = phat[i] == 0.0 && gap[i] > 0.0 ? std::max(gap[i], kEmptyCellFloor)
                                                     : std::max(gap[i], kCurvatureFloor);
        if (Q.size() > 0) K.topLeftCorner(cells, cells) -= Q * pi.asDiagonal();
        K.block(0, cells, cells, d) = -H.transpose();
        K.block(0, cells + d, cells, 1).setConstant(-1.0);
        K.bottomLeftCorner(m, cells) = A;
        VectorXd rhs(cells + m);
        rhs.head(cells) = phat.cwiseQuotient(pi);
        rhs.segment(cells, d) = -hv;
        rhs[cells + d] = 0.0;
        for (Index i = 0; i < cells; ++i)
            if (orbit_totals[i] == 0.0) {
                K.row(i) *= pi[i];
                rhs[i] *= pi[i];
            }

        bool fallback = false;
        VectorXd sol = solve_newton(K, rhs, fallback);
        if (fallback && !warned_fallback) {
            out.warnings.push_back("singular KKT system; least-squares steps were used");
            warned_fallback = true;
        }
        VectorXd step = sol.head(cells);
        VectorXd mu = sol.tail(m);
        const double growth = step.maxCoeff();
        if (growth > kMaxLogGrowth) step *= kMaxLogGrowth / growth;
        step = step.cwiseMax(-kMaxLogStep);
        lambda = mu.head(d);
        gamma = -mu[d];
        if (d > 0) rho = std::max(rho, 2.0 * lambda.lpNorm<Eigen::Infinity>() + 1e-3);

        const double m0 = merit(pi, hv);
        double alpha = 1.0;
        VectorXd trial;
        VectorXd trial_h;
        bool have_valid = false;
        bool accepted = false;
        for (int k = 0; k <= cfg.max_step_halvings; ++k, alpha *= 0.5) {
            VectorXd candidate = pi.cwiseProduct((alpha * step).array().exp().matrix());
            candidate /= candidate.sum();
            candidate = candidate.cwiseMax(kTinyProb);
            VectorXd candidate_h;
            try {
                candidate_h = cs.h(candidate);
            } catch (const DomainError&) {
                continue;
            }
            trial = std::move(candidate);
            trial_h = std::move(candidate_h);
            have_valid = true;
            double m1 = merit(trial, trial_h);
            if (std::isfinite(m1) && m1 >= m0 - 1e-13 * std::max(1.0, std::abs(m0))) {
                accepted = true;
                break;
            }
        }
        if (!have_valid) {
            out.warnings.push_back("step-halving could not stay inside the constraint domain");
            break;
        }
        if (!accepted && !warned_halving) {
            out.warnings.push_back("step-halving limit reached; took the shortest step");
            warned_halving = true;
        }

        double delta_m = n * (trial - pi).lpNorm<Eigen::Infinity>();
        pi = std::move(trial);
        hv = std::move(trial_h);
        double resid = d > 0 ? hv.lpNorm<Eigen::Infinity>() : 0.0;
        if (accepted && delta_m < cfg.update_tolerance && resid < cfg.constraint_tolerance) {
            out.converged = true;
            ++it;
            break;
        }
    }

    out.iterations = it;
    out.max_constraint_residual = d > 0 ? hv.lpNorm<Eigen::Infinity>() : 0.0;
    out.pi_hat = ProbVector::normalized(table.lattice_ptr(), pi);
    out.m_hat = n * out.pi_hat.values();
    out.log_likelihood = log_likelihood_of(counts, out.pi_hat.values());
    if (!out.converged)
        out.warnings.push_back("did not converge within " + std::to_string(cfg.max_iterations) + " iterations");
    attach_test(out, table);
    if (out.converged) attach_params(out, cs);
    return out;
}

FitResult fit_loglinear_kl(const Table& table, LoglinearModel model, const ScoreVector& u, const SolverConfig& cfg) {
    check_config(cfg);
    const Lattice& lat = table.lattice();
    const int r = lat.categories();
    const int T = lat.axes();
    const auto cells = static_cast<Index>(lat.size());

    DesignMatrix design;
    std::string tag;
    ModelKind kind;
    switch (model) {
        case LoglinearModel::s:
            design = build_design(r, T, u);
            design.X = MatrixXd(design.orbit_indicators());
            design.contrast_columns = 0;
            tag = "s";
            kind = ModelKind::s;
            break;
        case LoglinearModel::qs:
            design = build_qs_design(r, T);
            tag = "qs";
            kind = ModelKind::qs;
            break;
        case LoglinearModel::oqs:
        default:
            design = build_design(r, T, u);
            tag = "oqs";
            kind = ModelKind::oqsf;
            break;
    }

    // Orbits with zero observed total have mu = 0 at the MLE; drop their cells and columns.
    const VectorXd counts = table.count_vector();
    const VectorXd totals = lat.orbit_totals(counts);
    std::vector<Index> keep_rows;
    for (Index i = 0; i < cells; ++i)
        if (totals[i] > 0.0) keep_rows.push_back(i);
    std::vector<Index> keep_cols;
    for (Index c = 0; c < design.contrast_columns; ++c) keep_cols.push_back(c);
    for (std::size_t k = 0; k < lat.orbit_count(); ++k)
        if (totals[static_cast<Index>(lat.orbit_cells(k)[0])] > 0.0)
            keep_cols.push_back(design.contrast_columns + static_cast<Index>(k));

    const MatrixXd X = design.X(keep_rows, keep_cols);
    const VectorXd y = counts(keep_rows);

    auto poisson_ll = [&](const VectorXd& eta) {
        double ll = 0.0;
        for (Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - std::exp(eta[i]);
        return ll;
    };

    VectorXd theta = X.completeOrthogonalDecomposition().solve(VectorXd((y.array() + 0.5).log()));
    VectorXd eta = X * theta;
    double ll = poisson_ll(eta);

    FitResult out{tag, ProbVector::uniform(table.lattice_ptr()), VectorXd(), {}, 0.0,
                  degrees_of_freedom(kind, r, T)};
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        VectorXd mu = eta.array().exp();
        VectorXd score = X.transpose() * (y - mu);
        MatrixXd info = X.transpose() * mu.asDiagonal() * X;
        Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(info);
        VectorXd dir = cod.solve(score);

        double alpha = 1.0;
        VectorXd next_theta = theta;
        VectorXd next_eta = eta;
        double next_ll = ll;
        for (int k = 0; k <= cfg.max_step_halvings; ++k, alpha *= 0.5) {
            next_theta = theta + alpha * dir;
            next_eta = X * next_theta;
            next_ll = poisson_ll(next_eta);
            if (std::isfinite(next_ll) && next_ll >= ll - 1e-12 * std::max(1.0, std::abs(ll))) break;
        }
        double delta_m = (next_eta.array().exp() - mu.array()).abs().maxCoeff();
        theta = next_theta;
        eta = next_eta;
        ll = next_ll;
        double score_norm = (X.transpose() * (y - VectorXd(eta.array().exp()))).lpNorm<Eigen::Infinity>();
        if (delta_m < cfg.update_tolerance && score_norm < 1e-8 * std::max(1.0, y.sum())) {
            out.converged = true;
            ++it;
            break;
        }
    }

    VectorXd m = VectorXd::Zero(cells);
    VectorXd fitted = eta.array().exp();
    for (std::size_t k = 0; k < keep_rows.size(); ++k) m[keep_rows[k]] = fitted[static_cast<Index>(k)];

    out.iterations = it;
    out.pi_hat = ProbVector::normalized(table.lattice_ptr(), m);
    out.m_hat = static_cast<double>(table.total()) * out.pi_hat.values();
    out.log_likelihood = log_likelihood_of(counts, out.pi_hat.values());
    out.max_constraint_residual = 0.0;
    if (!out.converged)
        out.warnings.push_back("did not converge within " + std::to_string(cfg.max_iterations) + " iterations");
    attach_test(out, table);
    if (out.converged && model != LoglinearModel::qs) {
        try {
            out.params = recover_params(out, constraint_oqsf(r, T, u, kl_spec()), T);
        } catch (const Error& e) {
            out.warnings.push_back(std::string("parameter recovery failed: ") + e.what());
        }
    }
    return out;
}

FitParams recover_params(const FitResult& fit, const ConstraintSystem& cs, int reference_axis) {
    const Lattice& lat = fit.pi_hat.lattice();
    const int T = lat.axes();
    const int r = lat.categories();
    const VectorXd& pi = fit.pi_hat.values();

    if (const auto* rec = std::get_if<OrbitRatioRecovery>(&cs.recovery())) {
        if (reference_axis < 1 || reference_axis > T)
            throw InputError("reference axis " + std::to_string(reference_axis) + " out of range");
        if ((pi.array() <= 0.0).any()) throw DomainError("parameter recovery needs strictly positive fitted values");
        const VectorXd sym = lat.orbit_means(pi);
        const auto cells = static_cast<Index>(lat.size());
        const auto orbits = static_cast<Index>(lat.orbit_count());

        VectorXd transformed(cells);
        MatrixXd D = MatrixXd::Zero(cells, (T - 1) + orbits);
        for (Index i = 0; i < cells; ++i) {
            transformed[i] = rec->spec.deriv(pi[i] / sym[i]);
            auto c = lat.coords(static_cast<std::size_t>(i));
            for (int t = 0; t < T - 1; ++t) D(i, t) = rec->scores[static_cast<std::size_t>(c[static_cast<std::size_t>(t)])];
            D(i, (T - 1) + static_cast<Index>(lat.orbit_id(static_cast<std::size_t>(i)))) = 1.0;
        }
        VectorXd coef = D.colPivHouseholderQr().solve(transformed);
        double residual = (D * coef - transformed).lpNorm<Eigen::Infinity>();
        if (!(residual <= 1e-6))
            throw InconsistencyError("fitted table does not satisfy the " + cs.tag() +
                                     " model (recovery residual " + std::to_string(residual) + ")");

        OrbitRatioParams params;
        params.reference_axis = reference_axis;
        params.residual = residual;
        params.beta.assign(static_cast<std::size_t>(T), 0.0);
        for (int t = 0; t < T - 1; ++t) params.beta[static_cast<std::size_t>(t)] = coef[t];
        const double ref = params.beta[static_cast<std::size_t>(reference_axis - 1)];
        for (double& b : params.beta) b -= ref;
        // sum_t ref * u_{i_t} is symmetric and moves into psi
        for (Index k = 0; k < orbits; ++k) {
            double score_sum = 0.0;
            for (int v : lat.orbit(static_cast<std::size_t>(k)).representative.coords)
                score_sum += rec->scores[static_cast<std::size_t>(v - 1)];
            params.psi.push_back(coef[(T - 1) + k] + ref * score_sum);
        }
        return params;
    }

    if (std::holds_alternative<LogitShiftRecovery>(cs.recovery())) {
        auto logit = [](double v) { return std::log(v / (1.0 - v)); };
        LogitShiftParams params;
        std::vector<VectorXd> cum;
        for (int t = 1; t <= T; ++t) {
            VectorXd m = marginal_dist(lat, pi, t);
            VectorXd c(r - 1);
            double acc = 0.0;
            for (int i = 0; i < r - 1; ++i) {
                acc += m[i];
                if (!(acc > 0.0 && acc < 1.0)) throw DomainError("cumulative marginal outside (0, 1)");
                c[i] = acc;
            }
            cum.push_back(c);
        }
        for (int t = 1; t < T; ++t) {
            double delta = logit(cum[0][0]) - logit(cum[static_cast<std::size_t>(t)][0]);
            for (int i = 1; i < r - 1; ++i) {
                double other = logit(cum[0][i]) - logit(cum[static_cast<std::size_t>(t)][i]);
                params.spread = std::max(params.spread, std::abs(other - delta));
            }
            params.delta.push_back(delta);
        }
        return params;
    }

    throw InputError("model " + cs.tag() + " has no recoverable parameters");
}

}  // namespace symfit
