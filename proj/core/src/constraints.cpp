#include "symfit/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "symfit/error.hpp"

namespace symfit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t i) { return static_cast<Index>(i); }

void check_length(const Lattice& lat, const VectorXd& pi, const std::string& tag) {
    if (static_cast<std::size_t>(pi.size()) != lat.size())
        throw InputError(tag + ": vector has " + std::to_string(pi.size()) + " entries, expected " +
                         std::to_string(lat.size()));
}

void check_scores(const ScoreVector& u, int r) {
    if (u.size() != static_cast<std::size_t>(r))
        throw InputError("score vector has " + std::to_string(u.size()) + " entries, expected r = " + std::to_string(r));
}

std::string cell_name(const Lattice& lat, std::size_t i) {
    return cell_at(i, lat.categories(), lat.axes()).to_string();
}

ConstraintSystem linear_system(std::string tag, ModelKind kind, LatticePtr lattice, MatrixXd A) {
    auto shared = std::make_shared<const MatrixXd>(std::move(A));
    int dim = static_cast<int>(shared->rows());
    const Lattice* lat = lattice.get();
    std::string name = tag;
    auto h = [shared, lat, name](const VectorXd& pi) -> VectorXd {
        check_length(*lat, pi, name);
        return (*shared) * pi;
    };
    auto jac = [shared](const VectorXd&) -> MatrixXd { return *shared; };
    return ConstraintSystem(std::move(tag), kind, std::move(lattice), dim, h, jac, {}, true);
}

// Orbit-ratio family: h(pi) = U^T F(pi / pi^S).
ConstraintSystem orbit_ratio_system(std::string tag, ModelKind kind, LatticePtr lattice, MatrixXd U, FSpec spec,
                                    ParamRecovery recovery) {
    auto basis = std::make_shared<const MatrixXd>(std::move(U));
    auto f = std::make_shared<const FSpec>(std::move(spec));
    const Lattice* lat = lattice.get();
    int dim = static_cast<int>(basis->cols());
    std::string name = tag;

    auto ratios = [lat, name](const VectorXd& pi, VectorXd& sym, VectorXd& total) {
        check_length(*lat, pi, name);
        total = lat->orbit_totals(pi);
        sym.resize(pi.size());
        for (std::size_t i = 0; i < lat->size(); ++i) {
            if (!(total[idx(i)] > 0.0))
                throw DomainError(name + ": orbit of cell " + cell_name(*lat, i) + " has zero total");
            sym[idx(i)] = total[idx(i)] / static_cast<double>(lat->orbit_size_of_cell(i));
        }
    };

    auto h = [basis, f, lat, ratios, name](const VectorXd& pi) -> VectorXd {
        VectorXd sym, total;
        ratios(pi, sym, total);
        VectorXd transformed(pi.size());
        for (Index i = 0; i < pi.size(); ++i) {
            double v = f->deriv(pi[i] / sym[i]);
            if (!std::isfinite(v))
                throw DomainError(name + ": F(pi/pi^S) is not finite at cell " +
                                  cell_name(*lat, static_cast<std::size_t>(i)));
            transformed[i] = v;
        }
        return basis->transpose() * transformed;
    };

    auto jac = [basis, f, lat, ratios, name](const VectorXd& pi) -> MatrixXd {
        VectorXd sym, total;
        ratios(pi, sym, total);
        const MatrixXd& Ub = *basis;
        MatrixXd J = MatrixXd::Zero(Ub.cols(), pi.size());
        // d F(pi_i/pi^S_i) / d pi_j = F'(.) / pi^S_i * (delta_ij - pi^c_i) for j in A(i), else 0.
        for (std::size_t i = 0; i < lat->size(); ++i) {
            Index ii = idx(i);
            double scale = f->deriv2_at(pi[ii] / sym[ii]) / sym[ii];
            if (!std::isfinite(scale))
                throw DomainError(name + ": Jacobian is not finite at cell " + cell_name(*lat, i));
            double cond = pi[ii] / total[ii];
            for (std::size_t j : lat->orbit_cells(lat->orbit_id(i))) {
                double dij = scale * ((i == j ? 1.0 : 0.0) - cond);
                if (dij != 0.0) J.col(idx(j)).noalias() += dij * Ub.row(ii).transpose();
            }
        }
        return J;
    };

    // Per orbit with size m, s = pi^S, t = pi / s, w = U lambda:
    // Q_jl = (w_j F''(t_j) delta_jl - (b_j + b_l - B - c) / m) / s^2,
    // a = w F'(t), b = w F''(t) t + a, c = mean(a t), B = mean(b t).
    auto hess = [basis, f, lat, ratios](const VectorXd& pi, const VectorXd& lambda) -> MatrixXd {
        VectorXd sym, total;
        ratios(pi, sym, total);
        const VectorXd w = (*basis) * lambda;
        MatrixXd Q = MatrixXd::Zero(pi.size(), pi.size());
        std::vector<double> a, b, wf3;
        for (std::size_t id = 0; id < lat->orbit_count(); ++id) {
            auto cells = lat->orbit_cells(id);
            const double m = static_cast<double>(cells.size());
            const double s = sym[idx(cells[0])];
            a.assign(cells.size(), 0.0);
            b.assign(cells.size(), 0.0);
            wf3.assign(cells.size(), 0.0);
            double c = 0.0, B = 0.0;
            for (std::size_t k = 0; k < cells.size(); ++k) {
                Index i = idx(cells[k]);
                double t = pi[i] / s;
                wf3[k] = w[i] * f->deriv3_at(t);
                a[k] = w[i] * f->deriv2_at(t);
                b[k] = wf3[k] * t + a[k];
                c += a[k] * t / m;
                B += b[k] * t / m;
            }
            const double s2 = s * s;
            for (std::size_t j = 0; j < cells.size(); ++j)
                for (std::size_t l = 0; l < cells.size(); ++l)
                    Q(idx(cells[j]), idx(cells[l])) =
                        ((j == l ? wf3[j] : 0.0) - (b[j] + b[l] - B - c) / m) / s2;
        }
        return Q;
    };
    return ConstraintSystem(std::move(tag), kind, std::move(lattice), dim, h, jac, std::move(recovery), false, hess);
}

std::string oqsf_tag(const FSpec& spec) {
    if (spec.name == "kl") return "oqs";
    if (spec.name == "pearson") return "poqs";
    return "oqsf:" + spec.name;
}

}  // namespace

ConstraintSystem::ConstraintSystem(std::string tag, ModelKind kind, LatticePtr lattice, int dim, Function h,
                                   JacobianFn jacobian, ParamRecovery recovery, bool linear, HessianFn hessian)
    : tag_(std::move(tag)),
      kind_(kind),
      lattice_(std::move(lattice)),
      dim_(dim),
      h_(std::move(h)),
      jacobian_(std::move(jacobian)),
      recovery_(std::move(recovery)),
      linear_(linear),
      hessian_(std::move(hessian)) {}

VectorXd ConstraintSystem::h(const VectorXd& pi) const {
    if (dim_ == 0) return VectorXd(0);
    return h_(pi);
}

MatrixXd ConstraintSystem::jacobian(const VectorXd& pi) const {
    if (dim_ == 0) return MatrixXd(0, pi.size());
    return jacobian_(pi);
}

MatrixXd ConstraintSystem::lagrangian_hessian(const VectorXd& pi, const VectorXd& lambda) const {
    if (lambda.size() != dim_)
        throw InputError(tag_ + ": multiplier vector has " + std::to_string(lambda.size()) + " entries, expected " +
                         std::to_string(dim_));
    if (dim_ == 0 || linear_) return MatrixXd::Zero(pi.size(), pi.size());
    if (hessian_) return hessian_(pi, lambda);
    MatrixXd Q(pi.size(), pi.size());
    for (Index j = 0; j < pi.size(); ++j) {
        double step = 1e-6 * std::max(pi[j], 1e-3 * pi.sum());
        VectorXd up = pi, dn = pi;
        up[j] += step;
        dn[j] -= step;
        Q.col(j) = (jacobian_(up).transpose() * lambda - jacobian_(dn).transpose() * lambda) / (2.0 * step);
    }
    return 0.5 * (Q + Q.transpose());
}

DesignMatrix build_design(int r, int T, const ScoreVector& u) {
    check_scores(u, r);
    auto lat = Lattice::get(r, T);
    DesignMatrix d;
    d.contrast_columns = T - 1;
    d.orbit_columns = static_cast<int>(lat->orbit_count());
    d.X = MatrixXd::Zero(idx(lat->size()), d.contrast_columns + d.orbit_columns);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        auto c = lat->coords(i);
        double last = u[static_cast<std::size_t>(c[static_cast<std::size_t>(T - 1)])];
        for (int t = 0; t < T - 1; ++t) d.X(idx(i), t) = u[static_cast<std::size_t>(c[static_cast<std::size_t>(t)])] - last;
        d.X(idx(i), d.contrast_columns + static_cast<Index>(lat->orbit_id(i))) = 1.0;
    }
    return d;
}

DesignMatrix build_qs_design(int r, int T) {
    auto lat = Lattice::get(r, T);
    DesignMatrix d;
    d.contrast_columns = (T - 1) * (r - 1);
    d.orbit_columns = static_cast<int>(lat->orbit_count());
    d.X = MatrixXd::Zero(idx(lat->size()), d.contrast_columns + d.orbit_columns);
    for (std::size_t i = 0; i < lat->size(); ++i) {
        auto c = lat->coords(i);
        int last = c[static_cast<std::size_t>(T - 1)];
        for (int t = 0; t < T - 1; ++t) {
            int ct = c[static_cast<std::size_t>(t)];
            for (int j = 0; j < r - 1; ++j)
                d.X(idx(i), t * (r - 1) + j) = (ct == j ? 1.0 : 0.0) - (last == j ? 1.0 : 0.0);
        }
        d.X(idx(i), d.contrast_columns + static_cast<Index>(lat->orbit_id(i))) = 1.0;
    }
    return d;
}

Orthocomplement orthocomplement(const MatrixXd& X) {
    const Index n = X.rows();
    const Index k = X.cols();
    if (k > n) throw SingularityError("design has more columns than rows");
    if (k == 0) return {MatrixXd::Identity(n, n)};

    Eigen::BDCSVD<MatrixXd> svd(X);
    const auto& sv = svd.singularValues();
    double cutoff = 1e-10 * sv[0];
    Index rank = (sv.array() > cutoff).count();
    if (rank < k)
        throw SingularityError("design matrix has rank " + std::to_string(rank) + " < " + std::to_string(k) +
                               " columns (degenerate scores?)");

    Eigen::HouseholderQR<MatrixXd> qr(X);
    MatrixXd tail = MatrixXd::Zero(n, n - k);
    tail.bottomRows(n - k).setIdentity();
    return {qr.householderQ() * tail};
}

ConstraintSystem constraint_oqsf(const DesignMatrix& design, const Orthocomplement& basis, int r, int T,
                                 const ScoreVector& u, const FSpec& spec) {
    auto lat = Lattice::get(r, T);
    if (basis.U.rows() != idx(lat->size())) throw InputError("orthocomplement basis has wrong row count");
    if (basis.U.cols() != idx(lat->size()) - design.cols())
        throw InputError("orthocomplement basis has wrong column count");
    return orbit_ratio_system(oqsf_tag(spec), ModelKind::oqsf, lat, basis.U, spec, OrbitRatioRecovery{spec, u});
}

ConstraintSystem constraint_oqsf(int r, int T, const ScoreVector& u, const FSpec& spec) {
    DesignMatrix design = build_design(r, T, u);
    return constraint_oqsf(design, orthocomplement(design), r, T, u, spec);
}

ConstraintSystem constraint_qs(int r, int T) {
    auto lat = Lattice::get(r, T);
    DesignMatrix design = build_qs_design(r, T);
    return orbit_ratio_system("qs", ModelKind::qs, lat, orthocomplement(design).U, kl_spec(), {});
}

MatrixXd me_matrix(int r, int T, const ScoreVector& u) {
    return build_design(r, T, u).contrasts().transpose();
}

ConstraintSystem constraint_me(int r, int T, const ScoreVector& u) {
    return linear_system("me", ModelKind::me, Lattice::get(r, T), me_matrix(r, T, u));
}

ConstraintSystem constraint_mh(int r, int T) {
    auto lat = Lattice::get(r, T);
    MatrixXd A = MatrixXd::Zero((T - 1) * (r - 1), idx(lat->size()));
    for (std::size_t i = 0; i < lat->size(); ++i) {
        auto c = lat->coords(i);
        for (int t = 1; t < T; ++t)
            for (int j = 0; j < r - 1; ++j)
                A((t - 1) * (r - 1) + j, idx(i)) =
                    (c[static_cast<std::size_t>(t)] == j ? 1.0 : 0.0) - (c[0] == j ? 1.0 : 0.0);
    }
    return linear_system("mh", ModelKind::mh, lat, std::move(A));
}

ConstraintSystem constraint_s(int r, int T) {
    auto lat = Lattice::get(r, T);
    Index d = idx(lat->size() - lat->orbit_count());
    MatrixXd A = MatrixXd::Zero(d, idx(lat->size()));
    Index row = 0;
    for (std::size_t k = 0; k < lat->orbit_count(); ++k) {
        auto cells = lat->orbit_cells(k);
        // cells are ascending; the sorted-coordinate representative has the smallest index
        for (std::size_t m = 1; m < cells.size(); ++m) {
            A(row, idx(cells[m])) = 1.0;
            A(row, idx(cells[0])) = -1.0;
            ++row;
        }
    }
    return linear_system("s", ModelKind::s, lat, std::move(A));
}

ConstraintSystem constraint_ml(int r, int T) {
    auto lat = Lattice::get(r, T);
    const Lattice* L = lat.get();
    int dim = (T - 1) * (r - 2);

    // Cumulative marginals F(t, i) = Pr(X_t <= i), i = 0..r-2, normalized by the total.
    auto cumulative = [L, r, T](const VectorXd& pi) {
        check_length(*L, pi, "ml");
        double total = pi.sum();
        MatrixXd F(T, r - 1);
        for (int t = 1; t <= T; ++t) {
            VectorXd m = marginal_dist(*L, pi, t);
            double acc = 0.0;
            for (int i = 0; i < r - 1; ++i) {
                acc += m[i];
                double v = acc / total;
                if (!(v > 0.0 && v < 1.0))
                    throw DomainError("ml: cumulative marginal Pr(X_" + std::to_string(t) + " <= " +
                                      std::to_string(i + 1) + ") = " + std::to_string(v) + " is outside (0, 1)");
                F(t - 1, i) = v;
            }
        }
        return F;
    };
    auto logit = [](double v) { return std::log(v / (1.0 - v)); };

    auto h = [cumulative, logit, r, T, dim](const VectorXd& pi) -> VectorXd {
        MatrixXd F = cumulative(pi);
        VectorXd out(dim);
        Index row = 0;
        for (int t = 1; t < T; ++t)
            for (int i = 1; i < r - 1; ++i)
                out[row++] = (logit(F(t, i)) - logit(F(0, i))) - (logit(F(t, 0)) - logit(F(0, 0)));
        return out;
    };

    auto jac = [cumulative, L, r, T, dim](const VectorXd& pi) -> MatrixXd {
        MatrixXd F = cumulative(pi);
        double total = pi.sum();
        const Index n = pi.size();
        // dlogit F(t,i) / dpi_c = (1[c_t <= i] - F(t,i)) / (total F (1 - F))
        auto dlogit = [&](int t, int i) {
            VectorXd g(n);
            double f = F(t, i);
            double denom = total * f * (1.0 - f);
            for (Index c = 0; c < n; ++c) {
                int ct = L->coords(static_cast<std::size_t>(c))[static_cast<std::size_t>(t)];
                g[c] = ((ct <= i ? 1.0 : 0.0) - f) / denom;
            }
            return g;
        };
        MatrixXd J(dim, n);
        Index row = 0;
        for (int t = 1; t < T; ++t)
            for (int i = 1; i < r - 1; ++i)
                J.row(row++) = (dlogit(t, i) - dlogit(0, i) - dlogit(t, 0) + dlogit(0, 0)).transpose();
        return J;
    };
    return ConstraintSystem("ml", ModelKind::ml, lat, dim, h, jac, LogitShiftRecovery{}, false);
}

ConstraintSystem combine(const ConstraintSystem& a, const ConstraintSystem& b) {
    if (a.lattice_ptr() != b.lattice_ptr()) throw InputError("cannot combine systems on different lattices");
    auto first = std::make_shared<const ConstraintSystem>(a);
    auto second = std::make_shared<const ConstraintSystem>(b);
    int dim = a.dim() + b.dim();
    auto h = [first, second, dim](const VectorXd& pi) -> VectorXd {
        VectorXd out(dim);
        out << first->h(pi), second->h(pi);
        return out;
    };
    auto jac = [first, second, dim](const VectorXd& pi) -> MatrixXd {
        MatrixXd out(dim, pi.size());
        out << first->jacobian(pi), second->jacobian(pi);
        return out;
    };
    auto hess = [first, second](const VectorXd& pi, const VectorXd& lambda) -> MatrixXd {
        return first->lagrangian_hessian(pi, lambda.head(first->dim())) +
               second->lagrangian_hessian(pi, lambda.tail(second->dim()));
    };
    ParamRecovery rec = std::holds_alternative<std::monostate>(a.recovery()) ? b.recovery() : a.recovery();
    return ConstraintSystem(a.tag() + "+" + b.tag(), ModelKind::composite, a.lattice_ptr(), dim, h, jac, rec,
                            a.is_linear() && b.is_linear(), hess);
}

ModelTag parse_model_tag(std::string_view tag) {
    if (tag == "s") return {ModelKind::s, {}};
    if (tag == "qs") return {ModelKind::qs, {}};
    if (tag == "oqs") return {ModelKind::oqsf, "kl"};
    if (tag == "poqs") return {ModelKind::oqsf, "pearson"};
    if (tag == "mh") return {ModelKind::mh, {}};
    if (tag == "me") return {ModelKind::me, {}};
    if (tag == "ml") return {ModelKind::ml, {}};
    constexpr std::string_view prefix = "oqsf:";
    if (tag.substr(0, prefix.size()) == prefix && tag.size() > prefix.size())
        return {ModelKind::oqsf, std::string(tag.substr(prefix.size()))};
    throw InputError("unknown model tag '" + std::string(tag) + "' (known: s, qs, oqs, poqs, oqsf:<spec>, mh, me, ml)");
}

ConstraintSystem build_model(std::string_view tag, int r, int T, const ScoreVector& u) {
    if (auto plus = tag.find('+'); plus != std::string_view::npos)
        return combine(build_model(tag.substr(0, plus), r, T, u), build_model(tag.substr(plus + 1), r, T, u));
    ModelTag m = parse_model_tag(tag);
    switch (m.kind) {
        case ModelKind::s: return constraint_s(r, T);
        case ModelKind::qs: return constraint_qs(r, T);
        case ModelKind::oqsf: return constraint_oqsf(r, T, u, fspec_by_name(m.fspec));
        case ModelKind::mh: return constraint_mh(r, T);
        case ModelKind::me: return constraint_me(r, T, u);
        case ModelKind::ml: return constraint_ml(r, T);
        case ModelKind::composite: break;
    }
    throw InputError("unsupported model tag '" + std::string(tag) + "'");
}

int degrees_of_freedom(ModelKind model, int r, int T) {
    if (r < 2 || T < 2) throw InputError("degrees_of_freedom needs r >= 2 and T >= 2");
    int cells = static_cast<int>(lattice_size(r, T));
    int s = cells - static_cast<int>(binomial(r + T - 1, T));
    switch (model) {
        case ModelKind::s: return s;
        case ModelKind::oqsf: return s - (T - 1);
        case ModelKind::me: return T - 1;
        case ModelKind::mh: return (T - 1) * (r - 1);
        case ModelKind::ml: return (T - 1) * (r - 2);
        case ModelKind::qs: return s - (T - 1) * (r - 1);
        case ModelKind::composite: break;
    }
    throw InputError("degrees_of_freedom: composite models have no single tag");
}

int degrees_of_freedom(std::string_view tag, int r, int T) {
    if (auto plus = tag.find('+'); plus != std::string_view::npos)
        return degrees_of_freedom(tag.substr(0, plus), r, T) + degrees_of_freedom(tag.substr(plus + 1), r, T);
    return degrees_of_freedom(parse_model_tag(tag).kind, r, T);
}

}  // namespace symfit
