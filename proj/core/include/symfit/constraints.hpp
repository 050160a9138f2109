#pragma once

// Each model is a constraint system {pi : h(pi) = 0} with an analytic
// Jacobian. Constraint functions accept unnormalized cell vectors; every
// built-in system is scale invariant, so h(c * pi) = 0 iff h(pi) = 0.

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "symfit/divergence.hpp"
#include "symfit/table.hpp"

namespace symfit {

enum class ModelKind { s, qs, oqsf, mh, me, ml, composite };

/// Columns: T-1 score contrasts u_{i_t} - u_{i_T}, then one indicator per orbit.
/// For the QS design the contrast block holds category indicators instead.
struct DesignMatrix {
    Eigen::MatrixXd X;
    int contrast_columns = 0;
    int orbit_columns = 0;

    Eigen::Index rows() const { return X.rows(); }
    Eigen::Index cols() const { return X.cols(); }
    auto contrasts() const { return X.leftCols(contrast_columns); }
    auto orbit_indicators() const { return X.rightCols(orbit_columns); }
};

DesignMatrix build_design(int r, int T, const ScoreVector& u);
DesignMatrix build_qs_design(int r, int T);

/// Orthonormal basis U of the orthogonal complement of span(X).
struct Orthocomplement {
    Eigen::MatrixXd U;
    Eigen::Index dim() const { return U.cols(); }
};

/// Singular-value cutoff is 1e-10 times the largest singular value.
Orthocomplement orthocomplement(const Eigen::MatrixXd& X);
inline Orthocomplement orthocomplement(const DesignMatrix& X) { return orthocomplement(X.X); }

/// F(pi / pi^S) = sum_t beta_t u_{i_t} + psi is decodable from a fit.
struct OrbitRatioRecovery {
    FSpec spec;
    ScoreVector scores;
};
/// Parallel cumulative logits; shifts delta_{t-1} are decodable.
struct LogitShiftRecovery {};

using ParamRecovery = std::variant<std::monostate, OrbitRatioRecovery, LogitShiftRecovery>;

class ConstraintSystem {
public:
    using Function = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;
    /// (pi, lambda) -> sum_k lambda_k * Hessian of h_k.
    using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

    ConstraintSystem(std::string tag, ModelKind kind, LatticePtr lattice, int dim, Function h, JacobianFn jacobian,
                     ParamRecovery recovery = {}, bool linear = false, HessianFn hessian = {});

    const std::string& tag() const { return tag_; }
    ModelKind kind() const { return kind_; }
    const Lattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const { return lattice_; }
    int dim() const { return dim_; }
    bool is_linear() const { return linear_; }
    const ParamRecovery& recovery() const { return recovery_; }

    Eigen::VectorXd h(const Eigen::VectorXd& pi) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& pi) const;
    /// sum_k lambda_k d^2 h_k / dpi^2. Zero for linear systems; central
    /// differences of the Jacobian when no analytic form was supplied.
    Eigen::MatrixXd lagrangian_hessian(const Eigen::VectorXd& pi, const Eigen::VectorXd& lambda) const;

private:
    std::string tag_;
    ModelKind kind_;
    LatticePtr lattice_;
    int dim_;
    Function h_;
    JacobianFn jacobian_;
    ParamRecovery recovery_;
    bool linear_;
    HessianFn hessian_;
};

ConstraintSystem constraint_oqsf(int r, int T, const ScoreVector& u, const FSpec& spec);
/// Same model on a caller-supplied orthocomplement basis (any basis of the complement of span(design)).
ConstraintSystem constraint_oqsf(const DesignMatrix& design, const Orthocomplement& basis, int r, int T,
                                 const ScoreVector& u, const FSpec& spec);
ConstraintSystem constraint_me(int r, int T, const ScoreVector& u);
ConstraintSystem constraint_mh(int r, int T);
ConstraintSystem constraint_s(int r, int T);
ConstraintSystem constraint_ml(int r, int T);
ConstraintSystem constraint_qs(int r, int T);

/// Both systems imposed at once.
ConstraintSystem combine(const ConstraintSystem& a, const ConstraintSystem& b);

/// The ME weight matrix W (rows x_t^T, t = 1..T-1).
Eigen::MatrixXd me_matrix(int r, int T, const ScoreVector& u);

struct ModelTag {
    ModelKind kind;
    std::string fspec;  // for oqsf only
};

/// "s", "qs", "oqs", "poqs", "oqsf:<spec>", "mh", "me", "ml".
ModelTag parse_model_tag(std::string_view tag);

/// Builds a system from a tag; "a+b" imposes both.
ConstraintSystem build_model(std::string_view tag, int r, int T, const ScoreVector& u);

int degrees_of_freedom(ModelKind model, int r, int T);
int degrees_of_freedom(std::string_view tag, int r, int T);

}  // namespace symfit
