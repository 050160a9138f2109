#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "symfit/constraints.hpp"
#include "symfit/table.hpp"

namespace symfit::testing {

inline std::string data_path(const std::string& name) { return std::string(SYMFIT_DATA_DIR) + "/" + name; }

inline Table dysmenorrhea() {
    return Table(3, 3, {6, 4, 5, 3, 13, 10, 1, 8, 14, 2, 3, 2, 1, 3, 1, 2, 1, 2, 1, 0, 2, 0, 0, 0, 1, 1, 0});
}

inline Eigen::VectorXd random_positive(std::size_t cells, std::mt19937_64& rng, double lo = 0.2, double hi = 1.0) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::VectorXd v(static_cast<Eigen::Index>(cells));
    for (auto& x : v) x = unif(rng);
    return v / v.sum();
}

inline ProbVector random_prob(int r, int T, std::mt19937_64& rng) {
    auto lat = Lattice::get(r, T);
    return ProbVector::normalized(lat, random_positive(lat->size(), rng));
}

inline ProbVector random_symmetric(int r, int T, std::mt19937_64& rng) { return symmetrize(random_prob(r, T, rng)); }

/// Counts with every orbit total positive, so OQS[f] fits stay defined.
inline Table random_table(int r, int T, std::int64_t n, std::mt19937_64& rng) {
    auto lat = Lattice::get(r, T);
    Eigen::VectorXd p = random_positive(lat->size(), rng, 0.05, 1.0);
    std::vector<std::int64_t> counts(lat->size());
    std::discrete_distribution<std::size_t> cell(p.data(), p.data() + p.size());
    for (std::int64_t k = 0; k < n; ++k) ++counts[cell(rng)];
    for (std::size_t id = 0; id < lat->orbit_count(); ++id) {
        std::int64_t total = 0;
        for (auto i : lat->orbit_cells(id)) total += counts[i];
        if (total == 0) ++counts[lat->orbit_cells(id)[0]];
    }
    return Table(T, r, std::move(counts));
}

/// Central-difference Jacobian, step scaled to each coordinate.
inline Eigen::MatrixXd numeric_jacobian(const ConstraintSystem& cs, const Eigen::VectorXd& pi) {
    Eigen::MatrixXd J(cs.dim(), pi.size());
    for (Eigen::Index j = 0; j < pi.size(); ++j) {
        double h = 1e-6 * std::max(pi[j], 1e-3);
        Eigen::VectorXd up = pi, dn = pi;
        up[j] += h;
        dn[j] -= h;
        J.col(j) = (cs.h(up) - cs.h(dn)) / (2 * h);
    }
    return J;
}

}  // namespace symfit::testing
