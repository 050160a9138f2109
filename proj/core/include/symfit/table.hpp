#pragma once

// r^T contingency tables: cell indexing, permutation orbits, marginals and
// symmetrization.
//
// Cells are stored row-major (first axis slowest, last axis fastest).
// Category labels are 1-based in CellIndex and 0-based everywhere else.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace symfit {

/// A cell of the lattice, coordinates 1..r, one per axis.
struct CellIndex {
    std::vector<int> coords;

    std::size_t axes() const { return coords.size(); }
    bool operator==(const CellIndex&) const = default;
    std::string to_string() const;  // "(1,2,3)"
};

/// Set of distinct coordinate permutations of a cell.
struct Orbit {
    CellIndex representative;      // coordinates sorted ascending
    std::vector<CellIndex> members;

    std::size_t size() const { return members.size(); }
};

std::size_t lattice_size(int r, int T);
std::uint64_t binomial(int n, int k);

std::size_t linear_index(const CellIndex& cell, int r, int T);
CellIndex cell_at(std::size_t index, int r, int T);

Orbit orbit_of(const CellIndex& cell);

/// All orbits of the r^T lattice, ordered by representative (lexicographic).
std::vector<Orbit> enumerate_orbits(int r, int T);

/// Precomputed cell/orbit structure for one (r, T). Immutable and shared.
class Lattice {
public:
    static std::shared_ptr<const Lattice> get(int r, int T);

    int categories() const { return r_; }
    int axes() const { return T_; }
    std::size_t size() const { return cell_count_; }
    std::size_t orbit_count() const { return orbits_.size(); }

    /// 0-based coordinates of cell `index`.
    std::span<const int> coords(std::size_t index) const {
        return {coords_.data() + index * static_cast<std::size_t>(T_), static_cast<std::size_t>(T_)};
    }
    std::size_t orbit_id(std::size_t index) const { return orbit_id_[index]; }
    const Orbit& orbit(std::size_t id) const { return orbits_[id]; }
    const std::vector<Orbit>& orbits() const { return orbits_; }
    /// Linear indices of the orbit's members, ascending.
    std::span<const std::size_t> orbit_cells(std::size_t id) const { return orbit_cells_[id]; }
    std::size_t orbit_size_of_cell(std::size_t index) const { return orbit_cells_[orbit_id_[index]].size(); }

    /// Per-cell orbit totals and orbit means of an arbitrary cell vector.
    Eigen::VectorXd orbit_totals(const Eigen::VectorXd& values) const;
    Eigen::VectorXd orbit_means(const Eigen::VectorXd& values) const;

private:
    Lattice(int r, int T);

    int r_;
    int T_;
    std::size_t cell_count_;
    std::vector<int> coords_;
    std::vector<std::size_t> orbit_id_;
    std::vector<Orbit> orbits_;
    std::vector<std::vector<std::size_t>> orbit_cells_;
};

using LatticePtr = std::shared_ptr<const Lattice>;

/// Ordered category scores u_1 <= ... <= u_r with u_1 < u_r.
class ScoreVector {
public:
    explicit ScoreVector(std::vector<double> u);
    static ScoreVector equal_interval(int r);

    std::size_t size() const { return u_.size(); }
    double operator[](std::size_t j) const { return u_[j]; }
    const std::vector<double>& values() const { return u_; }

private:
    std::vector<double> u_;
};

class ProbVector {
public:
    /// Takes probabilities as given; they must sum to 1 within 1e-12.
    ProbVector(LatticePtr lattice, Eigen::VectorXd probs);
    /// Rescales nonnegative weights to sum to one.
    static ProbVector normalized(LatticePtr lattice, Eigen::VectorXd weights);
    static ProbVector uniform(LatticePtr lattice);

    const Lattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const { return lattice_; }
    const Eigen::VectorXd& values() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[static_cast<Eigen::Index>(i)]; }
    double at(const CellIndex& cell) const;
    std::size_t size() const { return static_cast<std::size_t>(probs_.size()); }

private:
    LatticePtr lattice_;
    Eigen::VectorXd probs_;
};

class Table {
public:
    Table(int T, int r, std::vector<std::int64_t> counts);

    int axes() const { return lattice_->axes(); }
    int categories() const { return lattice_->categories(); }
    const Lattice& lattice() const { return *lattice_; }
    const LatticePtr& lattice_ptr() const { return lattice_; }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    std::int64_t total() const { return total_; }
    std::int64_t at(const CellIndex& cell) const;

    Eigen::VectorXd count_vector() const;
    ProbVector proportions() const;

private:
    LatticePtr lattice_;
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

ProbVector symmetrize(const ProbVector& p);

/// p_i divided by the total of its orbit.
double conditional_orbit_prob(const ProbVector& p, const CellIndex& cell);

/// Pr(X_t = j), j = 1..r, for 1-based axis t.
Eigen::VectorXd marginal_dist(const ProbVector& p, int axis);
Eigen::VectorXd marginal_dist(const Lattice& lattice, const Eigen::VectorXd& values, int axis);

double marginal_moment(const ProbVector& p, int axis, const ScoreVector& u);

}  // namespace symfit
