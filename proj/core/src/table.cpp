#include "symfit/table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "symfit/error.hpp"

namespace symfit {

namespace {

void check_shape(int r, int T) {
    if (r < 2) throw InputError("category count r must be at least 2, got " + std::to_string(r));
    if (T < 2) throw InputError("axis count T must be at least 2, got " + std::to_string(T));
    double cells = std::pow(static_cast<double>(r), T);
    if (cells > 1e7) throw InputError("r^T = " + std::to_string(cells) + " cells is too large");
}

void check_cell(const CellIndex& cell, int r, int T) {
    if (cell.axes() != static_cast<std::size_t>(T))
        throw InputError("cell " + cell.to_string() + " has " + std::to_string(cell.axes()) +
                         " coordinates, expected " + std::to_string(T));
    for (int c : cell.coords)
        if (c < 1 || c > r)
            throw InputError("cell " + cell.to_string() + " has coordinate outside [1, " +
                             std::to_string(r) + "]");
}

}  // namespace

std::string CellIndex::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t t = 0; t < coords.size(); ++t) os << (t ? "," : "") << coords[t];
    os << ')';
    return os.str();
}

std::size_t lattice_size(int r, int T) {
    std::size_t n = 1;
    for (int t = 0; t < T; ++t) n *= static_cast<std::size_t>(r);
    return n;
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (int i = 1; i <= k; ++i) result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return result;
}

std::size_t linear_index(const CellIndex& cell, int r, int T) {
    check_cell(cell, r, T);
    std::size_t index = 0;
    for (int c : cell.coords) index = index * static_cast<std::size_t>(r) + static_cast<std::size_t>(c - 1);
    return index;
}

CellIndex cell_at(std::size_t index, int r, int T) {
    if (index >= lattice_size(r, T)) throw InputError("cell index " + std::to_string(index) + " out of range");
    CellIndex cell{std::vector<int>(static_cast<std::size_t>(T))};
    for (int t = T - 1; t >= 0; --t) {
        cell.coords[static_cast<std::size_t>(t)] = static_cast<int>(index % static_cast<std::size_t>(r)) + 1;
        index /= static_cast<std::size_t>(r);
    }
    return cell;
}

Orbit orbit_of(const CellIndex& cell) {
    if (cell.coords.empty()) throw InputError("empty cell");
    for (int c : cell.coords)
        if (c < 1) throw InputError("cell " + cell.to_string() + " has coordinate below 1");
    Orbit orbit;
    orbit.representative = cell;
    std::sort(orbit.representative.coords.begin(), orbit.representative.coords.end());
    std::vector<int> perm = orbit.representative.coords;
    do {
        orbit.members.push_back(CellIndex{perm});
    } while (std::next_permutation(perm.begin(), perm.end()));
    return orbit;
}

std::vector<Orbit> enumerate_orbits(int r, int T) {
    check_shape(r, T);
    // Nondecreasing T-tuples over 1..r in lexicographic order.
    std::vector<Orbit> orbits;
    std::vector<int> rep(static_cast<std::size_t>(T), 1);
    while (true) {
        orbits.push_back(orbit_of(CellIndex{rep}));
        int t = T - 1;
        while (t >= 0 && rep[static_cast<std::size_t>(t)] == r) --t;
        if (t < 0) break;
        int next = rep[static_cast<std::size_t>(t)] + 1;
        for (int s = t; s < T; ++s) rep[static_cast<std::size_t>(s)] = next;
    }
    return orbits;
}

Lattice::Lattice(int r, int T) : r_(r), T_(T), cell_count_(lattice_size(r, T)) {
    coords_.resize(cell_count_ * static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < cell_count_; ++i) {
        std::size_t rem = i;
        for (int t = T - 1; t >= 0; --t) {
            coords_[i * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)] =
                static_cast<int>(rem % static_cast<std::size_t>(r));
            rem /= static_cast<std::size_t>(r);
        }
    }
    orbits_ = enumerate_orbits(r, T);
    std::map<std::vector<int>, std::size_t> by_rep;
    for (std::size_t k = 0; k < orbits_.size(); ++k) by_rep.emplace(orbits_[k].representative.coords, k);

    orbit_id_.resize(cell_count_);
    orbit_cells_.resize(orbits_.size());
    std::vector<int> key(static_cast<std::size_t>(T));
    for (std::size_t i = 0; i < cell_count_; ++i) {
        auto c = coords(i);
        for (int t = 0; t < T; ++t) key[static_cast<std::size_t>(t)] = c[static_cast<std::size_t>(t)] + 1;
        std::sort(key.begin(), key.end());
        std::size_t id = by_rep.at(key);
        orbit_id_[i] = id;
        orbit_cells_[id].push_back(i);
    }
}

std::shared_ptr<const Lattice> Lattice::get(int r, int T) {
    check_shape(r, T);
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const Lattice>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{r, T}];
    if (!slot) slot = std::shared_ptr<const Lattice>(new Lattice(r, T));
    return slot;
}

Eigen::VectorXd Lattice::orbit_totals(const Eigen::VectorXd& values) const {
    std::vector<double> totals(orbits_.size(), 0.0);
    for (std::size_t i = 0; i < cell_count_; ++i) totals[orbit_id_[i]] += values[static_cast<Eigen::Index>(i)];
    Eigen::VectorXd out(static_cast<Eigen::Index>(cell_count_));
    for (std::size_t i = 0; i < cell_count_; ++i) out[static_cast<Eigen::Index>(i)] = totals[orbit_id_[i]];
    return out;
}

Eigen::VectorXd Lattice::orbit_means(const Eigen::VectorXd& values) const {
    Eigen::VectorXd out = orbit_totals(values);
    for (std::size_t i = 0; i < cell_count_; ++i)
        out[static_cast<Eigen::Index>(i)] /= static_cast<double>(orbit_size_of_cell(i));
    return out;
}

ScoreVector::ScoreVector(std::vector<double> u) : u_(std::move(u)) {
    if (u_.size() < 2) throw InputError("score vector needs at least 2 entries");
    for (double v : u_)
        if (!std::isfinite(v)) throw InputError("scores must be finite");
    for (std::size_t j = 1; j < u_.size(); ++j)
        if (u_[j] < u_[j - 1]) throw InputError("scores must be nondecreasing");
    if (!(u_.front() < u_.back())) throw InputError("degenerate scores: u_1 must be below u_r");
}

ScoreVector ScoreVector::equal_interval(int r) {
    std::vector<double> u(static_cast<std::size_t>(r));
    std::iota(u.begin(), u.end(), 1.0);
    return ScoreVector(std::move(u));
}

ProbVector::ProbVector(LatticePtr lattice, Eigen::VectorXd probs) : lattice_(std::move(lattice)), probs_(std::move(probs)) {
    if (static_cast<std::size_t>(probs_.size()) != lattice_->size())
        throw InputError("probability vector has " + std::to_string(probs_.size()) + " entries, expected " +
                         std::to_string(lattice_->size()));
    for (Eigen::Index i = 0; i < probs_.size(); ++i)
        if (!(probs_[i] >= 0.0) || !std::isfinite(probs_[i]))
            throw DomainError("probability at cell index " + std::to_string(i) + " is negative or not finite");
    double sum = probs_.sum();
    if (std::abs(sum - 1.0) > 1e-12) throw DomainError("probabilities sum to " + std::to_string(sum) + ", not 1");
}

ProbVector ProbVector::normalized(LatticePtr lattice, Eigen::VectorXd weights) {
    double sum = weights.sum();
    if (!(sum > 0.0)) throw DomainError("cannot normalize weights with nonpositive total");
    weights /= sum;
    return ProbVector(std::move(lattice), std::move(weights));
}

ProbVector ProbVector::uniform(LatticePtr lattice) {
    auto n = static_cast<Eigen::Index>(lattice->size());
    return ProbVector(std::move(lattice), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

double ProbVector::at(const CellIndex& cell) const {
    return probs_[static_cast<Eigen::Index>(linear_index(cell, lattice_->categories(), lattice_->axes()))];
}

Table::Table(int T, int r, std::vector<std::int64_t> counts) : lattice_(Lattice::get(r, T)), counts_(std::move(counts)) {
    if (counts_.size() != lattice_->size())
        throw InputError("counts has " + std::to_string(counts_.size()) + " entries, expected r^T = " +
                         std::to_string(lattice_->size()));
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i] < 0) throw InputError("negative count at cell " + cell_at(i, r, T).to_string());
        total_ += counts_[i];
    }
    if (total_ < 1) throw InputError("table total must be at least 1");
}

std::int64_t Table::at(const CellIndex& cell) const {
    return counts_[linear_index(cell, categories(), axes())];
}

Eigen::VectorXd Table::count_vector() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(counts_.size()));
    for (std::size_t i = 0; i < counts_.size(); ++i) v[static_cast<Eigen::Index>(i)] = static_cast<double>(counts_[i]);
    return v;
}

ProbVector Table::proportions() const {
    return ProbVector::normalized(lattice_, count_vector());
}

ProbVector symmetrize(const ProbVector& p) {
    Eigen::VectorXd s = p.lattice().orbit_means(p.values());
    // Orbit means preserve the total up to rounding; renormalize to stay exact.
    return ProbVector::normalized(p.lattice_ptr(), std::move(s));
}

double conditional_orbit_prob(const ProbVector& p, const CellIndex& cell) {
    const Lattice& lat = p.lattice();
    std::size_t i = linear_index(cell, lat.categories(), lat.axes());
    double total = 0.0;
    for (std::size_t j : lat.orbit_cells(lat.orbit_id(i))) total += p[j];
    if (!(total > 0.0)) throw DomainError("conditional probability undefined: orbit of " + cell.to_string() + " has zero total");
    return p[i] / total;
}

Eigen::VectorXd marginal_dist(const Lattice& lattice, const Eigen::VectorXd& values, int axis) {
    if (axis < 1 || axis > lattice.axes())
        throw InputError("axis " + std::to_string(axis) + " out of range [1, " + std::to_string(lattice.axes()) + "]");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(lattice.categories());
    for (std::size_t i = 0; i < lattice.size(); ++i)
        m[lattice.coords(i)[static_cast<std::size_t>(axis - 1)]] += values[static_cast<Eigen::Index>(i)];
    return m;
}

Eigen::VectorXd marginal_dist(const ProbVector& p, int axis) {
    return marginal_dist(p.lattice(), p.values(), axis);
}

double marginal_moment(const ProbVector& p, int axis, const ScoreVector& u) {
    if (u.size() != static_cast<std::size_t>(p.lattice().categories()))
        throw InputError("score vector length does not match category count");
    Eigen::VectorXd m = marginal_dist(p, axis);
    double moment = 0.0;
    for (Eigen::Index j = 0; j < m.size(); ++j) moment += u[static_cast<std::size_t>(j)] * m[j];
    return moment;
}

}  // namespace symfit
