/*
 * young_measure.hpp — finitely supported probability measures on state space.
 *
 * Atoms are (point, weight) pairs with nonnegative weights summing to one.
 * A measure may carry an optional parameter-cell index when it is one member
 * of a piecewise-constant-in-(t,x) family; without it the measure is
 * homogeneous. Operations: barycenter, expectations, p-moments, Jensen gaps,
 * empirical extraction from samples, and the exact 1-Wasserstein distance
 * (small supports, solved as a min-cost transport problem).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace afree {

class DiscreteYoungMeasure {
  public:
    struct Atom {
        Eigen::VectorXd point;
        double weight = 0.0;
    };

    // Validates weights (nonnegative, total within 1e-12 of one), merges
    // exactly duplicated points by summing their weights, drops zero-weight
    // atoms, and normalizes the total to one.
    DiscreteYoungMeasure(std::vector<Eigen::VectorXd> points, std::vector<double> weights,
                         std::optional<std::int64_t> cell_index = std::nullopt)
        : cell_index_(cell_index) {
        if (points.empty() || points.size() != weights.size())
            throw std::invalid_argument("DiscreteYoungMeasure: atom/weight count mismatch");
        d_ = static_cast<int>(points.front().size());
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].size() != d_)
                throw std::invalid_argument("DiscreteYoungMeasure: atom dimension mismatch");
            if (!points[i].allFinite() || !std::isfinite(weights[i]))
                throw std::invalid_argument("DiscreteYoungMeasure: non-finite atom");
            if (weights[i] < 0.0) throw std::invalid_argument("DiscreteYoungMeasure: negative weight");
            total += weights[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteYoungMeasure: weights do not sum to one");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (weights[i] == 0.0) continue;
            bool merged = false;
            for (auto& atom : atoms_) {
                if (atom.point == points[i]) {
                    atom.weight += weights[i];
                    merged = true;
                    break;
                }
            }
            if (!merged) atoms_.push_back({std::move(points[i]), weights[i]});
        }
        if (atoms_.empty()) throw std::invalid_argument("DiscreteYoungMeasure: no atoms with positive weight");
        for (auto& atom : atoms_) atom.weight /= total;
    }

    static DiscreteYoungMeasure dirac(const Eigen::VectorXd& point) {
        return DiscreteYoungMeasure({point}, {1.0});
    }

    static DiscreteYoungMeasure two_point(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                          double weight_a) {
        return DiscreteYoungMeasure({a, b}, {weight_a, 1.0 - weight_a});
    }

    int dim() const { return d_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t support_size() const { return atoms_.size(); }
    const std::optional<std::int64_t>& cell_index() const { return cell_index_; }
    bool homogeneous() const { return !cell_index_.has_value(); }

    // <nu, id>
    Eigen::VectorXd barycenter() const {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(d_);
        for (const auto& atom : atoms_) b += atom.weight * atom.point;
        return b;
    }

    // <nu, f> for vector-valued f; throws if f is non-finite at an atom.
    Eigen::VectorXd expectation(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) const {
        Eigen::VectorXd acc;
        for (const auto& atom : atoms_) {
            Eigen::VectorXd v = f(atom.point);
            if (!v.allFinite()) throw std::domain_error("expectation: f non-finite at an atom");
            if (acc.size() == 0)
                acc = atom.weight * v;
            else
                acc += atom.weight * v;
        }
        return acc;
    }

    double expectation_scalar(const std::function<double(const Eigen::VectorXd&)>& g) const {
        double acc = 0.0;
        for (const auto& atom : atoms_) {
            double v = g(atom.point);
            if (!std::isfinite(v)) throw std::domain_error("expectation: g non-finite at an atom");
            acc += atom.weight * v;
        }
        return acc;
    }

    // sum_i w_i |p_i|^p; finite for every discrete measure, so the moment
    // condition of the generability theorem is automatic here.
    double p_moment(double p) const {
        if (p < 1.0) throw std::invalid_argument("p_moment: p < 1");
        double acc = 0.0;
        for (const auto& atom : atoms_) acc += atom.weight * std::pow(atom.point.norm(), p);
        return acc;
    }

    // <nu, g> - g(barycenter). Nonnegative means the Jensen inequality holds
    // for this g; a negative gap is a violation certificate.
    double jensen_gap(const std::function<double(const Eigen::VectorXd&)>& g) const {
        double at_bary = g(barycenter());
        if (!std::isfinite(at_bary)) throw std::domain_error("jensen_gap: g non-finite at barycenter");
        return expectation_scalar(g) - at_bary;
    }

  private:
    int d_ = 0;
    std::vector<Atom> atoms_;
    std::optional<std::int64_t> cell_index_;
};

// Greedy first-fit clustering of samples into atoms: a sample joins the
// first existing atom within cluster_tol (atom relocated to the running mean
// of its samples), otherwise it opens a new atom. Deterministic in sample
// order.
inline DiscreteYoungMeasure empirical_measure(const std::vector<Eigen::VectorXd>& samples,
                                              double cluster_tol) {
    if (samples.empty()) throw std::invalid_argument("empirical_measure: no samples");
    if (!(cluster_tol > 0.0)) throw std::invalid_argument("empirical_measure: cluster_tol <= 0");
    std::vector<Eigen::VectorXd> centers;
    std::vector<double> counts;
    for (const auto& s : samples) {
        bool placed = false;
        for (std::size_t i = 0; i < centers.size(); ++i) {
            if ((s - centers[i]).norm() <= cluster_tol) {
                counts[i] += 1.0;
                centers[i] += (s - centers[i]) / counts[i];
                placed = true;
                break;
            }
        }
        if (!placed) {
            centers.push_back(s);
            counts.push_back(1.0);
        }
    }
    const double n = static_cast<double>(samples.size());
    std::vector<double> weights(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) weights[i] = counts[i] / n;
    return DiscreteYoungMeasure(std::move(centers), std::move(weights));
}

namespace detail {

// Exact min-cost transport between small discrete distributions by
// successive shortest augmenting paths with potentials (dense Dijkstra on
// the bipartite residual graph). Costs must be nonnegative.
inline double min_cost_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                 const Eigen::MatrixXd& cost) {
    const int m = static_cast<int>(supply.size());
    const int n = static_cast<int>(demand.size());
    const int nodes = m + n;
    constexpr double kMassEps = 1e-13;

    std::vector<double> remaining_supply = supply;
    std::vector<double> remaining_demand = demand;
    Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(m, n);
    std::vector<double> potential(static_cast<std::size_t>(nodes), 0.0);

    auto total_left = [&] {
        double t = 0.0;
        for (double s : remaining_supply) t += s;
        return t;
    };

    const int max_rounds = 4 * nodes * nodes + 16;
    int rounds = 0;
    while (total_left() > kMassEps) {
        if (++rounds > max_rounds) throw std::runtime_error("min_cost_transport: did not converge");
        // Multi-source Dijkstra from all sources with remaining supply.
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> dist(static_cast<std::size_t>(nodes), inf);
        std::vector<int> parent(static_cast<std::size_t>(nodes), -1);
        std::vector<bool> done(static_cast<std::size_t>(nodes), false);
        for (int i = 0; i < m; ++i)
            if (remaining_supply[i] > kMassEps) dist[static_cast<std::size_t>(i)] = 0.0;
        for (int iter = 0; iter < nodes; ++iter) {
            int u = -1;
            double best = inf;
            for (int v = 0; v < nodes; ++v)
                if (!done[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] < best) {
                    best = dist[static_cast<std::size_t>(v)];
                    u = v;
                }
            if (u < 0) break;
            done[static_cast<std::size_t>(u)] = true;
            if (u < m) {
                for (int j = 0; j < n; ++j) {
                    double rc = cost(u, j) + potential[static_cast<std::size_t>(u)] -
                                potential[static_cast<std::size_t>(m + j)];
                    if (rc < 0.0) rc = 0.0;  // guard fp drift
                    if (dist[static_cast<std::size_t>(u)] + rc < dist[static_cast<std::size_t>(m + j)]) {
                        dist[static_cast<std::size_t>(m + j)] = dist[static_cast<std::size_t>(u)] + rc;
                        parent[static_cast<std::size_t>(m + j)] = u;
                    }
                }
            } else {
                int j = u - m;
                for (int i = 0; i < m; ++i) {
                    if (flow(i, j) <= 0.0) continue;
                    double rc = -cost(i, j) + potential[static_cast<std::size_t>(u)] -
                                potential[static_cast<std::size_t>(i)];
                    if (rc < 0.0) rc = 0.0;
                    if (dist[static_cast<std::size_t>(u)] + rc < dist[static_cast<std::size_t>(i)]) {
                        dist[static_cast<std::size_t>(i)] = dist[static_cast<std::size_t>(u)] + rc;
                        parent[static_cast<std::size_t>(i)] = u;
                    }
                }
            }
        }
        // Closest sink with remaining demand.
        int target = -1;
        double best = inf;
        for (int j = 0; j < n; ++j)
            if (remaining_demand[j] > kMassEps && dist[static_cast<std::size_t>(m + j)] < best) {
                best = dist[static_cast<std::size_t>(m + j)];
                target = m + j;
            }
        if (target < 0) throw std::runtime_error("min_cost_transport: no augmenting path");

        // Bottleneck along the path.
        double push = remaining_demand[target - m];
        for (int v = target; parent[static_cast<std::size_t>(v)] >= 0; v = parent[static_cast<std::size_t>(v)]) {
            int u = parent[static_cast<std::size_t>(v)];
            if (u >= m && v < m) push = std::min(push, flow(v, u - m));  // backward arc
        }
        {
            int origin = target;
            while (parent[static_cast<std::size_t>(origin)] >= 0) origin = parent[static_cast<std::size_t>(origin)];
            push = std::min(push, remaining_supply[origin]);
        }
        // Apply.
        for (int v = target; parent[static_cast<std::size_t>(v)] >= 0; v = parent[static_cast<std::size_t>(v)]) {
            int u = parent[static_cast<std::size_t>(v)];
            if (u < m)
                flow(u, v - m) += push;
            else
                flow(v, u - m) -= push;
        }
        {
            int origin = target;
            while (parent[static_cast<std::size_t>(origin)] >= 0) origin = parent[static_cast<std::size_t>(origin)];
            remaining_supply[origin] -= push;
        }
        remaining_demand[target - m] -= push;
        for (int v = 0; v < nodes; ++v)
            if (dist[static_cast<std::size_t>(v)] < inf)
                potential[static_cast<std::size_t>(v)] += dist[static_cast<std::size_t>(v)];
            else
                potential[static_cast<std::size_t>(v)] += best;
    }

    double total_cost = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) total_cost += flow(i, j) * cost(i, j);
    return total_cost;
}

}  // namespace detail

// Exact 1-Wasserstein distance between two discrete measures on the same
// state space (Euclidean ground cost).
inline double measure_distance(const DiscreteYoungMeasure& nu1, const DiscreteYoungMeasure& nu2) {
    if (nu1.dim() != nu2.dim()) throw std::invalid_argument("measure_distance: dimension mismatch");
    const auto& a = nu1.atoms();
    const auto& b = nu2.atoms();
    std::vector<double> supply(a.size()), demand(b.size());
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        supply[i] = a[i].weight;
        for (std::size_t j = 0; j < b.size(); ++j)
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (a[i].point - b[j].point).norm();
    }
    for (std::size_t j = 0; j < b.size(); ++j) demand[j] = b[j].weight;
    return detail::min_cost_transport(supply, demand, cost);
}

}  // namespace afree
