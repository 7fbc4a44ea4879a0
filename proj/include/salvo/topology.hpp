#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "salvo/math.hpp"

namespace salvo {

/// Undirected communication graph over n missiles. Symmetric, zero diagonal,
/// connected; construction validates all three.
class Topology {
public:
    Topology() : n_(1), adjacency_(1, std::vector<int>{}) {}

    Topology(int n, const std::vector<std::pair<int, int>>& edges) : n_(n), adjacency_(n) {
        if (n <= 0)
            throw std::invalid_argument("Topology: need at least one node");
        for (auto [a, b] : edges) {
            if (a < 0 || a >= n || b < 0 || b >= n)
                throw std::invalid_argument("Topology: edge endpoint out of range");
            if (a == b)
                throw std::invalid_argument("Topology: self-loops not allowed");
            if (!adjacent(a, b)) {
                adjacency_[a].push_back(b);
                adjacency_[b].push_back(a);
                edges_.emplace_back(std::min(a, b), std::max(a, b));
            }
        }
        for (auto& nbrs : adjacency_)
            std::sort(nbrs.begin(), nbrs.end());
        if (!connected())
            throw std::invalid_argument("Topology: graph must be connected");
    }

    static Topology chain(int n) {
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i + 1 < n; ++i)
            edges.emplace_back(i, i + 1);
        return Topology(n, edges);
    }

    static Topology complete(int n) {
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                edges.emplace_back(i, j);
        return Topology(n, edges);
    }

    int size() const { return n_; }

    const std::vector<int>& neighbors(int i) const {
        if (i < 0 || i >= n_)
            throw std::out_of_range("Topology::neighbors: index out of range");
        return adjacency_[i];
    }

    bool adjacent(int i, int j) const {
        const auto& nbrs = adjacency_[i];
        return std::find(nbrs.begin(), nbrs.end(), j) != nbrs.end();
    }

    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

private:
    bool connected() const {
        std::vector<bool> seen(n_, false);
        std::vector<int> stack{0};
        seen[0] = true;
        int count = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : adjacency_[v]) {
                if (!seen[w]) {
                    seen[w] = true;
                    ++count;
                    stack.push_back(w);
                }
            }
        }
        return count == n_;
    }

    int n_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<std::pair<int, int>> edges_;
};

/// Desired impact geometry: a nominal LOS angle for the first missile plus
/// relative angles between consecutive missiles.
struct ImpactAngleSpec {
    double nominal = 0.0;          // Xi_d1, rad
    std::vector<double> relative;  // delta_d^j, rad, j = 1..n-1
};

/// Desired impact angle of missile i (0-based): nominal plus the cumulative
/// relative angles of the missiles before it, wrapped.
inline double desired_impact_angle(const ImpactAngleSpec& spec, int i) {
    double angle = spec.nominal;
    for (int j = 0; j < i; ++j)
        angle += spec.relative.at(j);
    return wrap_angle(angle);
}

/// Consensus error of time for missile i: sum over neighbors of (tgo_i - tgo_j).
/// Sentinel (+inf) operands saturate each term to +-saturation; two sentinels
/// cancel to zero.
inline double consensus_time_error(std::span<const double> t_go, const Topology& topology, int i,
                                   double saturation) {
    double error = 0.0;
    for (int j : topology.neighbors(i)) {
        const double diff = t_go[static_cast<std::size_t>(i)] - t_go[static_cast<std::size_t>(j)];
        if (std::isnan(diff))
            continue;  // inf - inf: both opening, no finite comparison
        error += std::clamp(diff, -saturation, saturation);
    }
    return error;
}

/// Consensus error of LOS angle for missile i: sum over neighbors of
/// (e_xi_i - e_xi_j), where e_xi = Xi_m - Xi_d is precomputed per missile.
inline double consensus_angle_error(std::span<const double> los_errors, const Topology& topology,
                                    int i) {
    double error = 0.0;
    for (int j : topology.neighbors(i))
        error += los_errors[static_cast<std::size_t>(i)] - los_errors[static_cast<std::size_t>(j)];
    return error;
}

}  // namespace salvo
