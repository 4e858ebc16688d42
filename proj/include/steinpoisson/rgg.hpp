#pragma once

// Random geometric graph queries: edge counts, degrees, add-one costs.
//
// A flat cell grid with 3^d wrapped neighborhoods; the cell size is >= the
// query radius, so all neighbors of a point lie in adjacent cells.

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "steinpoisson/domain.hpp"

namespace steinpoisson {

inline void check_rgg_radius(double t) {
    if (!(t > 0.0)) throw std::invalid_argument("rgg: radius must be > 0");
    if (!(t < 0.5))
        throw std::invalid_argument("rgg: radius must be < 1/2 on the torus "
                                    "(ball and lens volumes break beyond)");
}

class NeighborGrid {
public:
    NeighborGrid(const PointConfiguration& config, double radius)
        : config_(&config), dim_(config.dim), radius_(radius) {
        check_rgg_radius(radius);
        cells_per_axis_ = std::max(1, static_cast<int>(std::floor(1.0 / radius)));
        cell_size_ = 1.0 / cells_per_axis_;
        total_cells_ = 1;
        for (int k = 0; k < dim_; ++k) total_cells_ *= cells_per_axis_;

        const std::size_t m = config.size();
        cell_of_.resize(m);
        std::vector<int> counts(total_cells_ + 1, 0);
        for (std::size_t i = 0; i < m; ++i) {
            cell_of_[i] = cell_index(config.point(i));
            ++counts[cell_of_[i] + 1];
        }
        offsets_.assign(counts.begin(), counts.end());
        for (std::size_t c = 1; c < offsets_.size(); ++c) offsets_[c] += offsets_[c - 1];
        members_.resize(m);
        std::vector<int> cursor(offsets_.begin(), offsets_.end() - 1);
        for (std::size_t i = 0; i < m; ++i) members_[cursor[cell_of_[i]]++] = static_cast<int>(i);
    }

    double radius() const { return radius_; }
    double cell_size() const { return cell_size_; }

    /// Number of points x with 0 < dist(x, z) <= radius. A point coinciding
    /// with z exactly is excluded by the strict inequality.
    int degree(PointView z) const {
        const double r2 = radius_ * radius_;
        int deg = 0;
        for_each_candidate(z, [&](int j) {
            const double d2 = torus_distance_sq(z, config_->point(j));
            if (d2 > 0.0 && d2 <= r2) ++deg;
        });
        return deg;
    }

    /// Number of unordered pairs at distance in (0, radius].
    std::int64_t count_edges() const {
        const double r2 = radius_ * radius_;
        std::int64_t edges = 0;
        const std::size_t m = config_->size();
        for (std::size_t i = 0; i < m; ++i) {
            const PointView pi = config_->point(i);
            for_each_candidate(pi, [&](int j) {
                if (j <= static_cast<int>(i)) return;
                const double d2 = torus_distance_sq(pi, config_->point(j));
                if (d2 > 0.0 && d2 <= r2) ++edges;
            });
        }
        return edges;
    }

    /// Visit each unordered pair at distance in (0, radius] once.
    template <class Fn>
    void for_each_edge(Fn&& fn) const {
        const double r2 = radius_ * radius_;
        const std::size_t m = config_->size();
        for (std::size_t i = 0; i < m; ++i) {
            const PointView pi = config_->point(i);
            for_each_candidate(pi, [&](int j) {
                if (j <= static_cast<int>(i)) return;
                const double d2 = torus_distance_sq(pi, config_->point(j));
                if (d2 > 0.0 && d2 <= r2) fn(static_cast<int>(i), j, std::sqrt(d2));
            });
        }
    }

private:
    int cell_index(PointView p) const {
        int idx = 0;
        for (int k = 0; k < dim_; ++k) {
            int c = static_cast<int>(p[k] * cells_per_axis_);
            c = std::clamp(c, 0, cells_per_axis_ - 1);
            idx = idx * cells_per_axis_ + c;
        }
        return idx;
    }

    template <class Fn>
    void for_each_candidate(PointView z, Fn&& fn) const {
        std::array<int, 3> base{};
        for (int k = 0; k < dim_; ++k) {
            int c = static_cast<int>(z[k] * cells_per_axis_);
            base[k] = std::clamp(c, 0, cells_per_axis_ - 1);
        }
        // wrapped 3^d neighborhood; dedup axes when the grid has <= 3 cells
        std::array<std::array<int, 3>, 3> axis{};
        std::array<int, 3> axis_n{};
        for (int k = 0; k < dim_; ++k) {
            int n = 0;
            for (int off = -1; off <= 1; ++off) {
                int c = (base[k] + off + cells_per_axis_) % cells_per_axis_;
                bool seen = false;
                for (int q = 0; q < n; ++q) seen = seen || axis[k][q] == c;
                if (!seen) axis[k][n++] = c;
            }
            axis_n[k] = n;
        }
        std::array<int, 3> pick{};
        visit_cells(axis, axis_n, pick, 0, fn);
    }

    template <class Fn>
    void visit_cells(const std::array<std::array<int, 3>, 3>& axis,
                     const std::array<int, 3>& axis_n, std::array<int, 3>& pick,
                     int k, Fn&& fn) const {
        if (k == dim_) {
            int idx = 0;
            for (int q = 0; q < dim_; ++q) idx = idx * cells_per_axis_ + pick[q];
            for (int s = offsets_[idx]; s < offsets_[idx + 1]; ++s) fn(members_[s]);
            return;
        }
        for (int q = 0; q < axis_n[k]; ++q) {
            pick[k] = axis[k][q];
            visit_cells(axis, axis_n, pick, k + 1, fn);
        }
    }

    const PointConfiguration* config_;
    int dim_;
    double radius_;
    int cells_per_axis_ = 1;
    double cell_size_ = 1.0;
    int total_cells_ = 1;
    std::vector<int> cell_of_;
    std::vector<int> offsets_;
    std::vector<int> members_;
};

inline std::int64_t count_edges(const PointConfiguration& config, double t) {
    check_rgg_radius(t);
    return NeighborGrid(config, t).count_edges();
}

inline int degree(const PointConfiguration& config, PointView z, double t) {
    check_rgg_radius(t);
    return NeighborGrid(config, t).degree(z);
}

} // namespace steinpoisson
