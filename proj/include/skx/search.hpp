#pragma once

// Trace-norm queries over a sequence database, answered through a GNAT.
//
// In the default axis-vector space the tree indexes the R^3 vectors of the
// entries with the Euclidean metric. A trace-norm radius eps is turned into
// a Euclidean radius by a RadiusMap; every hit is then re-scored with the
// trace norm, so reported distances are always exact.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "skx/error.hpp"
#include "skx/gnat.hpp"
#include "skx/sequence_db.hpp"
#include "skx/su2.hpp"

namespace skx {

enum class RadiusMode : std::uint8_t {
    certified,  // provable cover of the trace-norm ball (default)
    scaled,     // 2 pi eps
    both,       // max of the two
};

/// Maps a trace-norm radius around a query to a Euclidean radius in the
/// axis-vector ball.
///
/// Certified bound: trace distance d between U and U' corresponds to a
/// geodesic distance g = 2 asin(d/4) on the unit 3-sphere, and the axis
/// vector is twice the logarithm at the identity. The logarithm is
/// Lipschitz with constant rho/sin(rho) on the geodesic ball of radius
/// rho < pi, where rho = |v|/2 + g bounds every point involved. Once rho
/// reaches pi the whole ball (diameter 4 pi) is returned.
struct RadiusMap {
    RadiusMode mode = RadiusMode::certified;
    double multiplier = 1.0;

    static double whole_ball() { return 4.0 * std::numbers::pi + 1.0; }

    static double certified(double eps, const AxisVector& center) {
        if (eps <= 0.0) return 1e-12;
        if (eps >= 4.0) return whole_ball();
        const double g = 2.0 * std::asin(eps / 4.0);
        const double rho = 0.5 * center.norm() + g;
        if (rho >= std::numbers::pi - 1e-9) return whole_ball();
        const double lipschitz = rho < 1e-8 ? 1.0 : rho / std::sin(rho);
        return 2.0 * lipschitz * g * (1.0 + 1e-9) + 1e-12;
    }

    static double scaled(double eps) { return 2.0 * std::numbers::pi * eps; }

    double operator()(double eps, const AxisVector& center) const {
        double r = 0.0;
        switch (mode) {
            case RadiusMode::certified: r = certified(eps, center); break;
            case RadiusMode::scaled: r = scaled(eps); break;
            case RadiusMode::both: r = std::max(certified(eps, center), scaled(eps)); break;
        }
        return r * multiplier;
    }
};

enum class SearchSpace : std::uint8_t {
    axis_vector,  // Euclidean GNAT over axis vectors
    trace_norm,   // GNAT directly over matrices with the trace norm
};

struct SearchOptions {
    SearchSpace space = SearchSpace::axis_vector;
    MetricMode metric = MetricMode::exact;
    GnatOptions gnat{};
};

struct Hit {
    std::size_t entry = 0;
    double distance = 0.0;

    friend bool operator<(const Hit& x, const Hit& y) {
        return x.distance != y.distance ? x.distance < y.distance : x.entry < y.entry;
    }
};

class DatabaseIndex {
public:
    DatabaseIndex(std::shared_ptr<const SequenceDatabase> db, SearchOptions options = {})
        : db_(std::move(db)), options_(options) {
        if (!db_) throw EmptyDatabase("null database");
        if (options_.space == SearchSpace::axis_vector) {
            axis_ = AxisGnat(db_->vectors(), options_.gnat);
        } else {
            std::vector<Unitary> mats;
            mats.reserve(db_->size());
            for (const auto& e : db_->entries()) mats.push_back(e.matrix);
            trace_ = UnitaryGnat(std::move(mats), options_.gnat);
        }
    }

    const SequenceDatabase& database() const { return *db_; }
    std::shared_ptr<const SequenceDatabase> database_ptr() const { return db_; }
    const SearchOptions& options() const { return options_; }
    std::size_t size() const { return db_->size(); }

    double distance(const Unitary& target, std::size_t entry) const {
        return skx::distance(target, (*db_)[entry].matrix, options_.metric);
    }

    /// All entries within trace-norm eps of target, sorted by (distance,
    /// entry), truncated to `cap`.
    std::vector<Hit> within(const Unitary& target, double eps, const RadiusMap& radius = {},
                            std::size_t cap = std::numeric_limits<std::size_t>::max()) const {
        std::vector<std::size_t> raw = raw_query(target, eps, radius);
        if (options_.metric == MetricMode::phase_insensitive) {
            auto other = raw_query(-target, eps, radius);
            raw.insert(raw.end(), other.begin(), other.end());
            std::sort(raw.begin(), raw.end());
            raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
        }
        std::vector<Hit> hits;
        for (std::size_t e : raw) {
            const double d = distance(target, e);
            if (d <= eps) hits.push_back({e, d});
        }
        std::sort(hits.begin(), hits.end());
        if (hits.size() > cap) hits.resize(cap);
        return hits;
    }

    /// Exact trace-norm nearest entry; ties go to the lowest entry index.
    Hit nearest(const Unitary& target) const {
        if (db_->empty()) throw EmptyDatabase("nearest() on an empty database");
        if (options_.space == SearchSpace::trace_norm) {
            Hit best = as_hit(trace_.nearest(target), target);
            if (options_.metric == MetricMode::phase_insensitive)
                best = std::min(best, as_hit(trace_.nearest(-target), target));
            return within(target, best.distance).front();
        }
        // The Euclidean nearest neighbour bounds the trace-norm optimum;
        // a certified range query at that bound then finds it exactly.
        double bound = distance(target, axis_.nearest(to_axis_vector(target)).first);
        if (options_.metric == MetricMode::phase_insensitive)
            bound = std::min(bound, distance(target, axis_.nearest(to_axis_vector(-target)).first));
        return within(target, bound, RadiusMap{}).front();
    }

    /// within(), or the nearest entry when nothing lies within eps.
    std::vector<Hit> within_or_nearest(const Unitary& target, double eps, const RadiusMap& radius,
                                       std::size_t cap) const {
        auto hits = within(target, eps, radius, cap);
        if (hits.empty()) hits.push_back(nearest(target));
        return hits;
    }

    const AxisGnat& axis_tree() const { return axis_; }

private:
    Hit as_hit(std::pair<std::size_t, double> found, const Unitary& target) const {
        return {found.first, distance(target, found.first)};
    }

    std::vector<std::size_t> raw_query(const Unitary& target, double eps, const RadiusMap& radius) const {
        if (options_.space == SearchSpace::trace_norm) return trace_.range_query(target, eps);
        const AxisVector v = to_axis_vector(target);
        return axis_.range_query(v, radius(eps, v));
    }

    std::shared_ptr<const SequenceDatabase> db_;
    SearchOptions options_;
    AxisGnat axis_;
    UnitaryGnat trace_;
};

}  // namespace skx
