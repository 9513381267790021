#pragma once

// Geometric near-neighbour access tree (Brin, 1995).
//
// Each internal node picks up to `fanout` splitting points at random from
// its cluster, assigns every point to its nearest splitting point (lowest
// index on ties), and records for every (child i, split j) pair the range
// [lo, hi] of distances from points of child i to split j. A query at
// distance d_j from split j can only have an eps-neighbour in child i if
// [lo, hi] meets [d_j - eps, d_j + eps] for every j.
//
// The tree is an exact accelerator: range and nearest queries return the
// same answers as a linear scan.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "skx/error.hpp"
#include "skx/su2.hpp"

namespace skx {

struct EuclideanMetric {
    double operator()(const AxisVector& p, const AxisVector& q) const { return euclidean_distance(p, q); }
};

struct TraceMetric {
    double operator()(const Unitary& x, const Unitary& y) const { return trace_distance(x, y); }
};

struct GnatOptions {
    std::size_t fanout = 50;
    std::size_t leaf_capacity = 64;
    std::uint64_t seed = 0;
};

struct GnatAudit {
    bool ok = true;
    std::size_t internal_nodes = 0;
    std::size_t leaves = 0;
    std::size_t max_depth = 0;
    std::size_t points_checked = 0;
    std::size_t misassigned = 0;    // points not under their nearest split
    std::size_t bound_violations = 0;
    std::size_t missing_or_duplicate = 0;
};

template <typename Point, typename Metric>
class Gnat {
public:
    Gnat() = default;

    Gnat(std::vector<Point> points, GnatOptions options = {}, Metric metric = {})
        : points_(std::move(points)), options_(options), metric_(std::move(metric)) {
        if (options_.fanout < 2) throw Error("GNAT fanout must be at least 2");
        if (options_.leaf_capacity < 1) throw Error("GNAT leaf capacity must be at least 1");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        if (points_.empty()) return;
        std::mt19937_64 rng(options_.seed);
        root_ = build(0, static_cast<std::uint32_t>(points_.size()), rng);
    }

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const GnatOptions& options() const { return options_; }
    const Point& point(std::size_t i) const { return points_[i]; }
    const Metric& metric() const { return metric_; }

    /// Indices of all points p with metric(p, q) <= eps, ascending.
    std::vector<std::size_t> range_query(const Point& q, double eps) const {
        std::vector<std::size_t> out;
        if (points_.empty()) return out;
        const double slack = prune_slack(eps);
        std::vector<double> d;
        std::vector<Child> stack{root_};
        while (!stack.empty()) {
            const Child c = stack.back();
            stack.pop_back();
            if (c.is_leaf) {
                for (std::uint32_t k = c.begin; k < c.end; ++k)
                    if (metric_(points_[order_[k]], q) <= eps) out.push_back(order_[k]);
                continue;
            }
            const Node& node = nodes_[c.node];
            const std::size_t n = node.splits.size();
            d.resize(n);
            for (std::size_t j = 0; j < n; ++j) d[j] = metric_(points_[node.splits[j]], q);
            for (std::size_t i = 0; i < n; ++i) {
                bool keep = true;
                for (std::size_t j = 0; j < n && keep; ++j) {
                    const double lo = node.lo[i * n + j];
                    const double hi = node.hi[i * n + j];
                    keep = lo <= d[j] + eps + slack && hi >= d[j] - eps - slack;
                }
                if (keep) stack.push_back(node.children[i]);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Closest point to q; ties go to the lowest index.
    std::pair<std::size_t, double> nearest(const Point& q) const {
        if (points_.empty()) throw EmptyIndex("nearest() on an empty index");
        Best best;
        search_nearest(root_, q, best);
        return {best.index, best.distance};
    }

    /// Exhaustive check of the structural invariants.
    GnatAudit audit() const {
        GnatAudit report;
        std::vector<int> seen(points_.size(), 0);
        if (!points_.empty()) audit_child(root_, 0, report, seen);
        for (int s : seen)
            if (s != 1) ++report.missing_or_duplicate;
        report.ok = report.misassigned == 0 && report.bound_violations == 0 &&
                    report.missing_or_duplicate == 0;
        return report;
    }

    /// Flattened description of the tree shape; equal for equal builds.
    std::vector<std::uint64_t> structure_signature() const {
        std::vector<std::uint64_t> sig(order_.begin(), order_.end());
        for (const Node& node : nodes_) {
            sig.push_back(node.splits.size());
            sig.insert(sig.end(), node.splits.begin(), node.splits.end());
            for (const Child& c : node.children) {
                sig.push_back(c.is_leaf);
                sig.push_back(c.is_leaf ? c.begin : c.node);
                sig.push_back(c.end);
            }
        }
        return sig;
    }

private:
    struct Child {
        bool is_leaf = true;
        std::uint32_t node = 0;   // internal node index
        std::uint32_t begin = 0;  // leaf range in order_
        std::uint32_t end = 0;
    };

    struct Node {
        std::vector<std::uint32_t> splits;
        std::vector<double> lo;  // [child * k + split]
        std::vector<double> hi;
        std::vector<Child> children;
    };

    struct Best {
        std::size_t index = std::numeric_limits<std::size_t>::max();
        double distance = std::numeric_limits<double>::infinity();

        void offer(std::size_t i, double dist) {
            if (dist < distance || (dist == distance && i < index)) {
                index = i;
                distance = dist;
            }
        }
    };

    static double prune_slack(double eps) { return 1e-9 * (1.0 + eps); }

    Child build(std::uint32_t begin, std::uint32_t end, std::mt19937_64& rng) {
        const std::uint32_t n = end - begin;
        Child leaf{true, 0, begin, end};
        if (n <= options_.leaf_capacity) return leaf;

        const Point& first = points_[order_[begin]];
        bool all_same = true;
        for (std::uint32_t k = begin + 1; k < end && all_same; ++k)
            all_same = metric_(points_[order_[k]], first) == 0.0;
        if (all_same) return leaf;

        // Random distinct splitting points via a partial Fisher-Yates shuffle.
        std::vector<std::uint32_t> pool(order_.begin() + begin, order_.begin() + end);
        std::vector<std::uint32_t> splits;
        const std::size_t want = std::min<std::size_t>(options_.fanout, n);
        for (std::size_t t = 0; t < pool.size() && splits.size() < want; ++t) {
            std::uniform_int_distribution<std::size_t> pick(t, pool.size() - 1);
            std::swap(pool[t], pool[pick(rng)]);
            const Point& cand = points_[pool[t]];
            const bool duplicate = std::any_of(splits.begin(), splits.end(), [&](std::uint32_t s) {
                return metric_(points_[s], cand) == 0.0;
            });
            if (!duplicate) splits.push_back(pool[t]);
        }

        const std::size_t k = splits.size();
        Node node;
        node.splits = splits;
        node.lo.assign(k * k, std::numeric_limits<double>::infinity());
        node.hi.assign(k * k, -std::numeric_limits<double>::infinity());

        std::vector<std::uint32_t> owner(n);
        std::vector<std::uint32_t> cluster_size(k, 0);
        std::vector<double> d(k);
        for (std::uint32_t t = 0; t < n; ++t) {
            const Point& p = points_[order_[begin + t]];
            std::uint32_t best = 0;
            for (std::size_t j = 0; j < k; ++j) {
                d[j] = metric_(p, points_[splits[j]]);
                if (d[j] < d[best]) best = static_cast<std::uint32_t>(j);
            }
            owner[t] = best;
            ++cluster_size[best];
            for (std::size_t j = 0; j < k; ++j) {
                node.lo[best * k + j] = std::min(node.lo[best * k + j], d[j]);
                node.hi[best * k + j] = std::max(node.hi[best * k + j], d[j]);
            }
        }

        // Stable partition of this range by owner.
        std::vector<std::uint32_t> offset(k + 1, 0);
        for (std::size_t j = 0; j < k; ++j) offset[j + 1] = offset[j] + cluster_size[j];
        std::vector<std::uint32_t> reordered(n);
        {
            auto cursor = offset;
            for (std::uint32_t t = 0; t < n; ++t) reordered[cursor[owner[t]]++] = order_[begin + t];
        }
        std::copy(reordered.begin(), reordered.end(), order_.begin() + begin);

        const auto index = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back(std::move(node));
        std::vector<Child> children(k);
        for (std::size_t j = 0; j < k; ++j)
            children[j] = build(begin + offset[j], begin + offset[j + 1], rng);
        nodes_[index].children = std::move(children);
        return Child{false, index, 0, 0};
    }

    void search_nearest(const Child& c, const Point& q, Best& best) const {
        if (c.is_leaf) {
            for (std::uint32_t k = c.begin; k < c.end; ++k) best.offer(order_[k], metric_(points_[order_[k]], q));
            return;
        }
        const Node& node = nodes_[c.node];
        const std::size_t n = node.splits.size();
        std::vector<double> d(n);
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = metric_(points_[node.splits[j]], q);
            best.offer(node.splits[j], d[j]);
        }
        std::vector<std::pair<double, std::size_t>> bound(n);
        for (std::size_t i = 0; i < n; ++i) {
            double lb = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                lb = std::max({lb, node.lo[i * n + j] - d[j], d[j] - node.hi[i * n + j]});
            bound[i] = {lb, i};
        }
        std::sort(bound.begin(), bound.end());
        for (const auto& [lb, i] : bound) {
            if (lb > best.distance + prune_slack(best.distance)) break;
            search_nearest(node.children[i], q, best);
        }
    }

    void collect(const Child& c, std::vector<std::uint32_t>& out) const {
        if (c.is_leaf) {
            out.insert(out.end(), order_.begin() + c.begin, order_.begin() + c.end);
            return;
        }
        for (const Child& child : nodes_[c.node].children) collect(child, out);
    }

    void audit_child(const Child& c, std::size_t depth, GnatAudit& report, std::vector<int>& seen) const {
        report.max_depth = std::max(report.max_depth, depth);
        if (c.is_leaf) {
            ++report.leaves;
            for (std::uint32_t k = c.begin; k < c.end; ++k) ++seen[order_[k]];
            return;
        }
        ++report.internal_nodes;
        const Node& node = nodes_[c.node];
        const std::size_t n = node.splits.size();
        std::vector<std::uint32_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            members.clear();
            collect(node.children[i], members);
            for (std::uint32_t p : members) {
                ++report.points_checked;
                std::size_t nearest = 0;
                double nearest_d = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < n; ++j) {
                    const double dj = metric_(points_[p], points_[node.splits[j]]);
                    if (dj < nearest_d) {
                        nearest_d = dj;
                        nearest = j;
                    }
                    if (dj < node.lo[i * n + j] || dj > node.hi[i * n + j]) ++report.bound_violations;
                }
                if (nearest != i) ++report.misassigned;
            }
            audit_child(node.children[i], depth + 1, report, seen);
        }
    }

    std::vector<Point> points_;
    GnatOptions options_;
    Metric metric_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
    Child root_;
};

using AxisGnat = Gnat<AxisVector, EuclideanMetric>;
using UnitaryGnat = Gnat<Unitary, TraceMetric>;

}  // namespace skx
