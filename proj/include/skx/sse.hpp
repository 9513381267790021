#pragma once

// Level-0 approximation: the plain base search, search space expansion
// (SSE) and recursive SSE.
//
// SSE takes every base candidate r within eps0 of the target, splits it
// into halves r_pre r_suf, collects the stored sequences within eps0_bar
// of each half and scores every product r1 r2 against the target. Recursive
// SSE replaces the two neighbourhood lookups by SSE calls on the halves and
// joins the k best results of each.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <vector>

#include "skx/error.hpp"
#include "skx/gate_library.hpp"
#include "skx/search.hpp"
#include "skx/su2.hpp"

namespace skx {

struct Scored {
    GateSequence sequence;
    Unitary matrix;
    double distance = 0.0;
};

/// Ranking used everywhere a k-best set is formed: distance, then shortlex.
inline bool better(const Scored& x, const Scored& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return x.sequence < y.sequence;
}

struct CandidateSet {
    Unitary target;
    std::vector<Scored> candidates;  // ascending by distance
    double radius = 0.0;             // eps0 actually used
};

enum class Eps0Policy : std::uint8_t {
    fixed,       // use SseConfig::eps0, falling back to the nearest entry
    best_found,  // eps0 = distance of the nearest entry
};

struct SseConfig {
    Eps0Policy eps0_policy = Eps0Policy::fixed;
    double eps0 = 1.2;
    double bar_ratio = 0.5;        // eps0_bar = bar_ratio * eps0
    std::size_t k = 32;            // sequences requested from inner SSE calls
    double eps1 = 0.0;             // inner eps0 for recursive SSE; 0 = same as outer
    std::size_t candidate_cap = 200;  // |R|, best first
    std::size_t neighbor_cap = 200;   // |R1|, |R2|, best first
    RadiusMap radius{};

    void validate() const {
        if (!(bar_ratio > 0.0 && bar_ratio <= 1.0)) throw Error("eps0_bar ratio must lie in (0, 1]");
        if (k < 1) throw Error("k must be at least 1");
        if (eps0_policy == Eps0Policy::fixed && !(eps0 > 0.0)) throw Error("eps0 must be positive");
        if (candidate_cap < 1 || neighbor_cap < 1) throw Error("caps must be positive");
    }
};

/// Keeps the k best entries with distinct matrices seen so far. Two
/// entries whose matrices agree within `same_matrix_tol` count as one and
/// the better-ranked word represents it.
class KBest {
public:
    static constexpr double same_matrix_tol = 1e-9;

    explicit KBest(std::size_t k) : k_(k) {}

    double threshold() const {
        return items_.size() < k_ ? std::numeric_limits<double>::infinity() : items_.back().distance;
    }

    void offer(Scored s) {
        auto same = std::find_if(items_.begin(), items_.end(),
                                 [&](const Scored& x) { return max_entry_error(x.matrix, s.matrix) <= same_matrix_tol; });
        if (same != items_.end()) {
            if (!better(s, *same)) return;
            items_.erase(same);
        } else if (items_.size() == k_) {
            if (!better(s, items_.back())) return;
            items_.pop_back();
        }
        items_.insert(std::upper_bound(items_.begin(), items_.end(), s, better), std::move(s));
    }

    std::vector<Scored> take() && { return std::move(items_); }
    const std::vector<Scored>& items() const { return items_; }

private:
    std::size_t k_;
    std::vector<Scored> items_;
};

class SseEngine {
public:
    SseEngine(std::shared_ptr<const DatabaseIndex> s0, std::shared_ptr<const DatabaseIndex> s1,
              SseConfig config = {})
        : s0_(std::move(s0)), s1_(std::move(s1)), config_(config) {
        if (!s0_ || !s1_) throw EmptyDatabase("SSE needs both stored sets");
        if (s0_->database().empty() || s1_->database().empty())
            throw EmptyDatabase("SSE needs non-empty stored sets");
        if (s0_->database().library().id() != s1_->database().library().id())
            throw LibraryMismatch("S0 and S1 were built over different libraries");
        config_.validate();
    }

    const SseConfig& config() const { return config_; }
    const Library& library() const { return s0_->database().library(); }
    const DatabaseIndex& s0() const { return *s0_; }
    const DatabaseIndex& s1() const { return *s1_; }
    MetricMode metric() const { return s0_->options().metric; }

    /// eps0 as prescribed by the configured policy.
    double resolve_eps0(const Unitary& target) const {
        if (config_.eps0_policy == Eps0Policy::best_found) return s0_->nearest(target).distance;
        return config_.eps0;
    }

    /// Stored sequences within eps0 of the target; the nearest one alone
    /// when that region is empty.
    CandidateSet base_approximation(const Unitary& target, double eps0) const {
        CandidateSet out{target, {}, eps0};
        auto hits = s0_->within(target, eps0, config_.radius, config_.candidate_cap);
        if (hits.empty()) {
            hits.push_back(s0_->nearest(target));
            out.radius = hits.front().distance;
        }
        out.candidates.reserve(hits.size());
        for (const Hit& h : hits) out.candidates.push_back(scored(s0_->database(), h));
        return out;
    }

    CandidateSet base_approximation(const Unitary& target) const {
        return base_approximation(target, resolve_eps0(target));
    }

    /// The k best distinct joins r1 r2.
    std::vector<Scored> space_expansion(const Unitary& target, double eps0, double eps0_bar,
                                        std::size_t k) const {
        const CandidateSet base = base_approximation(target, eps0);
        if (base.radius != eps0) eps0_bar = config_.bar_ratio * base.radius;
        KBest best(k);
        for (const Scored& r : base.candidates) {
            const auto [pre, suf] = split(r.sequence);
            const auto left = neighbours(pre, eps0_bar);
            const auto right = neighbours(suf, eps0_bar);
            join(target, left, right, best);
        }
        return std::move(best).take();
    }

    std::vector<Scored> space_expansion(const Unitary& target, std::size_t k) const {
        const double eps0 = resolve_eps0(target);
        return space_expansion(target, eps0, config_.bar_ratio * eps0, k);
    }

    /// Best four-part join Za1 Zb1 Za2 Zb2.
    Scored recursive_space_expansion(const Unitary& target, double eps0, double eps1, double eps1_bar,
                                     std::size_t k) const {
        const CandidateSet base = base_approximation(target, eps0);
        std::map<GateSequence, std::vector<Scored>> memo;
        auto expand = [&](const GateSequence& half) -> const std::vector<Scored>& {
            auto it = memo.find(half);
            if (it == memo.end()) {
                const Unitary m = library().sequence_matrix(half);
                it = memo.emplace(half, space_expansion(m, eps1, eps1_bar, k)).first;
            }
            return it->second;
        };
        KBest best(1);
        for (const Scored& r : base.candidates) {
            const auto [pre, suf] = split(r.sequence);
            const auto& left = expand(pre);
            const auto& right = expand(suf);
            join(target, left, right, best);
        }
        return std::move(best).take().front();
    }

    Scored recursive_space_expansion(const Unitary& target) const {
        const double eps0 = resolve_eps0(target);
        const double eps1 = config_.eps1 > 0.0 ? config_.eps1 : eps0;
        return recursive_space_expansion(target, eps0, eps1, config_.bar_ratio * eps1, config_.k);
    }

private:
    static Scored scored(const SequenceDatabase& db, const Hit& h) {
        const auto& e = db[h.entry];
        return {e.sequence, e.matrix, h.distance};
    }

    std::vector<Scored> neighbours(const GateSequence& half, double radius) const {
        const Unitary m = library().sequence_matrix(half);
        const auto hits = s1_->within_or_nearest(m, radius, config_.radius, config_.neighbor_cap);
        std::vector<Scored> out;
        out.reserve(hits.size());
        for (const Hit& h : hits) out.push_back(scored(s1_->database(), h));
        return out;
    }

    void join(const Unitary& target, const std::vector<Scored>& left, const std::vector<Scored>& right,
              KBest& best) const {
        const MetricMode mode = metric();
        for (const Scored& a : left)
            for (const Scored& b : right) {
                const Unitary m = a.matrix * b.matrix;
                const double d = distance(target, m, mode);
                if (d > best.threshold()) continue;
                best.offer({library().simplify(concat(a.sequence, b.sequence)), m, d});
            }
    }

    std::shared_ptr<const DatabaseIndex> s0_;
    std::shared_ptr<const DatabaseIndex> s1_;
    SseConfig config_;
};

}  // namespace skx
