#pragma once

// Solovay-Kitaev recursion with a pluggable level-0 approximator.
//
// Level n approximates G by  V~ W~ V~^dagger W~^dagger S(n-1), where
// (V, W) is the balanced commutator of the residual G S(n-1)^dagger and
// V~, W~ are level-(n-1) approximations of V and W. The three variants
// differ only in the level-0 approximator: the plain nearest stored
// sequence, SSE, or recursive SSE.

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skx/error.hpp"
#include "skx/gate_library.hpp"
#include "skx/sse.hpp"
#include "skx/su2.hpp"

namespace skx {

enum class Variant : std::uint8_t { original, sse, rsse };

inline std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::original: return "original";
        case Variant::sse: return "sse";
        case Variant::rsse: return "rsse";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    if (s == "original") return Variant::original;
    if (s == "sse") return Variant::sse;
    if (s == "rsse") return Variant::rsse;
    throw ParseError("unknown variant '" + std::string(s) + "'");
}

/// Which approximator serves the level-0 calls made for V and W.
enum class InnerBase : std::uint8_t { variant, original };

struct CompilerConfig {
    Variant variant = Variant::original;
    double target_eps = 1e-3;
    int max_depth = 4;
    InnerBase inner_base = InnerBase::variant;

    void validate() const {
        if (!(target_eps >= 0.0)) throw Error("target accuracy must be nonnegative");
        if (max_depth < 0) throw Error("max depth must be nonnegative");
    }
};

/// A sequence with its exact matrix and the length it had before any
/// simplification of the concatenated pieces.
struct Approximation {
    GateSequence sequence;
    Unitary matrix;
    std::size_t raw_length = 0;
};

struct LevelTrace {
    int depth = 0;
    double level_accuracy = 0.0;  // accuracy of this level's own sequence
    double accuracy = 0.0;        // best accuracy over levels 0..depth
    std::size_t length = 0;       // of the best sequence so far
    int t_count = 0;              // of the best sequence so far
    std::size_t raw_length = 0;   // of this level's sequence, pre-simplification
    double elapsed_s = 0.0;       // since the start of compile()
    GateSequence sequence;        // best sequence so far
};

struct ApproximationResult {
    GateSequence sequence;
    double accuracy = 0.0;
    int t_count = 0;
    std::size_t length = 0;
    int depth = 0;
    Variant variant = Variant::original;
    double compile_time_s = 0.0;
    std::vector<LevelTrace> levels;
};

/// G S^dagger.
inline Unitary residual(const Library& lib, const Unitary& target, const GateSequence& seq) {
    return target * adjoint(lib.sequence_matrix(seq));
}

using Approximator = std::function<Approximation(const Unitary&)>;

/// One Solovay-Kitaev step. Returns prev unchanged when it is exact and
/// throws DegenerateRotation when the residual is -I.
inline Approximation sk_level(const Library& lib, const Unitary& target, const Approximation& prev,
                              const Approximator& approximate) {
    const Unitary delta = target * adjoint(prev.matrix);
    if (max_entry_error(delta, Unitary::identity()) <= 1e-15) return prev;
    const auto [v, w] = gc_decompose(delta);
    const Approximation av = approximate(v);
    const Approximation aw = approximate(w);
    GateSequence seq = concat(concat(av.sequence, aw.sequence),
                              concat(lib.adjoint_sequence(av.sequence), lib.adjoint_sequence(aw.sequence)));
    seq = lib.simplify(concat(seq, prev.sequence));
    const Unitary m = av.matrix * aw.matrix * adjoint(av.matrix) * adjoint(aw.matrix) * prev.matrix;
    return {std::move(seq), m, 2 * av.raw_length + 2 * aw.raw_length + prev.raw_length};
}

class SkCompiler {
public:
    SkCompiler(std::shared_ptr<const SseEngine> engine, CompilerConfig config = {})
        : engine_(std::move(engine)), config_(config) {
        if (!engine_) throw EmptyDatabase("compiler needs a search engine");
        config_.validate();
    }

    const CompilerConfig& config() const { return config_; }
    const SseEngine& engine() const { return *engine_; }
    const Library& library() const { return engine_->library(); }

    /// Level-0 approximation of `u` with the given variant.
    Approximation base(const Unitary& u, Variant variant) const {
        Scored s;
        switch (variant) {
            case Variant::original: {
                const Hit h = engine_->s0().nearest(u);
                const auto& e = engine_->s0().database()[h.entry];
                s = {e.sequence, e.matrix, h.distance};
                break;
            }
            case Variant::sse: s = engine_->space_expansion(u, 1).front(); break;
            case Variant::rsse: s = engine_->recursive_space_expansion(u); break;
        }
        return evaluated({s.sequence, s.matrix, s.sequence.size()});
    }

    /// Depth-n approximation of `u`. The chain for `u` itself uses
    /// `variant` at level 0; V and W follow the inner-base policy.
    Approximation approximate(const Unitary& u, int depth, Variant variant,
                              InnerBase inner_base = InnerBase::variant) const {
        if (depth == 0) return base(u, variant);
        const Approximation prev = approximate(u, depth - 1, variant, inner_base);
        return evaluated(sk_level(library(), u, prev, inner(depth - 1, variant, inner_base)));
    }

    ApproximationResult compile(const Unitary& target) const { return compile(target, config_); }

    ApproximationResult compile(const Unitary& target, const CompilerConfig& cfg) const {
        cfg.validate();
        using clock = std::chrono::steady_clock;
        const auto start = clock::now();
        const MetricMode mode = engine_->metric();
        auto seconds = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };

        ApproximationResult result;
        result.variant = cfg.variant;
        Approximation current = base(target, cfg.variant);
        Approximation best = current;
        double best_acc = distance(target, current.matrix, mode);
        int best_depth = 0;
        auto record = [&](int depth) {
            const double acc = distance(target, current.matrix, mode);
            if (acc < best_acc) {
                best = current;
                best_acc = acc;
                best_depth = depth;
            }
            result.levels.push_back({depth, acc, best_acc, best.sequence.size(),
                                     library().t_count(best.sequence), current.raw_length, seconds(), best.sequence});
        };
        record(0);
        for (int depth = 1; depth <= cfg.max_depth && best_acc > cfg.target_eps; ++depth) {
            try {
                current = evaluated(sk_level(library(), target, current, inner(depth - 1, cfg.variant, cfg.inner_base)));
            } catch (const DegenerateRotation&) {
                break;
            }
            record(depth);
        }
        result.sequence = best.sequence;
        result.accuracy = best_acc;
        result.t_count = library().t_count(best.sequence);
        result.length = best.sequence.size();
        result.depth = best_depth;
        result.compile_time_s = seconds();
        return result;
    }

private:
    /// Replaces the accumulated matrix by the left-to-right product of the
    /// sequence, so equal sequences always report equal accuracies.
    Approximation evaluated(Approximation a) const {
        a.matrix = library().sequence_matrix(a.sequence);
        return a;
    }

    Approximator inner(int depth, Variant variant, InnerBase inner_base) const {
        const Variant v = inner_base == InnerBase::variant ? variant : Variant::original;
        return [this, depth, v, inner_base](const Unitary& u) { return approximate(u, depth, v, inner_base); };
    }

    std::shared_ptr<const SseEngine> engine_;
    CompilerConfig config_;
};

}  // namespace skx
