#pragma once

// Library gates, gate sequences, canonical simplification and T-count.
//
// A sequence s = [s0, s1, ..., s{n-1}] denotes the operator product
// sign * M(s0) M(s1) ... M(s{n-1}): the leftmost symbol is applied last.
//
// The sign is a global +-1 carried alongside the symbols. It is physically
// meaningless but needed in SU(2): the projected Hadamard satisfies
// H H = -I and H^dagger = -H, so cancelling H H or reversing a sequence
// flips the sign of the represented matrix.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "skx/error.hpp"
#include "skx/su2.hpp"

namespace skx {

using GateId = std::uint8_t;

struct LibraryGate {
    std::string symbol;
    Unitary matrix;
    GateId adjoint;            // index of the inverse gate (itself for H)
    bool counts_as_t = false;  // contributes to the T-count
    int max_run = 0;           // longest canonical run of this gate; 0 = unbounded
    int adjoint_sign = 1;      // matrix^dagger = adjoint_sign * gates[adjoint].matrix
};

struct GateSequence {
    std::vector<GateId> gates;
    bool negated = false;

    std::size_t size() const { return gates.size(); }
    bool empty() const { return gates.empty(); }

    friend bool operator==(const GateSequence&, const GateSequence&) = default;
    /// Shortlex on the symbols, then sign.
    friend std::strong_ordering operator<=>(const GateSequence& x, const GateSequence& y) {
        if (x.gates.size() != y.gates.size()) return x.gates.size() <=> y.gates.size();
        if (auto c = x.gates <=> y.gates; c != 0) return c;
        return x.negated <=> y.negated;
    }
};

inline GateSequence concat(const GateSequence& x, const GateSequence& y) {
    GateSequence out;
    out.negated = x.negated != y.negated;
    out.gates.reserve(x.size() + y.size());
    out.gates.insert(out.gates.end(), x.gates.begin(), x.gates.end());
    out.gates.insert(out.gates.end(), y.gates.begin(), y.gates.end());
    return out;
}

/// Prefix of ceil(n/2) symbols and suffix of floor(n/2) symbols.
inline std::pair<GateSequence, GateSequence> split(const GateSequence& seq) {
    const auto mid = static_cast<std::ptrdiff_t>((seq.size() + 1) / 2);
    return {GateSequence{{seq.gates.begin(), seq.gates.begin() + mid}, seq.negated},
            GateSequence{{seq.gates.begin() + mid, seq.gates.end()}, false}};
}

namespace gates {

inline Unitary hadamard() {
    const double r = std::numbers::sqrt2 / 2.0;
    return project_to_su2({{r, 0}, {r, 0}, {r, 0}, {-r, 0}});
}

inline Unitary phase(double angle) {
    return project_to_su2({{1, 0}, {0, 0}, {0, 0}, std::polar(1.0, angle)});
}

}  // namespace gates

class Library {
public:
    Library(std::string id, std::vector<LibraryGate> gates)
        : id_(std::move(id)), gates_(std::move(gates)) {
        for (std::size_t i = 0; i < gates_.size(); ++i) {
            auto& gate = gates_[i];
            if (gate.adjoint >= gates_.size() || gates_[gate.adjoint].adjoint != i)
                throw Error("library adjoint pairing is not symmetric for " + gate.symbol);
            const Unitary dag = adjoint(gate.matrix);
            const Unitary& partner = gates_[gate.adjoint].matrix;
            if (max_entry_error(dag, partner) <= 1e-12)
                gate.adjoint_sign = 1;
            else if (max_entry_error(dag, -partner) <= 1e-12)
                gate.adjoint_sign = -1;
            else
                throw Error("adjoint partner of " + gate.symbol + " is not its inverse");
        }
    }

    /// {H, T, Tdg}; id "HT".
    static Library clifford_t() {
        return Library("HT", {{"H", gates::hadamard(), 0, false, 0},
                              {"T", gates::phase(std::numbers::pi / 4), 2, true, 7},
                              {"Tdg", gates::phase(-std::numbers::pi / 4), 1, true, 7}});
    }

    /// {H, S, Sdg, T, Tdg}; id "HST".
    static Library clifford_t_with_s() {
        return Library("HST", {{"H", gates::hadamard(), 0, false, 0},
                               {"S", gates::phase(std::numbers::pi / 2), 2, false, 0},
                               {"Sdg", gates::phase(-std::numbers::pi / 2), 1, false, 0},
                               {"T", gates::phase(std::numbers::pi / 4), 4, true, 7},
                               {"Tdg", gates::phase(-std::numbers::pi / 4), 3, true, 7}});
    }

    static Library by_id(std::string_view id) {
        if (id == "HT") return clifford_t();
        if (id == "HST") return clifford_t_with_s();
        throw LibraryMismatch("unknown library id '" + std::string(id) + "'");
    }

    const std::string& id() const { return id_; }
    std::size_t size() const { return gates_.size(); }
    const LibraryGate& operator[](GateId g) const { return gates_[g]; }
    std::span<const LibraryGate> gates() const { return gates_; }

    std::optional<GateId> find(std::string_view symbol) const {
        for (std::size_t i = 0; i < gates_.size(); ++i)
            if (gates_[i].symbol == symbol) return static_cast<GateId>(i);
        return std::nullopt;
    }

    void check(const GateSequence& seq) const {
        for (GateId g : seq.gates)
            if (g >= gates_.size())
                throw UnknownSymbol("gate index " + std::to_string(g) + " not in library " + id_);
    }

    Unitary sequence_matrix(const GateSequence& seq) const {
        check(seq);
        Unitary m = Unitary::identity();
        for (GateId g : seq.gates) m = m * gates_[g].matrix;
        return seq.negated ? -m : m;
    }

    /// Cancels adjacent inverse pairs (including H H) until none remain.
    /// The sign absorbs the -I left behind by H H, so the represented
    /// matrix is unchanged.
    GateSequence simplify(const GateSequence& seq) const {
        check(seq);
        GateSequence out;
        out.negated = seq.negated;
        out.gates.reserve(seq.size());
        for (GateId g : seq.gates) {
            if (!out.empty() && gates_[out.gates.back()].adjoint == g) {
                if (gates_[g].adjoint_sign < 0) out.negated = !out.negated;
                out.gates.pop_back();
            } else {
                out.gates.push_back(g);
            }
        }
        return out;
    }

    GateSequence adjoint_sequence(const GateSequence& seq) const {
        check(seq);
        GateSequence out;
        out.negated = seq.negated;
        out.gates.reserve(seq.size());
        for (auto it = seq.gates.rbegin(); it != seq.gates.rend(); ++it) {
            const auto& gate = gates_[*it];
            if (gate.adjoint_sign < 0) out.negated = !out.negated;
            out.gates.push_back(gate.adjoint);
        }
        return out;
    }

    int t_count(const GateSequence& seq) const {
        check(seq);
        return static_cast<int>(std::count_if(seq.gates.begin(), seq.gates.end(),
                                              [&](GateId g) { return gates_[g].counts_as_t; }));
    }

    /// True when `next` may follow a canonical sequence ending in `last`
    /// repeated `run` times; last < 0 stands for the empty sequence.
    bool may_extend(int last, int run, GateId next) const {
        if (last < 0) return true;
        if (gates_[last].adjoint == next) return false;
        const int limit = gates_[next].max_run;
        return !(last == next && limit > 0 && run >= limit);
    }

    /// No adjacent inverse pair and no T/Tdg run of eight or more.
    bool is_canonical(const GateSequence& seq) const {
        check(seq);
        int last = -1;
        int run = 0;
        for (GateId g : seq.gates) {
            if (!may_extend(last, run, g)) return false;
            run = last == g ? run + 1 : 1;
            last = g;
        }
        return true;
    }

    /// Space-separated symbols; the empty sequence is rendered as "I".
    /// A negated sequence carries a leading '-' on its first token.
    std::string to_text(const GateSequence& seq) const {
        check(seq);
        std::string out = seq.negated ? "-" : "";
        if (seq.empty()) return out + "I";
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (i > 0) out += ' ';
            out += gates_[seq.gates[i]].symbol;
        }
        return out;
    }

    GateSequence parse(std::string_view text) const {
        GateSequence seq;
        std::istringstream in{std::string(text)};
        std::string token;
        std::vector<std::string> tokens;
        while (in >> token) tokens.push_back(token);
        if (!tokens.empty() && tokens[0].starts_with('-')) {
            seq.negated = true;
            tokens[0].erase(0, 1);
            if (tokens[0].empty()) tokens.erase(tokens.begin());
        }
        if (tokens.size() == 1 && tokens[0] == "I") return seq;
        for (const auto& t : tokens) {
            auto g = find(t);
            if (!g) throw UnknownSymbol("'" + t + "' is not in library " + id_);
            seq.gates.push_back(*g);
        }
        return seq;
    }

private:
    std::string id_;
    std::vector<LibraryGate> gates_;
};

}  // namespace skx
