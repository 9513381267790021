#include <gtest/gtest.h>

#include "skx/sse.hpp"

using namespace skx;

namespace {

struct Fixture {
    std::shared_ptr<const SequenceDatabase> db;
    std::shared_ptr<const DatabaseIndex> index;
};

const Fixture& small() {
    static const Fixture f = [] {
        auto db = std::make_shared<const SequenceDatabase>(SequenceDatabase::enumerate(Library::clifford_t(), 6));
        return Fixture{db, std::make_shared<const DatabaseIndex>(db)};
    }();
    return f;
}

const Fixture& medium() {
    static const Fixture f = [] {
        auto db = std::make_shared<const SequenceDatabase>(
            SequenceDatabase::enumerate(Library::clifford_t(), 10).distinct());
        return Fixture{db, std::make_shared<const DatabaseIndex>(db)};
    }();
    return f;
}

// Oracles below scan the whole database; the small database has fewer
// entries than any cap, so caps never bind.

std::vector<Scored> ball_oracle(const SequenceDatabase& db, const Unitary& t, double eps, double* used = nullptr) {
    std::vector<Scored> out;
    std::size_t nearest = 0;
    for (std::size_t i = 0; i < db.size(); ++i) {
        const double d = trace_distance(t, db[i].matrix);
        if (d <= eps) out.push_back({db[i].sequence, db[i].matrix, d});
        if (d < trace_distance(t, db[nearest].matrix)) nearest = i;
    }
    if (used) *used = eps;
    if (out.empty()) {
        const double d = trace_distance(t, db[nearest].matrix);
        out.push_back({db[nearest].sequence, db[nearest].matrix, d});
        if (used) *used = d;
    }
    return out;
}

std::vector<Scored> all_joins(const Library& lib, const Unitary& t, const std::vector<Scored>& left,
                              const std::vector<Scored>& right) {
    std::vector<Scored> out;
    for (const auto& a : left)
        for (const auto& b : right) {
            const Unitary m = a.matrix * b.matrix;
            out.push_back({lib.simplify(concat(a.sequence, b.sequence)), m, trace_distance(t, m)});
        }
    return out;
}

// Best-ranked word per matrix, then the k best of those.
std::vector<Scored> k_best_oracle(std::vector<Scored> all, std::size_t k) {
    std::sort(all.begin(), all.end(), better);
    std::vector<Scored> out;
    for (auto& s : all) {
        if (out.size() == k) break;
        const bool seen = std::any_of(out.begin(), out.end(), [&](const Scored& x) {
            return max_entry_error(x.matrix, s.matrix) <= KBest::same_matrix_tol;
        });
        if (!seen) out.push_back(std::move(s));
    }
    return out;
}

std::vector<Scored> sse_oracle(const SequenceDatabase& db, const Unitary& t, double eps0, double ratio,
                               std::size_t k) {
    double used = 0.0;
    const auto base = ball_oracle(db, t, eps0, &used);
    const double bar = ratio * used;
    std::vector<Scored> joins;
    for (const auto& r : base) {
        const auto [pre, suf] = split(r.sequence);
        const auto& lib = db.library();
        const auto more = all_joins(lib, t, ball_oracle(db, lib.sequence_matrix(pre), bar),
                                    ball_oracle(db, lib.sequence_matrix(suf), bar));
        joins.insert(joins.end(), more.begin(), more.end());
    }
    return k_best_oracle(std::move(joins), k);
}

Scored rsse_oracle(const SequenceDatabase& db, const Unitary& t, double eps0, double eps1, double ratio,
                   std::size_t k) {
    const auto& lib = db.library();
    std::vector<Scored> joins;
    for (const auto& r : ball_oracle(db, t, eps0)) {
        const auto [pre, suf] = split(r.sequence);
        const auto more = all_joins(lib, t, sse_oracle(db, lib.sequence_matrix(pre), eps1, ratio, k),
                                    sse_oracle(db, lib.sequence_matrix(suf), eps1, ratio, k));
        joins.insert(joins.end(), more.begin(), more.end());
    }
    return k_best_oracle(std::move(joins), 1).front();
}

void expect_same(const Scored& got, const Scored& want, const Library& lib) {
    EXPECT_EQ(lib.to_text(got.sequence), lib.to_text(want.sequence));
    EXPECT_EQ(got.distance, want.distance);
}

}  // namespace

TEST(KBest, KeepsBestDistinct) {
    KBest best(2);
    const Unitary a = random_unitary(1), b = random_unitary(2), c = random_unitary(3);
    best.offer({GateSequence{{0, 1}}, a, 0.5});
    best.offer({GateSequence{{0}}, a, 0.5});  // same matrix, shorter word
    best.offer({GateSequence{{1}}, b, 0.7});
    best.offer({GateSequence{{2}}, c, 0.9});  // worse than both
    ASSERT_EQ(best.items().size(), 2u);
    EXPECT_EQ(best.items()[0].sequence, GateSequence{{0}});
    EXPECT_EQ(best.items()[1].sequence, GateSequence{{1}});
    EXPECT_EQ(best.threshold(), 0.7);
    best.offer({GateSequence{{2}}, c, 0.1});
    EXPECT_EQ(best.items()[0].sequence, GateSequence{{2}});
    EXPECT_EQ(best.items()[1].sequence, GateSequence{{0}});
}

TEST(SseConfig, Validation) {
    SseConfig c;
    EXPECT_NO_THROW(c.validate());
    c.bar_ratio = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.k = 0;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.eps0 = -1.0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Sse, BaseApproximationMatchesOracle) {
    const auto& f = small();
    const SseEngine engine(f.index, f.index);
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Unitary t = random_unitary(s);
        for (double eps : {0.05, 0.4, 1.2}) {
            double used = 0.0;
            const auto want = ball_oracle(*f.db, t, eps, &used);
            const auto got = engine.base_approximation(t, eps);
            EXPECT_EQ(got.radius, used);
            ASSERT_EQ(got.candidates.size(), want.size());
            auto sorted = want;
            std::sort(sorted.begin(), sorted.end(), better);
            for (std::size_t i = 0; i < want.size(); ++i) expect_same(got.candidates[i], sorted[i], f.db->library());
        }
    }
}

TEST(Sse, SpaceExpansionMatchesOracle) {
    const auto& f = small();
    const SseEngine engine(f.index, f.index);
    for (std::uint64_t s = 0; s < 8; ++s) {
        const Unitary t = random_unitary(100 + s);
        for (double eps0 : {0.3, 0.9}) {
            for (std::size_t k : {1u, 5u}) {
                const auto got = engine.space_expansion(t, eps0, 0.5 * eps0, k);
                const auto want = sse_oracle(*f.db, t, eps0, 0.5, k);
                ASSERT_EQ(got.size(), want.size());
                for (std::size_t i = 0; i < got.size(); ++i) expect_same(got[i], want[i], f.db->library());
            }
        }
    }
}

TEST(Sse, FallsBackToNearestWhenBallIsEmpty) {
    const auto& f = small();
    const SseEngine engine(f.index, f.index);
    const Unitary t = random_unitary(7);
    const auto base = engine.base_approximation(t, 1e-6);
    ASSERT_EQ(base.candidates.size(), 1u);
    EXPECT_EQ(base.radius, f.index->nearest(t).distance);
    const auto got = engine.space_expansion(t, 1e-6, 0.5e-6, 3);
    const auto want = sse_oracle(*f.db, t, 1e-6, 0.5, 3);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) expect_same(got[i], want[i], f.db->library());
}

TEST(Sse, RecursiveMatchesOracle) {
    const auto& f = small();
    const SseEngine engine(f.index, f.index);
    for (std::uint64_t s = 0; s < 4; ++s) {
        const Unitary t = random_unitary(200 + s);
        const Scored got = engine.recursive_space_expansion(t, 0.5, 0.5, 0.25, 3);
        expect_same(got, rsse_oracle(*f.db, t, 0.5, 0.5, 0.5, 3), f.db->library());
    }
}

TEST(Sse, BestFoundPolicy) {
    const auto& f = small();
    SseConfig cfg;
    cfg.eps0_policy = Eps0Policy::best_found;
    const SseEngine engine(f.index, f.index, cfg);
    const Unitary t = random_unitary(9);
    EXPECT_EQ(engine.resolve_eps0(t), f.index->nearest(t).distance);
}

TEST(Sse, DominatesBaseSearch) {
    const auto& f = medium();
    const SseEngine engine(f.index, f.index);
    const Library& lib = f.db->library();
    for (std::uint64_t s = 0; s < 6; ++s) {
        const Unitary t = random_unitary(300 + s);
        const double base = f.index->nearest(t).distance;
        const auto sse = engine.space_expansion(t, 8);
        ASSERT_FALSE(sse.empty());
        EXPECT_LE(sse.front().distance, base);
        for (std::size_t i = 0; i < sse.size(); ++i) {
            EXPECT_LE(max_entry_error(lib.sequence_matrix(sse[i].sequence), sse[i].matrix), 1e-12);
            EXPECT_EQ(sse[i].distance, trace_distance(t, sse[i].matrix));
            if (i > 0) {
                EXPECT_FALSE(better(sse[i], sse[i - 1]));
            }
            for (std::size_t j = 0; j < i; ++j) EXPECT_GT(max_entry_error(sse[i].matrix, sse[j].matrix), 1e-9);
        }
        if (s < 2) {
            const Scored r = engine.recursive_space_expansion(t);
            EXPECT_LE(r.distance, base);
            EXPECT_LE(max_entry_error(lib.sequence_matrix(r.sequence), r.matrix), 1e-12);
        }
    }
}

TEST(Sse, ExactTargetIsFoundExactly) {
    const auto& f = medium();
    const SseEngine engine(f.index, f.index);
    const Library& lib = f.db->library();
    const Unitary h = lib.sequence_matrix(lib.parse("H"));
    const auto sse = engine.space_expansion(h, 1);
    EXPECT_EQ(lib.to_text(sse.front().sequence), "H");
    EXPECT_EQ(sse.front().distance, 0.0);
}

TEST(Sse, RejectsMismatchedSets) {
    const auto& f = small();
    auto other = std::make_shared<const SequenceDatabase>(SequenceDatabase::enumerate(Library::clifford_t_with_s(), 2));
    auto index = std::make_shared<const DatabaseIndex>(other);
    EXPECT_THROW(SseEngine(f.index, index), LibraryMismatch);
    EXPECT_THROW(SseEngine(f.index, nullptr), EmptyDatabase);
}

TEST(Sse, JoinedPairsObeySubadditivity) {
    const auto& f = small();
    const Library& lib = f.db->library();
    std::size_t pairs = 0;
    for (std::uint64_t s = 0; s < 25; ++s) {
        const double eps0 = 1.2, bar = 0.6;
        for (const auto& r : ball_oracle(*f.db, random_unitary(400 + s), eps0)) {
            const auto [pre, suf] = split(r.sequence);
            const Unitary mp = lib.sequence_matrix(pre), ms = lib.sequence_matrix(suf);
            for (const auto& r1 : ball_oracle(*f.db, mp, bar))
                for (const auto& r2 : ball_oracle(*f.db, ms, bar)) {
                    EXPECT_LE(trace_distance(mp * ms, r1.matrix * r2.matrix), 2 * bar + 1e-10);
                    ++pairs;
                }
        }
    }
    EXPECT_GT(pairs, 100u);
}
