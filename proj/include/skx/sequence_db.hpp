#pragma once

// Precomputed sets of canonical gate sequences and the SKDB file format.
//
// SKDB layout (little-endian):
//   "SKDB" | u32 version | u32 id length, id bytes | u32 l_max | u64 count
//   per entry: u8 length, length gate indices, 8 f64 matrix (row-major,
//   re/im interleaved), 3 f64 axis vector

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "skx/error.hpp"
#include "skx/gate_library.hpp"
#include "skx/su2.hpp"

namespace skx {

struct DatabaseEntry {
    GateSequence sequence;
    Unitary matrix;
    AxisVector vector;
};

class SequenceDatabase {
public:
    static constexpr std::uint32_t format_version = 1;
    static constexpr std::uint64_t default_memory_budget = 4ull << 30;

    SequenceDatabase(Library library, std::uint32_t max_length, std::vector<DatabaseEntry> entries)
        : library_(std::move(library)), max_length_(max_length), entries_(std::move(entries)) {}

    /// Number of canonical sequences of each length 0..l_max.
    static std::vector<std::uint64_t> canonical_counts(const Library& lib, std::uint32_t l_max) {
        // state: (last gate, run length) -> number of sequences ending that way
        const std::size_t n = lib.size();
        constexpr int run_cap = 256;
        std::vector<std::vector<std::uint64_t>> state(n, std::vector<std::uint64_t>(run_cap + 1));
        std::vector<std::uint64_t> counts{1};
        for (std::uint32_t len = 1; len <= l_max; ++len) {
            std::vector<std::vector<std::uint64_t>> next(n, std::vector<std::uint64_t>(run_cap + 1));
            for (std::size_t g = 0; g < n; ++g) {
                const auto id = static_cast<GateId>(g);
                if (len == 1) {
                    next[g][1] = 1;
                    continue;
                }
                for (std::size_t last = 0; last < n; ++last)
                    for (int run = 1; run <= run_cap; ++run) {
                        const auto c = state[last][run];
                        if (c == 0 || !lib.may_extend(static_cast<int>(last), run, id)) continue;
                        const int new_run = last == g ? std::min(run + 1, run_cap) : 1;
                        next[g][new_run] += c;
                    }
            }
            state = std::move(next);
            std::uint64_t total = 0;
            for (const auto& row : state)
                for (auto c : row) total += c;
            counts.push_back(total);
        }
        return counts;
    }

    static std::uint64_t estimated_bytes(std::uint64_t count, std::uint32_t l_max) {
        return count * (sizeof(DatabaseEntry) + 32 + l_max);
    }

    /// All canonical sequences of length 0..l_max, shortlex ordered.
    static SequenceDatabase enumerate(const Library& lib, std::uint32_t l_max,
                                      std::uint64_t memory_budget = default_memory_budget) {
        if (l_max > 255) throw CapacityExceeded("l_max above 255 is not representable in SKDB");
        std::uint64_t total = 0;
        for (auto c : canonical_counts(lib, l_max)) total += c;
        if (estimated_bytes(total, l_max) > memory_budget)
            throw CapacityExceeded(std::to_string(total) + " entries exceed the memory budget of " +
                                   std::to_string(memory_budget) + " bytes");

        std::vector<DatabaseEntry> entries;
        entries.reserve(total);
        entries.push_back({GateSequence{}, Unitary::identity(), AxisVector{}});
        std::size_t level_begin = 0;
        for (std::uint32_t len = 1; len <= l_max; ++len) {
            const std::size_t level_end = entries.size();
            for (std::size_t i = level_begin; i < level_end; ++i) {
                const int last = entries[i].sequence.empty() ? -1 : entries[i].sequence.gates.back();
                const int run = trailing_run(entries[i].sequence);
                for (std::size_t g = 0; g < lib.size(); ++g) {
                    const auto id = static_cast<GateId>(g);
                    if (!lib.may_extend(last, run, id)) continue;
                    DatabaseEntry e;
                    e.sequence.gates.reserve(len);
                    e.sequence.gates = entries[i].sequence.gates;
                    e.sequence.gates.push_back(id);
                    e.matrix = entries[i].matrix * lib[id].matrix;
                    e.vector = to_axis_vector(e.matrix);
                    entries.push_back(std::move(e));
                }
            }
            level_begin = level_end;
        }
        return SequenceDatabase(lib, l_max, std::move(entries));
    }

    /// Copy keeping only the first entry for each matrix. Entries are
    /// matched on their coefficients rounded to 1e-9, so a pair straddling
    /// a rounding boundary may both survive; that only costs redundancy.
    SequenceDatabase distinct() const {
        using Key = std::array<long long, 8>;
        auto key = [](const Unitary& m) {
            Key k{};
            std::size_t i = 0;
            for (const Complex& z : {m.a, m.b, m.c, m.d}) {
                k[i++] = std::llround(z.real() * 1e9);
                k[i++] = std::llround(z.imag() * 1e9);
            }
            return k;
        };
        std::set<Key> seen;
        std::vector<DatabaseEntry> kept;
        for (const auto& e : entries_)
            if (seen.insert(key(e.matrix)).second) kept.push_back(e);
        return SequenceDatabase(library_, max_length_, std::move(kept));
    }

    const Library& library() const { return library_; }
    std::uint32_t max_length() const { return max_length_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const DatabaseEntry& operator[](std::size_t i) const { return entries_[i]; }
    const std::vector<DatabaseEntry>& entries() const { return entries_; }

    std::vector<AxisVector> vectors() const {
        std::vector<AxisVector> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back(e.vector);
        return out;
    }

    /// Largest deviation of any cached matrix (entrywise) or vector
    /// (Euclidean) from direct recomputation.
    double max_cache_error() const {
        double worst = 0.0;
        for (const auto& e : entries_) {
            const Unitary m = library_.sequence_matrix(e.sequence);
            worst = std::max(worst, max_entry_error(m, e.matrix));
            worst = std::max(worst, euclidean_distance(to_axis_vector(m), e.vector));
        }
        return worst;
    }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        out.write("SKDB", 4);
        put_u32(out, format_version);
        put_u32(out, static_cast<std::uint32_t>(library_.id().size()));
        out.write(library_.id().data(), static_cast<std::streamsize>(library_.id().size()));
        put_u32(out, max_length_);
        put_u64(out, entries_.size());
        for (const auto& e : entries_) {
            if (e.sequence.negated || e.sequence.size() > 255)
                throw FormatError("entry is not storable in SKDB");
            out.put(static_cast<char>(e.sequence.size()));
            out.write(reinterpret_cast<const char*>(e.sequence.gates.data()),
                      static_cast<std::streamsize>(e.sequence.size()));
            for (const Complex& z : {e.matrix.a, e.matrix.b, e.matrix.c, e.matrix.d}) {
                put_f64(out, z.real());
                put_f64(out, z.imag());
            }
            put_f64(out, e.vector.x);
            put_f64(out, e.vector.y);
            put_f64(out, e.vector.z);
        }
        if (!out) throw Error("write to '" + path + "' failed");
    }

    /// Loads an SKDB file. With `expected` set, a database built for a
    /// different library raises LibraryMismatch.
    static SequenceDatabase load(const std::string& path, const Library* expected = nullptr) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open '" + path + "'");
        Reader r{in};
        char magic[4];
        r.bytes(magic, 4);
        if (std::memcmp(magic, "SKDB", 4) != 0) throw FormatError("bad magic in '" + path + "'");
        const auto version = r.u32();
        if (version != format_version)
            throw FormatError("unsupported SKDB version " + std::to_string(version));
        const auto id_len = r.u32();
        if (id_len > 64) throw FormatError("library id too long");
        std::string id(id_len, '\0');
        r.bytes(id.data(), id_len);
        if (expected && expected->id() != id)
            throw LibraryMismatch("database built for '" + id + "', expected '" + expected->id() + "'");
        Library lib = Library::by_id(id);
        const auto l_max = r.u32();
        const auto count = r.u64();
        if (count > (1ull << 32)) throw FormatError("implausible entry count");

        std::vector<DatabaseEntry> entries;
        entries.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            DatabaseEntry e;
            const auto len = static_cast<std::uint8_t>(r.byte());
            if (len > l_max) throw FormatError("entry longer than l_max");
            e.sequence.gates.resize(len);
            r.bytes(reinterpret_cast<char*>(e.sequence.gates.data()), len);
            for (GateId g : e.sequence.gates)
                if (g >= lib.size()) throw FormatError("gate index out of range");
            for (Complex* z : {&e.matrix.a, &e.matrix.b, &e.matrix.c, &e.matrix.d}) {
                const double re = r.f64();
                const double im = r.f64();
                *z = {re, im};
            }
            e.vector.x = r.f64();
            e.vector.y = r.f64();
            e.vector.z = r.f64();
            entries.push_back(std::move(e));
        }
        if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after entries");
        return SequenceDatabase(std::move(lib), l_max, std::move(entries));
    }

private:
    static int trailing_run(const GateSequence& s) {
        int run = 0;
        for (auto it = s.gates.rbegin(); it != s.gates.rend() && *it == s.gates.back(); ++it) ++run;
        return run;
    }

    template <typename T>
    static T to_little(T v) {
        if constexpr (std::endian::native == std::endian::big) {
            auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
            std::reverse(bytes.begin(), bytes.end());
            return std::bit_cast<T>(bytes);
        }
        return v;
    }

    static void put_u32(std::ostream& out, std::uint32_t v) {
        v = to_little(v);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    static void put_u64(std::ostream& out, std::uint64_t v) {
        v = to_little(v);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    static void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

    struct Reader {
        std::istream& in;

        void bytes(char* dst, std::size_t n) {
            in.read(dst, static_cast<std::streamsize>(n));
            if (static_cast<std::size_t>(in.gcount()) != n) throw FormatError("truncated SKDB file");
        }
        char byte() {
            char c;
            bytes(&c, 1);
            return c;
        }
        std::uint32_t u32() {
            std::uint32_t v;
            bytes(reinterpret_cast<char*>(&v), sizeof v);
            return to_little(v);
        }
        std::uint64_t u64() {
            std::uint64_t v;
            bytes(reinterpret_cast<char*>(&v), sizeof v);
            return to_little(v);
        }
        double f64() { return std::bit_cast<double>(u64()); }
    };

    Library library_;
    std::uint32_t max_length_;
    std::vector<DatabaseEntry> entries_;
};

}  // namespace skx
