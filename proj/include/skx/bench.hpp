#pragma once

// Benchmark harness: seeded corpus, per-level records, CSV and sidecar
// output, band analysis and the flat key=value configuration format.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "skx/error.hpp"
#include "skx/gnat.hpp"
#include "skx/sequence_db.hpp"
#include "skx/sk_compiler.hpp"
#include "skx/sse.hpp"
#include "skx/su2.hpp"

namespace skx::bench {

inline constexpr const char* csv_header = "target_id,seed,variant,depth,accuracy,length,t_count,time_s,l0,l1,library";
inline constexpr const char* gnat_csv_header = "db_size,gnat_mean_s,linear_mean_s";

struct BenchRecord {
    std::size_t target_id = 0;
    std::uint64_t seed = 0;
    Variant variant = Variant::original;
    int depth = 0;
    double accuracy = 0.0;
    std::size_t length = 0;
    int t_count = 0;
    double time_s = 0.0;
    std::uint32_t l0 = 0;
    std::uint32_t l1 = 0;
    std::string library;
    std::string sequence;  // text form, written to the sidecar file
};

struct RunConfig {
    std::string library = "HT";
    std::uint32_t l0 = 12;
    std::uint32_t l1 = 12;
    std::size_t corpus_size = 25;
    std::uint64_t corpus_seed = 1;
    std::vector<double> eps{1e-1, 1e-2, 1e-3};
    std::vector<Variant> variants{Variant::original, Variant::sse, Variant::rsse};
    int max_depth = 3;
    bool distinct = true;
    MetricMode metric = MetricMode::exact;
    GnatOptions gnat{};
    SseConfig sse{};
    InnerBase inner_base = InnerBase::variant;
    std::string db0;
    std::string db1;
    std::string csv = "bench.csv";
    std::string sequences;  // sidecar; empty = csv path + ".seq"

    void validate() const {
        if (l0 < 1 || l1 < 1) throw Error("database lengths must be at least 1");
        if (corpus_size < 1) throw Error("corpus size must be at least 1");
        if (max_depth < 0) throw Error("max depth must be nonnegative");
        if (variants.empty()) throw Error("no variants selected");
        sse.validate();
    }

    std::string sidecar_path() const { return sequences.empty() ? csv + ".seq" : sequences; }
};

/// Seed of corpus target i.
inline std::uint64_t corpus_seed(std::uint64_t base, std::size_t i) { return base + i; }

inline std::vector<Unitary> corpus(std::uint64_t base, std::size_t size) {
    std::vector<Unitary> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) out.push_back(random_unitary(corpus_seed(base, i)));
    return out;
}

/// Worker count: SKX_THREADS when set, else the hardware concurrency.
inline unsigned worker_threads() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("SKX_THREADS");
    if (!env || !*env) return hw;
    unsigned n = 0;
    const auto [p, ec] = std::from_chars(env, env + std::strlen(env), n);
    if (ec != std::errc{} || *p != '\0' || n == 0) throw Error("SKX_THREADS must be a positive integer");
    return n;
}

/// Runs body(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), std::max<std::size_t>(n, 1)));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

/// One record per evaluated depth, carrying the best result so far.
inline std::vector<BenchRecord> to_records(const ApproximationResult& result, const Library& lib,
                                           std::size_t target_id, std::uint64_t seed, const RunConfig& cfg) {
    std::vector<BenchRecord> out;
    for (const LevelTrace& level : result.levels) {
        BenchRecord r;
        r.target_id = target_id;
        r.seed = seed;
        r.variant = result.variant;
        r.depth = level.depth;
        r.accuracy = level.accuracy;
        r.length = level.length;
        r.t_count = level.t_count;
        r.time_s = level.elapsed_s;
        r.l0 = cfg.l0;
        r.l1 = cfg.l1;
        r.library = lib.id();
        r.sequence = lib.to_text(level.sequence);
        out.push_back(std::move(r));
    }
    return out;
}

/// Compiles one target down to cfg.max_depth without early stopping.
inline ApproximationResult compile_all_depths(const SkCompiler& compiler, const Unitary& target, Variant variant,
                                              const RunConfig& cfg) {
    CompilerConfig cc = compiler.config();
    cc.variant = variant;
    cc.max_depth = cfg.max_depth;
    cc.target_eps = 0.0;
    cc.inner_base = cfg.inner_base;
    return compiler.compile(target, cc);
}

inline std::vector<BenchRecord> records_for(const SkCompiler& compiler, const Unitary& target,
                                            std::size_t target_id, std::uint64_t seed, Variant variant,
                                            const RunConfig& cfg) {
    return to_records(compile_all_depths(compiler, target, variant, cfg), compiler.library(), target_id, seed, cfg);
}

/// Full comparison: every corpus target under every configured variant.
/// Records come back in (target, variant order, depth) order whatever the
/// completion order of the workers.
inline std::vector<BenchRecord> run(const SkCompiler& compiler, const RunConfig& cfg,
                                    unsigned threads = worker_threads()) {
    cfg.validate();
    const auto targets = corpus(cfg.corpus_seed, cfg.corpus_size);
    const std::size_t nv = cfg.variants.size();
    std::vector<std::vector<BenchRecord>> slots(targets.size() * nv);
    parallel_for(slots.size(), threads, [&](std::size_t job) {
        const std::size_t t = job / nv;
        slots[job] = records_for(compiler, targets[t], t, corpus_seed(cfg.corpus_seed, t), cfg.variants[job % nv], cfg);
    });
    std::vector<BenchRecord> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

inline std::string csv_row(const BenchRecord& r) {
    std::ostringstream o;
    o << r.target_id << ',' << r.seed << ',' << to_string(r.variant) << ',' << r.depth << ','
      << format_double(r.accuracy) << ',' << r.length << ',' << r.t_count << ',' << format_double(r.time_s) << ','
      << r.l0 << ',' << r.l1 << ',' << r.library;
    return o.str();
}

inline void write_csv(const std::string& path, const std::vector<BenchRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << csv_header << '\n';
    for (const auto& r : records) out << csv_row(r) << '\n';
    if (!out) throw Error("write to '" + path + "' failed");
}

/// Sidecar: "<row id>\t<sequence>" per data row, row ids counted from 1.
inline void write_sidecar(const std::string& path, const std::vector<BenchRecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < records.size(); ++i) out << i + 1 << '\t' << records[i].sequence << '\n';
    if (!out) throw Error("write to '" + path + "' failed");
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
T parse_number(const std::string& s) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ParseError("bad number '" + s + "'");
    return v;
}

/// Reads a CSV written by write_csv, with sequences from its sidecar when
/// `sidecar` is non-empty.
inline std::vector<BenchRecord> read_csv(const std::string& path, const std::string& sidecar = {}) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != csv_header) throw ParseError("unexpected CSV header in '" + path + "'");
    std::vector<BenchRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 11) throw ParseError("expected 11 fields: " + line);
        BenchRecord r;
        r.target_id = parse_number<std::size_t>(f[0]);
        r.seed = parse_number<std::uint64_t>(f[1]);
        r.variant = parse_variant(f[2]);
        r.depth = parse_number<int>(f[3]);
        r.accuracy = parse_number<double>(f[4]);
        r.length = parse_number<std::size_t>(f[5]);
        r.t_count = parse_number<int>(f[6]);
        r.time_s = parse_number<double>(f[7]);
        r.l0 = parse_number<std::uint32_t>(f[8]);
        r.l1 = parse_number<std::uint32_t>(f[9]);
        r.library = f[10];
        out.push_back(std::move(r));
    }
    if (!sidecar.empty()) {
        std::ifstream s(sidecar);
        if (!s) throw Error("cannot open '" + sidecar + "'");
        while (std::getline(s, line)) {
            const auto tab = line.find('\t');
            if (tab == std::string::npos) throw ParseError("bad sidecar line: " + line);
            const auto id = parse_number<std::size_t>(line.substr(0, tab));
            if (id < 1 || id > out.size()) throw ParseError("sidecar row id out of range");
            out[id - 1].sequence = line.substr(tab + 1);
        }
    }
    return out;
}

/// Largest disagreement between the stored accuracy / t_count / length
/// and values recomputed from the sequence text. Returns (accuracy error,
/// number of count mismatches).
inline std::pair<double, std::size_t> revalidate(const std::vector<BenchRecord>& records, const Library& lib,
                                                 MetricMode metric = MetricMode::exact) {
    double worst = 0.0;
    std::size_t mismatches = 0;
    for (const auto& r : records) {
        const GateSequence seq = lib.parse(r.sequence);
        const double acc = distance(random_unitary(r.seed), lib.sequence_matrix(seq), metric);
        worst = std::max(worst, std::abs(acc - r.accuracy));
        if (lib.t_count(seq) != r.t_count || seq.size() != r.length) ++mismatches;
    }
    return {worst, mismatches};
}

/// Accuracy band: the nearest power of ten, as k for 10^-k.
inline int band_of(double accuracy) {
    if (!(accuracy > 0.0)) return std::numeric_limits<int>::max();
    return static_cast<int>(std::lround(-std::log10(accuracy)));
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct BandRow {
    int band = 0;
    std::map<Variant, double> median_depth;    // infinity when most targets never reach the band
    std::map<Variant, double> median_t_count;  // at the depth where each target first reaches it
    std::map<Variant, std::size_t> reached;    // targets that reach the band at all
};

struct BandAnalysis {
    std::vector<BandRow> rows;               // ascending band
    std::optional<int> tightest_common;      // largest band every variant reaches in the median
    const BandRow* row(int band) const {
        for (const auto& r : rows)
            if (r.band == band) return &r;
        return nullptr;
    }
};

/// Per band b and variant: for each target the first depth whose
/// best-so-far accuracy lies in band >= b (infinity if none), then medians
/// over targets of that depth and of the T-count there.
inline BandAnalysis analyse_bands(const std::vector<BenchRecord>& records) {
    std::map<std::pair<Variant, std::size_t>, std::vector<const BenchRecord*>> series;
    std::set<Variant> variants;
    std::set<std::size_t> targets;
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    for (const auto& r : records) {
        series[{r.variant, r.target_id}].push_back(&r);
        variants.insert(r.variant);
        targets.insert(r.target_id);
        const int b = band_of(r.accuracy);
        if (b == std::numeric_limits<int>::max()) continue;
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    for (auto& [key, s] : series)
        std::sort(s.begin(), s.end(), [](auto* x, auto* y) { return x->depth < y->depth; });

    BandAnalysis out;
    if (records.empty() || lo > hi) return out;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (int b = lo; b <= hi; ++b) {
        BandRow row;
        row.band = b;
        bool common = true;
        for (Variant v : variants) {
            std::vector<double> depths, counts;
            std::size_t reached = 0;
            for (std::size_t t : targets) {
                double depth = inf, count = inf;
                for (const auto* r : series[{v, t}])
                    if (band_of(r->accuracy) >= b) {
                        depth = r->depth;
                        count = r->t_count;
                        ++reached;
                        break;
                    }
                depths.push_back(depth);
                counts.push_back(count);
            }
            row.median_depth[v] = median(depths);
            row.median_t_count[v] = median(counts);
            row.reached[v] = reached;
            common = common && std::isfinite(row.median_depth[v]);
        }
        if (common) out.tightest_common = b;
        out.rows.push_back(std::move(row));
    }
    return out;
}

/// GNAT range-query timing against a linear scan over the same vectors.
struct GnatTiming {
    std::size_t db_size = 0;
    double gnat_mean_s = 0.0;
    double linear_mean_s = 0.0;
    std::size_t mismatches = 0;  // queries whose result sets differ
    std::size_t total_hits = 0;
};

inline GnatTiming time_range_queries(const AxisGnat& tree, const std::vector<AxisVector>& points,
                                     const std::vector<AxisVector>& queries, double radius) {
    using clock = std::chrono::steady_clock;
    GnatTiming t;
    t.db_size = points.size();
    double gnat_s = 0.0, linear_s = 0.0;
    for (const AxisVector& q : queries) {
        auto t0 = clock::now();
        const auto fast = tree.range_query(q, radius);
        auto t1 = clock::now();
        std::vector<std::size_t> slow;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (euclidean_distance(points[i], q) <= radius) slow.push_back(i);
        auto t2 = clock::now();
        gnat_s += std::chrono::duration<double>(t1 - t0).count();
        linear_s += std::chrono::duration<double>(t2 - t1).count();
        if (fast != slow) ++t.mismatches;
        t.total_hits += slow.size();
    }
    const double n = static_cast<double>(std::max<std::size_t>(queries.size(), 1));
    t.gnat_mean_s = gnat_s / n;
    t.linear_mean_s = linear_s / n;
    return t;
}

/// Query points for timing: axis vectors of seeded random unitaries.
inline std::vector<AxisVector> query_points(std::uint64_t seed, std::size_t n) {
    std::vector<AxisVector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(to_axis_vector(random_unitary(seed + i)));
    return out;
}

// Configuration files: one "key = value" per line, '#' starts a comment.
// Keys are long option names with or without the leading "--".

inline std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in) {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(number) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.starts_with("--")) key.erase(0, 2);
        if (key.empty()) throw ParseError("config line " + std::to_string(number) + ": empty key");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

inline std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    return parse_config(in);
}

/// Key of a command-line token, with "no-" prefixes folded into the
/// positive flag: "--no-distinct" and "--distinct=0" both give "distinct".
inline std::optional<std::string> option_key(const std::string& token) {
    if (!token.starts_with("--") || token.size() == 2) return std::nullopt;
    std::string key = token.substr(2, token.find('=') - 2);
    if (key.starts_with("no-")) key.erase(0, 3);
    return key;
}

/// Expands "--config <file>" (or "--config=<file>") into "--key=value"
/// arguments placed right after the subcommand. Keys already present on
/// the command line are skipped, so flags override file values.
inline std::vector<std::string> apply_config(const std::vector<std::string>& args) {
    std::optional<std::string> path;
    std::set<std::string> given;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        else if (args[i].starts_with("--config=")) path = args[i].substr(9);
        if (auto k = option_key(args[i])) given.insert(*k);
    }
    if (!path || args.size() < 2) return args;
    std::vector<std::string> out(args.begin(), args.begin() + 2);
    for (const auto& [key, value] : parse_config_file(*path)) {
        std::string bare = key.starts_with("no-") ? key.substr(3) : key;
        if (bare == "config" || given.count(bare)) continue;
        out.push_back("--" + key + "=" + value);
    }
    out.insert(out.end(), args.begin() + 2, args.end());
    return out;
}

}  // namespace skx::bench
