// skx: build sequence databases, compile single-qubit gates and run the
// three-way benchmark.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skx/bench.hpp"
#include "skx/gnat.hpp"
#include "skx/search.hpp"
#include "skx/sequence_db.hpp"
#include "skx/sk_compiler.hpp"
#include "skx/sse.hpp"
#include "skx/su2.hpp"

namespace {

using namespace skx;
using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

const std::map<std::string, MetricMode> metric_names{{"exact", MetricMode::exact},
                                                     {"phase-insensitive", MetricMode::phase_insensitive}};
const std::map<std::string, RadiusMode> radius_names{
    {"certified", RadiusMode::certified}, {"scaled", RadiusMode::scaled}, {"both", RadiusMode::both}};
const std::map<std::string, Eps0Policy> eps0_names{{"fixed", Eps0Policy::fixed},
                                                   {"best-found", Eps0Policy::best_found}};
const std::map<std::string, InnerBase> inner_names{{"variant", InnerBase::variant},
                                                   {"original", InnerBase::original}};

/// Options shared by every command that searches databases.
struct SearchSetup {
    std::string library = "HT";
    std::uint32_t l0 = 12;
    std::uint32_t l1 = 0;  // 0 = same as l0
    std::string db0, db1;
    bool distinct = true;
    MetricMode metric = MetricMode::exact;
    GnatOptions gnat{};
    SseConfig sse{};
    InnerBase inner_base = InnerBase::variant;

    void add_to(CLI::App& app) {
        app.add_option("--library", library, "Gate library id (HT or HST)")->capture_default_str();
        app.add_option("--l0", l0, "Length bound of S0 when built in memory")->capture_default_str();
        app.add_option("--l1", l1, "Length bound of S1 (default: l0)");
        app.add_option("--db0", db0, "SKDB file for S0 (built in memory if absent)");
        app.add_option("--db1", db1, "SKDB file for S1 (default: same as S0)");
        app.add_flag("--distinct,!--no-distinct", distinct, "Search only one word per distinct matrix")
            ->capture_default_str();
        app.add_option("--metric", metric, "exact or phase-insensitive")
            ->transform(CLI::CheckedTransformer(metric_names, CLI::ignore_case));
        app.add_option("--fanout", gnat.fanout, "GNAT fanout")->capture_default_str();
        app.add_option("--leaf", gnat.leaf_capacity, "GNAT leaf capacity")->capture_default_str();
        app.add_option("--gnat-seed", gnat.seed, "GNAT build seed")->capture_default_str();
        app.add_option("--eps0", sse.eps0, "Base-stage radius eps0")->capture_default_str();
        app.add_option("--eps0-policy", sse.eps0_policy, "fixed or best-found")
            ->transform(CLI::CheckedTransformer(eps0_names, CLI::ignore_case));
        app.add_option("--bar-ratio", sse.bar_ratio, "eps0_bar / eps0")->capture_default_str();
        app.add_option("--k", sse.k, "Sequences kept per inner SSE call")->capture_default_str();
        app.add_option("--eps1", sse.eps1, "Inner eps0 for recursive SSE (0 = eps0)")->capture_default_str();
        app.add_option("--candidate-cap", sse.candidate_cap, "Cap on |R|")->capture_default_str();
        app.add_option("--neighbor-cap", sse.neighbor_cap, "Cap on |R1|, |R2|")->capture_default_str();
        app.add_option("--radius-mode", sse.radius.mode, "certified, scaled or both")
            ->transform(CLI::CheckedTransformer(radius_names, CLI::ignore_case));
        app.add_option("--radius-multiplier", sse.radius.multiplier, "Scale on the vector radius")
            ->capture_default_str();
        app.add_option("--inner-base", inner_base, "Level-0 search for V and W: variant or original")
            ->transform(CLI::CheckedTransformer(inner_names, CLI::ignore_case));
    }

    std::uint32_t s1_length() const { return l1 == 0 ? l0 : l1; }

    std::shared_ptr<const SequenceDatabase> database(const std::string& path, std::uint32_t length) const {
        const Library lib = Library::by_id(library);
        auto t0 = clock_type::now();
        SequenceDatabase db = path.empty() ? SequenceDatabase::enumerate(lib, length)
                                           : SequenceDatabase::load(path, &lib);
        if (distinct) db = db.distinct();
        std::fprintf(stderr, "database %s: %zu entries, %.2f s\n", path.empty() ? "(in memory)" : path.c_str(),
                     db.size(), seconds_since(t0));
        return std::make_shared<const SequenceDatabase>(std::move(db));
    }

    std::shared_ptr<const SseEngine> engine() const {
        SearchOptions opts;
        opts.metric = metric;
        opts.gnat = gnat;
        auto s0 = std::make_shared<const DatabaseIndex>(database(db0, l0), opts);
        std::shared_ptr<const DatabaseIndex> s1 = s0;
        const bool same = db1.empty() ? s1_length() == l0 : db1 == db0;
        if (!same) s1 = std::make_shared<const DatabaseIndex>(database(db1, s1_length()), opts);
        return std::make_shared<const SseEngine>(s0, s1, sse);
    }
};

std::vector<double> parse_reals(const std::string& text, std::size_t expected, const char* what) {
    std::vector<double> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(field, &used));
            if (used != field.size()) throw ParseError("");
        } catch (const std::exception&) {
            throw ParseError(std::string("malformed ") + what + " '" + text + "'");
        }
    }
    if (out.size() != expected)
        throw ParseError(std::string(what) + " needs " + std::to_string(expected) + " comma-separated reals");
    return out;
}

Unitary parse_target(const Library& lib, const std::string& gate, const std::string& axis, const std::string& matrix) {
    if (!gate.empty()) return lib.sequence_matrix(lib.parse(gate));
    if (!axis.empty()) {
        const auto v = parse_reals(axis, 3, "axis vector");
        return from_axis_vector({v[0], v[1], v[2]});
    }
    const auto m = parse_reals(matrix, 8, "matrix");
    const Unitary u{{m[0], m[1]}, {m[2], m[3]}, {m[4], m[5]}, {m[6], m[7]}};
    if (!is_unitary(u, 1e-9)) throw NotUnitary("matrix is not unitary");
    return project_to_su2(u, 1e-9);
}

int cmd_build_db(const std::string& library, std::uint32_t l_max, const std::string& out, std::uint64_t budget) {
    const Library lib = Library::by_id(library);
    const auto t0 = clock_type::now();
    const auto db = SequenceDatabase::enumerate(lib, l_max, budget);
    const double build_s = seconds_since(t0);
    db.save(out);
    std::printf("entries %zu\nbuild_time_s %.3f\nfile %s\n", db.size(), build_s, out.c_str());
    return 0;
}

int cmd_index_check(const std::string& path, const std::string& library, std::uint32_t l_max, GnatOptions gnat,
                    std::size_t queries, double radius, std::uint64_t seed) {
    const Library lib = Library::by_id(library);
    const SequenceDatabase db = path.empty() ? SequenceDatabase::enumerate(lib, l_max) : SequenceDatabase::load(path, &lib);
    const auto points = db.vectors();
    auto t0 = clock_type::now();
    const AxisGnat tree(points, gnat);
    std::printf("entries %zu\nindex_build_s %.3f\n", points.size(), seconds_since(t0));

    const GnatAudit a = tree.audit();
    std::printf("audit %s internal_nodes=%zu leaves=%zu max_depth=%zu misassigned=%zu bound_violations=%zu "
                "missing_or_duplicate=%zu\n",
                a.ok ? "ok" : "FAILED", a.internal_nodes, a.leaves, a.max_depth, a.misassigned,
                a.bound_violations, a.missing_or_duplicate);

    std::size_t range_bad = 0, nearest_bad = 0;
    const auto qs = bench::query_points(seed, queries);
    for (const AxisVector& q : qs) {
        std::vector<std::size_t> slow;
        std::size_t arg = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double d = euclidean_distance(points[i], q);
            if (d <= radius) slow.push_back(i);
            if (d < best) best = d, arg = i;
        }
        if (tree.range_query(q, radius) != slow) ++range_bad;
        const auto [idx, dist] = tree.nearest(q);
        if (idx != arg || dist != best) ++nearest_bad;
    }
    std::printf("range_queries %zu mismatches %zu\nnearest_queries %zu mismatches %zu\n", qs.size(), range_bad,
                qs.size(), nearest_bad);

    // Radius-map calibration: for each query target and its nearby
    // entries, the ratio of vector distance to trace distance, and how
    // often each radius map would have missed the entry.
    std::vector<double> ratios;
    std::size_t scaled_miss = 0, certified_miss = 0, pairs = 0;
    for (std::size_t i = 0; i < qs.size(); ++i) {
        const Unitary g = random_unitary(seed + i);
        const AxisVector v = to_axis_vector(g);
        for (std::size_t j = 0; j < db.size(); ++j) {
            const double t = trace_distance(g, db[j].matrix);
            if (t > 0.5 || t == 0.0) continue;
            const double e = euclidean_distance(v, db[j].vector);
            ratios.push_back(e / t);
            ++pairs;
            if (e > RadiusMap::scaled(t)) ++scaled_miss;
            if (e > RadiusMap::certified(t, v)) ++certified_miss;
        }
    }
    std::sort(ratios.begin(), ratios.end());
    auto q = [&](double p) { return ratios.empty() ? 0.0 : ratios[std::min(ratios.size() - 1, std::size_t(p * ratios.size()))]; };
    std::printf("calibration pairs %zu (trace distance <= 0.5)\n", pairs);
    std::printf("vector/trace ratio median %.4f p99 %.4f max %.4f\n", q(0.5), q(0.99), ratios.empty() ? 0.0 : ratios.back());
    std::printf("scaled radius misses %zu\ncertified radius misses %zu\n", scaled_miss, certified_miss);
    return (a.ok && range_bad == 0 && nearest_bad == 0 && certified_miss == 0) ? 0 : 1;
}

void print_result(const Library& lib, const ApproximationResult& r) {
    std::printf("variant %s\nsequence %s\naccuracy %.6e\nt_count %d\nlength %zu\ndepth %d\ntime_s %.6f\n",
                std::string(to_string(r.variant)).c_str(), lib.to_text(r.sequence).c_str(), r.accuracy, r.t_count,
                r.length, r.depth, r.compile_time_s);
    for (const LevelTrace& l : r.levels)
        std::printf("level %d level_accuracy %.6e best_accuracy %.6e length %zu t_count %d raw_length %zu\n", l.depth,
                    l.level_accuracy, l.accuracy, l.length, l.t_count, l.raw_length);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Solovay-Kitaev gate synthesis with search space expansion");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string config_file;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "key=value file; command-line flags take precedence");
    };

    // build-db
    std::string lib_id = "HT", out_path;
    std::uint32_t l_max = 12;
    std::uint64_t budget = SequenceDatabase::default_memory_budget;
    auto* build = app.add_subcommand("build-db", "Enumerate canonical sequences into an SKDB file");
    add_config(build);
    build->add_option("--library", lib_id)->capture_default_str();
    build->add_option("--l-max", l_max, "Maximum sequence length")->capture_default_str();
    build->add_option("--memory-budget", budget, "Bytes")->capture_default_str();
    build->add_option("--out", out_path, "Output file")->required();

    // build-index-check
    std::string check_db;
    GnatOptions check_gnat;
    std::size_t check_queries = 100;
    double check_radius = 0.1;
    std::uint64_t check_seed = 7;
    auto* check = app.add_subcommand("build-index-check", "Build a GNAT over a database, audit it and calibrate radii");
    add_config(check);
    check->add_option("--db", check_db, "SKDB file (built in memory from --l-max if absent)");
    check->add_option("--library", lib_id)->capture_default_str();
    check->add_option("--l-max", l_max)->capture_default_str();
    check->add_option("--fanout", check_gnat.fanout)->capture_default_str();
    check->add_option("--leaf", check_gnat.leaf_capacity)->capture_default_str();
    check->add_option("--gnat-seed", check_gnat.seed)->capture_default_str();
    check->add_option("--queries", check_queries)->capture_default_str();
    check->add_option("--radius", check_radius, "Vector-space radius of the exactness queries")->capture_default_str();
    check->add_option("--seed", check_seed)->capture_default_str();

    // compile
    SearchSetup compile_setup;
    std::string gate, axis, matrix, variant_name = "original", record_path;
    double target_eps = 1e-3;
    int max_depth = 4;
    auto* compile = app.add_subcommand("compile", "Approximate one gate");
    add_config(compile);
    compile_setup.add_to(*compile);
    auto* g_opt = compile->add_option("--gate", gate, "Gate sequence text, e.g. H or \"H T\"");
    auto* a_opt = compile->add_option("--axis", axis, "Axis-angle vector x,y,z");
    auto* m_opt = compile->add_option("--matrix", matrix, "8 reals: re/im of a, b, c, d (row-major)");
    g_opt->excludes(a_opt, m_opt);
    a_opt->excludes(m_opt);
    compile->add_option("--variant", variant_name, "original, sse, rsse or all")->capture_default_str();
    compile->add_option("--eps", target_eps, "Target accuracy")->capture_default_str();
    compile->add_option("--max-depth", max_depth, "Recursion depth cap")->capture_default_str();
    compile->add_option("--record", record_path, "Append one CSV row per variant to this file");

    // bench
    SearchSetup bench_setup;
    bench::RunConfig run;
    std::vector<std::string> variant_names{"original", "sse", "rsse"};
    auto* benchc = app.add_subcommand("bench", "Three-way comparison over the seeded corpus");
    add_config(benchc);
    bench_setup.add_to(*benchc);
    benchc->add_option("--corpus-size", run.corpus_size)->capture_default_str();
    benchc->add_option("--corpus-seed", run.corpus_seed)->capture_default_str();
    benchc->add_option("--eps-list", run.eps, "Accuracies for the summary table")->delimiter(',');
    benchc->add_option("--variants", variant_names)->delimiter(',');
    benchc->add_option("--max-depth", run.max_depth)->capture_default_str();
    benchc->add_option("--out", run.csv, "CSV output")->capture_default_str();
    benchc->add_option("--sequences", run.sequences, "Sidecar sequence file (default: <out>.seq)");

    // gnat-bench
    std::vector<std::uint32_t> lengths{4, 8, 12, 16};
    std::vector<std::string> gnat_dbs;
    GnatOptions bench_gnat;
    std::size_t bench_queries = 120;
    double bench_radius = 0.1;
    std::uint64_t bench_seed = 11;
    std::string gnat_out = "gnat.csv";
    auto* gb = app.add_subcommand("gnat-bench", "GNAT range query time against linear scan");
    add_config(gb);
    gb->add_option("--library", lib_id)->capture_default_str();
    gb->add_option("--lengths", lengths, "Database lengths built in memory")->delimiter(',');
    gb->add_option("--db", gnat_dbs, "SKDB files (replace --lengths)")->delimiter(',');
    gb->add_option("--fanout", bench_gnat.fanout)->capture_default_str();
    gb->add_option("--leaf", bench_gnat.leaf_capacity)->capture_default_str();
    gb->add_option("--gnat-seed", bench_gnat.seed)->capture_default_str();
    gb->add_option("--queries", bench_queries)->capture_default_str();
    gb->add_option("--radius", bench_radius, "Vector-space query radius")->capture_default_str();
    gb->add_option("--seed", bench_seed)->capture_default_str();
    gb->add_option("--out", gnat_out)->capture_default_str();

    // corpus
    std::size_t corpus_size = 25;
    std::uint64_t corpus_seed = 1;
    auto* corp = app.add_subcommand("corpus", "Print the seeded target corpus as axis-angle triples");
    add_config(corp);
    corp->add_option("--size", corpus_size)->capture_default_str();
    corp->add_option("--seed", corpus_seed)->capture_default_str();

    try {
        std::vector<std::string> args(argv, argv + argc);
        args = bench::apply_config(args);
        std::vector<const char*> cargs;
        for (const auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const skx::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        if (*build) return cmd_build_db(lib_id, l_max, out_path, budget);

        if (*check)
            return cmd_index_check(check_db, lib_id, l_max, check_gnat, check_queries, check_radius, check_seed);

        if (*compile) {
            const Library lib = Library::by_id(compile_setup.library);
            if (gate.empty() && axis.empty() && matrix.empty())
                throw ParseError("one of --gate, --axis or --matrix is required");
            const Unitary target = parse_target(lib, gate, axis, matrix);
            const auto engine = compile_setup.engine();
            CompilerConfig cc;
            cc.target_eps = target_eps;
            cc.max_depth = max_depth;
            cc.inner_base = compile_setup.inner_base;
            const SkCompiler compiler(engine, cc);
            std::vector<Variant> variants;
            if (variant_name == "all")
                variants = {Variant::original, Variant::sse, Variant::rsse};
            else
                variants = {parse_variant(variant_name)};
            std::vector<bench::BenchRecord> rows;
            for (Variant v : variants) {
                cc.variant = v;
                const auto r = compiler.compile(target, cc);
                print_result(lib, r);
                bench::BenchRecord rec;
                rec.variant = v;
                rec.depth = r.depth;
                rec.accuracy = r.accuracy;
                rec.length = r.length;
                rec.t_count = r.t_count;
                rec.time_s = r.compile_time_s;
                rec.l0 = engine->s0().database().max_length();
                rec.l1 = engine->s1().database().max_length();
                rec.library = lib.id();
                rows.push_back(rec);
            }
            if (!record_path.empty()) {
                const bool fresh = !std::ifstream(record_path).good();
                std::ofstream out(record_path, std::ios::app);
                if (!out) throw Error("cannot open '" + record_path + "'");
                if (fresh) out << bench::csv_header << '\n';
                for (const auto& r : rows) out << bench::csv_row(r) << '\n';
            }
            return 0;
        }

        if (*benchc) {
            run.library = bench_setup.library;
            run.l0 = bench_setup.l0;
            run.l1 = bench_setup.s1_length();
            run.db0 = bench_setup.db0;
            run.db1 = bench_setup.db1;
            run.distinct = bench_setup.distinct;
            run.metric = bench_setup.metric;
            run.gnat = bench_setup.gnat;
            run.sse = bench_setup.sse;
            run.inner_base = bench_setup.inner_base;
            run.variants.clear();
            for (const auto& v : variant_names) run.variants.push_back(parse_variant(v));
            const auto engine = bench_setup.engine();
            run.l0 = engine->s0().database().max_length();
            run.l1 = engine->s1().database().max_length();
            run.validate();
            const SkCompiler compiler(engine);
            const unsigned threads = bench::worker_threads();
            const auto t0 = clock_type::now();
            const auto records = bench::run(compiler, run, threads);
            bench::write_csv(run.csv, records);
            bench::write_sidecar(run.sidecar_path(), records);
            std::printf("rows %zu\nthreads %u\nwall_time_s %.2f\ncsv %s\nsequences %s\n", records.size(), threads,
                        seconds_since(t0), run.csv.c_str(), run.sidecar_path().c_str());

            const auto bands = bench::analyse_bands(records);
            std::printf("band median_depth[%s] median_t_count[...]\n", "per variant");
            for (const auto& row : bands.rows) {
                std::printf("1e-%d", row.band);
                for (const auto& [v, d] : row.median_depth)
                    std::printf("  %s depth=%g t=%g reached=%zu", std::string(to_string(v)).c_str(), d,
                                row.median_t_count.at(v), row.reached.at(v));
                std::printf("\n");
            }
            if (bands.tightest_common) std::printf("tightest_common_band 1e-%d\n", *bands.tightest_common);
            for (double eps : run.eps) {
                std::printf("eps %g", eps);
                for (Variant v : run.variants) {
                    std::vector<double> counts;
                    for (std::size_t t = 0; t < run.corpus_size; ++t) {
                        double c = std::numeric_limits<double>::infinity();
                        for (const auto& r : records)
                            if (r.target_id == t && r.variant == v && r.accuracy <= eps) {
                                c = r.t_count;
                                break;
                            }
                        counts.push_back(c);
                    }
                    std::printf("  %s median_t_count=%g", std::string(to_string(v)).c_str(), bench::median(counts));
                }
                std::printf("\n");
            }
            return 0;
        }

        if (*gb) {
            const Library lib = Library::by_id(lib_id);
            std::vector<std::pair<std::string, SequenceDatabase>> dbs;
            if (!gnat_dbs.empty()) {
                for (const auto& p : gnat_dbs) dbs.emplace_back(p, SequenceDatabase::load(p, &lib));
            } else {
                for (auto l : lengths) dbs.emplace_back("l=" + std::to_string(l), SequenceDatabase::enumerate(lib, l));
            }
            const auto queries = bench::query_points(bench_seed, bench_queries);
            std::ofstream out(gnat_out, std::ios::trunc);
            if (!out) throw Error("cannot open '" + gnat_out + "'");
            out << bench::gnat_csv_header << '\n';
            bool ok = true;
            for (const auto& [name, db] : dbs) {
                const auto points = db.vectors();
                const auto t0 = clock_type::now();
                const AxisGnat tree(points, bench_gnat);
                const double build_s = seconds_since(t0);
                const auto t = bench::time_range_queries(tree, points, queries, bench_radius);
                out << t.db_size << ',' << bench::format_double(t.gnat_mean_s) << ','
                    << bench::format_double(t.linear_mean_s) << '\n';
                std::printf("%s size %zu build_s %.3f gnat_mean_s %.3e linear_mean_s %.3e ratio %.4f hits %zu "
                            "mismatches %zu\n",
                            name.c_str(), t.db_size, build_s, t.gnat_mean_s, t.linear_mean_s,
                            t.linear_mean_s > 0 ? t.gnat_mean_s / t.linear_mean_s : 0.0, t.total_hits, t.mismatches);
                ok = ok && t.mismatches == 0;
            }
            if (!ok) {
                std::fprintf(stderr, "error: GNAT and linear scan disagree\n");
                return 1;
            }
            return 0;
        }

        if (*corp) {
            std::printf("target_id,seed,x,y,z\n");
            for (std::size_t i = 0; i < corpus_size; ++i) {
                const auto seed = bench::corpus_seed(corpus_seed, i);
                const AxisVector v = to_axis_vector(random_unitary(seed));
                std::printf("%zu,%llu,%s,%s,%s\n", i, static_cast<unsigned long long>(seed),
                            bench::format_double(v.x).c_str(), bench::format_double(v.y).c_str(),
                            bench::format_double(v.z).c_str());
            }
            return 0;
        }
    } catch (const skx::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
