#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "skx/bench.hpp"

using namespace skx;
using namespace skx::bench;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("skx_bench_" + name)).string();
}

std::shared_ptr<const SkCompiler> compiler() {
    static const auto c = [] {
        auto db = std::make_shared<const SequenceDatabase>(
            SequenceDatabase::enumerate(Library::clifford_t(), 8).distinct());
        auto index = std::make_shared<const DatabaseIndex>(db);
        return std::make_shared<const SkCompiler>(std::make_shared<const SseEngine>(index, index));
    }();
    return c;
}

RunConfig small_config() {
    RunConfig cfg;
    cfg.l0 = cfg.l1 = 8;
    cfg.corpus_size = 3;
    cfg.variants = {Variant::original, Variant::sse};
    cfg.max_depth = 2;
    return cfg;
}

BenchRecord record(std::size_t target, Variant v, int depth, double acc, int t) {
    BenchRecord r;
    r.target_id = target;
    r.variant = v;
    r.depth = depth;
    r.accuracy = acc;
    r.t_count = t;
    return r;
}

struct EnvGuard {
    explicit EnvGuard(const char* value) {
        if (value) setenv("SKX_THREADS", value, 1);
        else unsetenv("SKX_THREADS");
    }
    ~EnvGuard() { unsetenv("SKX_THREADS"); }
};

}  // namespace

TEST(Corpus, SeededAndReproducible) {
    const auto a = corpus(1, 5), b = corpus(1, 5);
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_EQ(a[i], random_unitary(corpus_seed(1, i)));
    }
    EXPECT_NE(corpus(2, 1)[0], a[0]);
}

TEST(Run, RecordsPerDepthAndOrder) {
    const RunConfig cfg = small_config();
    const auto records = run(*compiler(), cfg, 1);
    ASSERT_EQ(records.size(), 3u * 2u * 3u);
    std::size_t i = 0;
    for (std::size_t t = 0; t < 3; ++t)
        for (Variant v : cfg.variants)
            for (int d = 0; d <= 2; ++d, ++i) {
                EXPECT_EQ(records[i].target_id, t);
                EXPECT_EQ(records[i].seed, corpus_seed(1, t));
                EXPECT_EQ(records[i].variant, v);
                EXPECT_EQ(records[i].depth, d);
                EXPECT_EQ(records[i].library, "HT");
                if (d > 0) {
                    EXPECT_LE(records[i].accuracy, records[i - 1].accuracy);
                }
            }
    const auto [err, mismatches] = revalidate(records, compiler()->library());
    EXPECT_EQ(err, 0.0);
    EXPECT_EQ(mismatches, 0u);
}

TEST(Run, IndependentOfThreadCount) {
    const RunConfig cfg = small_config();
    const auto one = run(*compiler(), cfg, 1);
    const auto three = run(*compiler(), cfg, 3);
    ASSERT_EQ(one.size(), three.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].sequence, three[i].sequence);
        EXPECT_EQ(one[i].accuracy, three[i].accuracy);
    }
}

TEST(Csv, RoundtripWithSidecar) {
    const auto records = run(*compiler(), small_config(), 1);
    const std::string csv = temp_path("rt.csv"), seq = temp_path("rt.csv.seq");
    write_csv(csv, records);
    write_sidecar(seq, records);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "target_id,seed,variant,depth,accuracy,length,t_count,time_s,l0,l1,library");
    const auto back = read_csv(csv, seq);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].accuracy, records[i].accuracy);
        EXPECT_EQ(back[i].time_s, records[i].time_s);
        EXPECT_EQ(back[i].sequence, records[i].sequence);
        EXPECT_EQ(csv_row(back[i]), csv_row(records[i]));
    }
    EXPECT_EQ(revalidate(back, compiler()->library()).second, 0u);

    // A tampered T-count is caught.
    auto bad = back;
    bad[0].t_count += 1;
    EXPECT_EQ(revalidate(bad, compiler()->library()).second, 1u);
    std::filesystem::remove(csv);
    std::filesystem::remove(seq);
}

TEST(Csv, RejectsMalformed) {
    const std::string csv = temp_path("bad.csv");
    {
        std::ofstream out(csv);
        out << "a,b\n";
    }
    EXPECT_THROW(read_csv(csv), ParseError);
    {
        std::ofstream out(csv);
        out << csv_header << "\n0,1,original,0,zz,1,0,0,12,12,HT\n";
    }
    EXPECT_THROW(read_csv(csv), ParseError);
    std::filesystem::remove(csv);
}

TEST(Format, ShortestRoundtrip) {
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(parse_number<double>(format_double(0.1 + 0.2)), 0.1 + 0.2);
    EXPECT_THROW(parse_number<int>("3x"), ParseError);
}

TEST(Bands, Definition) {
    EXPECT_EQ(band_of(1e-3), 3);
    EXPECT_EQ(band_of(4e-3), 2);   // log10 = -2.4
    EXPECT_EQ(band_of(2.5e-3), 3);  // log10 = -2.6
    EXPECT_EQ(band_of(0.0), std::numeric_limits<int>::max());
}

TEST(Bands, MediansAndTightestCommon) {
    std::vector<BenchRecord> r;
    // Target 0: original reaches band 2 at depth 1, sse at depth 0.
    r.push_back(record(0, Variant::original, 0, 0.1, 10));
    r.push_back(record(0, Variant::original, 1, 0.01, 40));
    r.push_back(record(0, Variant::sse, 0, 0.01, 20));
    r.push_back(record(0, Variant::sse, 1, 0.001, 60));
    // Target 1: original never reaches band 2; sse at depth 1.
    r.push_back(record(1, Variant::original, 0, 0.1, 12));
    r.push_back(record(1, Variant::original, 1, 0.1, 12));
    r.push_back(record(1, Variant::sse, 0, 0.1, 8));
    r.push_back(record(1, Variant::sse, 1, 0.01, 30));
    // Target 2: both reach band 2 at depth 1.
    r.push_back(record(2, Variant::original, 0, 0.1, 9));
    r.push_back(record(2, Variant::original, 1, 0.01, 50));
    r.push_back(record(2, Variant::sse, 0, 0.1, 9));
    r.push_back(record(2, Variant::sse, 1, 0.01, 25));

    const auto a = analyse_bands(r);
    ASSERT_EQ(a.rows.size(), 3u);
    const BandRow* b1 = a.row(1);
    ASSERT_NE(b1, nullptr);
    EXPECT_EQ(b1->median_depth.at(Variant::original), 0.0);
    EXPECT_EQ(b1->median_t_count.at(Variant::original), 10.0);
    const BandRow* b2 = a.row(2);
    EXPECT_EQ(b2->median_depth.at(Variant::original), 1.0);       // {1, inf, 1}
    EXPECT_EQ(b2->median_t_count.at(Variant::original), 50.0);    // {40, inf, 50}
    EXPECT_EQ(b2->median_depth.at(Variant::sse), 1.0);            // {0, 1, 1}
    EXPECT_EQ(b2->median_t_count.at(Variant::sse), 25.0);         // {20, 30, 25}
    EXPECT_EQ(b2->reached.at(Variant::original), 2u);
    const BandRow* b3 = a.row(3);
    EXPECT_TRUE(std::isinf(b3->median_depth.at(Variant::original)));
    EXPECT_TRUE(std::isinf(b3->median_depth.at(Variant::sse)));
    ASSERT_TRUE(a.tightest_common);
    EXPECT_EQ(*a.tightest_common, 2);
}

TEST(Bands, Empty) {
    EXPECT_TRUE(analyse_bands({}).rows.empty());
    EXPECT_FALSE(analyse_bands({}).tightest_common);
}

TEST(Threads, Environment) {
    {
        EnvGuard g("3");
        EXPECT_EQ(worker_threads(), 3u);
    }
    {
        EnvGuard g("0");
        EXPECT_THROW(worker_threads(), Error);
    }
    {
        EnvGuard g("two");
        EXPECT_THROW(worker_threads(), Error);
    }
    {
        EnvGuard g(nullptr);
        EXPECT_GE(worker_threads(), 1u);
    }
}

TEST(Threads, ParallelForCoversEveryIndexOnce) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 5) throw Error("boom"); }), Error);
}

TEST(Config, Parse) {
    std::istringstream in("# comment\nl0 = 10\n  --eps-list=0.1,0.01  # trailing\n\nno-distinct = true\n");
    const auto kv = parse_config(in);
    ASSERT_EQ(kv.size(), 3u);
    EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"l0", "10"}));
    EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"eps-list", "0.1,0.01"}));
    EXPECT_EQ(kv[2].first, "no-distinct");
    std::istringstream bad("l0 10\n");
    EXPECT_THROW(parse_config(bad), ParseError);
    std::istringstream empty_key(" = 3\n");
    EXPECT_THROW(parse_config(empty_key), ParseError);
}

TEST(Config, FlagsOverrideFile) {
    const std::string path = temp_path("cfg.conf");
    {
        std::ofstream out(path);
        out << "l0 = 10\nmax-depth = 2\ndistinct = false\n";
    }
    const std::vector<std::string> args{"skx", "bench", "--config", path, "--l0", "6", "--no-distinct"};
    const auto out = apply_config(args);
    const std::vector<std::string> want{"skx", "bench", "--max-depth=2", "--config", path, "--l0", "6",
                                        "--no-distinct"};
    EXPECT_EQ(out, want);
    EXPECT_EQ(apply_config({"skx", "bench"}), (std::vector<std::string>{"skx", "bench"}));
    EXPECT_THROW(apply_config({"skx", "bench", "--config", temp_path("missing.conf")}), Error);
    std::filesystem::remove(path);
}

TEST(Config, OptionKey) {
    EXPECT_EQ(option_key("--l0"), "l0");
    EXPECT_EQ(option_key("--eps-list=1"), "eps-list");
    EXPECT_EQ(option_key("--no-distinct"), "distinct");
    EXPECT_FALSE(option_key("-x"));
    EXPECT_FALSE(option_key("--"));
    EXPECT_FALSE(option_key("value"));
}

TEST(GnatTimingTest, AgreesWithLinearScan) {
    const auto pts = query_points(1, 3000);
    const AxisGnat tree(pts);
    const auto t = time_range_queries(tree, pts, query_points(9000, 20), 0.3);
    EXPECT_EQ(t.db_size, 3000u);
    EXPECT_EQ(t.mismatches, 0u);
    EXPECT_GT(t.total_hits, 0u);
    EXPECT_GT(t.linear_mean_s, 0.0);
}
