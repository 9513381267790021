// Minimal library usage: approximate a z-rotation with each variant.

#include <cstdio>
#include <memory>

#include "skx/search.hpp"
#include "skx/sequence_db.hpp"
#include "skx/sk_compiler.hpp"
#include "skx/sse.hpp"

int main() {
    using namespace skx;
    const Library lib = Library::clifford_t();
    auto db = std::make_shared<const SequenceDatabase>(SequenceDatabase::enumerate(lib, 10).distinct());
    auto index = std::make_shared<const DatabaseIndex>(db);
    auto engine = std::make_shared<const SseEngine>(index, index);

    CompilerConfig cfg;
    cfg.target_eps = 1e-3;
    cfg.max_depth = 2;
    const SkCompiler compiler(engine, cfg);

    const Unitary target = from_axis_vector({0.0, 0.0, 0.3});
    for (Variant v : {Variant::original, Variant::sse, Variant::rsse}) {
        cfg.variant = v;
        const ApproximationResult r = compiler.compile(target, cfg);
        std::printf("%-8s accuracy %.3e  t_count %4d  depth %d\n", std::string(to_string(v)).c_str(), r.accuracy,
                    r.t_count, r.depth);
    }
}
