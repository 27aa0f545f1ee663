// Runs the default configuration and an active/mirrored variant on a rotated ellipsoid.
#include <modcma/modcma.hpp>

#include <iostream>

int main()
{
    using namespace modcma;
    const benchmarks::ProblemInstance problem(benchmarks::Function::rot_ellipsoid, 5, 1);

    Configuration variant;
    variant.active = true;
    variant.mirrored = sampling::Mirrored::mirrored_pairwise;

    for (const auto &cfg : {Configuration{}, variant})
    {
        const auto result = run(cfg, problem, 20000, 42);
        std::cout << to_string(cfg) << "\n  evals " << result.trace.evals_used << ", precision "
                  << result.trace.final_precision() << ", AOC " << metrics::run_aoc(result.trace) << "\n";
    }
}
