#pragma once

#include "lbm/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace lbm {

struct KernelBench {
    std::string kernel;  // propagate | bc | collide
    std::string variant; // v1 | v2 for propagate, "-" otherwise
    double sites = 0.0;
    std::vector<double> times; // seconds per repetition
    double median_s = 0.0;
    double bandwidth_gbs = 0.0; // propagate only
    double efficiency_p = 0.0;
    double mlups = 0.0;
    double efficiency_c = 0.0; // collide only
};

struct ModeBench {
    std::string mode;
    double sites = 0.0;
    std::vector<double> wall_times;
    double median_wall_s = 0.0;
    double mlups = 0.0;
};

struct OrderingBench {
    std::string ordering;
    int n_ranks = 1;
    std::vector<double> exchange_times;
    double median_exchange_s = 0.0;
};

struct BenchReport {
    RunConfig config;
    double bytes_per_site = 0.0;
    long counted_collide_flops_per_site = 0;
    std::vector<KernelBench> kernels;
    std::vector<ModeBench> modes;
    std::vector<OrderingBench> orderings;
};

// Times each kernel (both propagate variants) on one Lx x Ly field, then full
// steps in serial and overlap mode and both exchange orderings on
// config.n_ranks ranks. Every figure is a median over config.reps repetitions.
BenchReport run_bench(const RunConfig& config);

std::string bench_to_json(const BenchReport& report);
void bench_to_csv(std::ostream& out, const BenchReport& report);

} // namespace lbm
