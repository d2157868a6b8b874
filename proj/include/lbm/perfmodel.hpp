#pragma once

#include "lbm/config.hpp"

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace lbm::perf {

// Effective memory bandwidth in GB/s (1e9 bytes/s).
double effective_bandwidth(double sites, double duration_s, double bytes_per_site);
// Fraction of peak memory bandwidth.
double efficiency_p(double bandwidth_gbs, double peak_bandwidth_gbs);
// Millions of lattice-site updates per second.
double mlups(double sites, double duration_s);
// Fraction of peak floating-point throughput.
double efficiency_c(double mlups, double flops_per_site, double peak_gflops);

enum class SampleRegion { Bulk, BorderL, BorderR, Exchange };

struct KernelTimingSample {
    int lx = 0; // global lattice
    int ly = 0;
    int n_ranks = 1;
    std::string kernel = "all"; // propagate | bc | collide | exchange | all
    SampleRegion region = SampleRegion::Bulk;
    double duration = 0.0; // seconds, median over repetitions
    int repetitions = 0;
};

struct ScalingModelParams {
    double alpha = 0.0; // s per bulk site
    double beta = 0.0;  // s per column-site of the boundary rows
    double gamma = 0.0; // s per exchanged row-site
    double delta = 0.0; // s per border row-site
    double residual = 0.0;

    friend bool operator==(const ScalingModelParams&, const ScalingModelParams&) = default;
};

class IdentifiabilityError : public std::invalid_argument {
public:
    IdentifiabilityError(const std::string& regressor, const std::string& why)
        : std::invalid_argument("cannot identify " + regressor + ": " + why), regressor_(regressor)
    {
    }
    [[nodiscard]] const std::string& regressor() const { return regressor_; }

private:
    std::string regressor_;
};

double median(std::vector<double> values);

// Samples sharing (lx, ly, n_ranks) are summed per region; then
//   T_bulk     ~ alpha (Lx/n) Ly + beta (Lx/n)
//   T_exchange ~ gamma Ly
//   T_border   ~ delta Ly   (T_border = T_borderL + T_borderR)
// by non-negative least squares. residual is the 2-norm over all equations.
ScalingModelParams fit_model(const std::vector<KernelTimingSample>& samples);

// Exact NNLS for small dense problems (active-set enumeration). Columns of
// `design` are regressors; returns the coefficient vector.
std::vector<double> nnls(const std::vector<std::vector<double>>& design, const std::vector<double>& rhs);

enum class Regime { ComputeBound, CommunicationBound };
std::string_view to_string(Regime regime);

struct Prediction {
    double time = 0.0;
    Regime regime = Regime::ComputeBound;
    double crossover = 0.0; // n* where both branches meet; +inf when gamma == 0
};

// T(Lx, Ly, n) = max{alpha (Lx/n) Ly + beta (Lx/n), gamma Ly} + delta Ly.
Prediction predict_time(const ScalingModelParams& p, double lx, double ly, int n);
double predict_speedup(const ScalingModelParams& p, double lx, double ly, int n);
double predict_efficiency(const ScalingModelParams& p, double lx, double ly, int n);

struct TimingCsv {
    int lx = 0;
    int ly = 0;
    int n_ranks = 1;
    std::vector<double> t_bulk, t_border_left, t_border_right, t_exchange, t_wall;
};

// Reads the scheduler's timing CSV (with its "# lx=.. ly=.. n_ranks=.." line).
TimingCsv read_timing_csv(std::istream& in);
// Median samples (bulk, borderL, borderR, exchange) of one timing log.
std::vector<KernelTimingSample> samples_from_csv(const TimingCsv& csv);

struct PredictionRow {
    int n = 1;
    double time = 0.0;
    double speedup = 1.0;
    double efficiency = 1.0;
    Regime regime = Regime::ComputeBound;
};

std::vector<PredictionRow> predict_range(const ScalingModelParams& p, double lx, double ly, int n_min, int n_max);

// {alpha, beta, gamma, delta, residual, predictions: [{n, T, S_r, efficiency, regime}]}
std::string params_to_json(const ScalingModelParams& p, const std::vector<PredictionRow>& predictions = {});
// Throws std::invalid_argument naming the offending field.
ScalingModelParams params_from_json(const std::string& text);

} // namespace lbm::perf
