#include "lbm/perfmodel.hpp"
#include "synthetic_samples.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

using namespace lbm;
using namespace lbm::perf;

namespace {

constexpr double kTable1Sites = 1920.0 * 2048.0;

double rel(double a, double b)
{
    return std::abs(a - b) / std::abs(b);
}

} // namespace

TEST_CASE("effective bandwidth")
{
    // 2 * 37 * 8 bytes per site
    CHECK(rel(effective_bandwidth(kTable1Sites, 13.91e-3, 592.0), 167.0) < 0.005);
    CHECK(rel(effective_bandwidth(kTable1Sites, 7.51e-3, 592.0), 310.0) < 0.005);
    const double a = effective_bandwidth(1e6, 1e-3, 100.0);
    CHECK(effective_bandwidth(1e6, 2e-3, 100.0) == doctest::Approx(a / 2.0));
    CHECK(efficiency_p(167.0, 288.0) == doctest::Approx(0.58).epsilon(0.01));
    CHECK_THROWS(effective_bandwidth(1.0, 0.0, 1.0));
}

TEST_CASE("MLUPS")
{
    CHECK(rel(mlups(kTable1Sites, 78.65e-3), 50.0) < 0.01);
    CHECK(rel(mlups(kTable1Sites, 96.57e-3), 40.7) < 0.005);
    CHECK(mlups(1e6, 1.0) == 1.0);
    CHECK_THROWS(mlups(1.0, -1.0));
}

TEST_CASE("compute efficiency")
{
    CHECK(std::abs(efficiency_c(12.0, 6500.0, 331.56) - 0.235) < 0.001);
    CHECK(std::abs(efficiency_c(50.0, 7600.0, 1660.0) - 0.229) < 0.001);
    CHECK(efficiency_c(0.0, 6500.0, 331.56) == 0.0);
}

TEST_CASE("median")
{
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS(median({}));
}

TEST_CASE("nnls clamps negative coefficients")
{
    // y = 2 x0 - 1 x1 exactly; the NNLS optimum drops x1
    std::vector<std::vector<double>> a{{1, 0}, {0, 1}, {1, 1}};
    std::vector<double> y{2.0, -1.0, 1.0};
    const auto x = nnls(a, y);
    CHECK(x[1] == 0.0);
    CHECK(x[0] > 0.0);
    // compare with brute-force grid search over the feasible quadrant
    double best = std::numeric_limits<double>::infinity();
    double best_x0 = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x0 = i * 1e-3;
        double r = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            const double e = a[k][0] * x0 - y[k];
            r += e * e;
        }
        if (r < best) {
            best = r;
            best_x0 = x0;
        }
    }
    CHECK(x[0] == doctest::Approx(best_x0).epsilon(1e-3));
}

TEST_CASE("fit recovers noiseless coefficients")
{
    const ScalingModelParams truth{2e-9, 4e-7, 5e-7, 1e-7, 0.0};
    const auto samples = test::synthetic_samples(truth, {1080, 2160}, {128, 512, 1024}, {1, 2, 4, 8}, 0.0, 1);
    const auto fit = fit_model(samples);
    CHECK(rel(fit.alpha, truth.alpha) <= 1e-10);
    CHECK(rel(fit.beta, truth.beta) <= 1e-10);
    CHECK(rel(fit.gamma, truth.gamma) <= 1e-10);
    CHECK(rel(fit.delta, truth.delta) <= 1e-10);
    CHECK(fit.residual < 1e-15);
}

TEST_CASE("fit identifiability errors")
{
    const ScalingModelParams truth{2e-9, 4e-7, 5e-7, 1e-7, 0.0};
    SUBCASE("single rank count")
    {
        const auto s = test::synthetic_samples(truth, {1080}, {128, 512}, {4}, 0.0, 1);
        CHECK_THROWS_AS(fit_model(s), IdentifiabilityError);
    }
    SUBCASE("single Ly leaves beta collinear with alpha")
    {
        const auto s = test::synthetic_samples(truth, {1080}, {512}, {1, 2, 4}, 0.0, 1);
        try {
            (void)fit_model(s);
            FAIL("expected IdentifiabilityError");
        } catch (const IdentifiabilityError& e) {
            CHECK(e.regressor() == "beta");
        }
    }
    SUBCASE("no exchange samples")
    {
        auto s = test::synthetic_samples(truth, {1080}, {128, 512}, {1, 2}, 0.0, 1);
        std::erase_if(s, [](const KernelTimingSample& k) { return k.region == SampleRegion::Exchange; });
        try {
            (void)fit_model(s);
            FAIL("expected IdentifiabilityError");
        } catch (const IdentifiabilityError& e) {
            CHECK(e.regressor() == "gamma");
        }
    }
    SUBCASE("too few repetitions")
    {
        auto s = test::synthetic_samples(truth, {1080}, {128, 512}, {1, 2}, 0.0, 1);
        s.front().repetitions = 3;
        CHECK_THROWS_AS(fit_model(s), std::invalid_argument);
    }
}

TEST_CASE("predict_time")
{
    SUBCASE("pure bulk model scales ideally")
    {
        const ScalingModelParams p{1e-9, 0.0, 0.0, 0.0, 0.0};
        for (int n = 1; n <= 64; n *= 2) {
            const auto t = predict_time(p, 1080, 5736, n);
            CHECK(t.time == doctest::Approx(1e-9 * 1080 * 5736 / n).epsilon(1e-14));
            CHECK(t.regime == Regime::ComputeBound);
            CHECK(predict_speedup(p, 1080, 5736, n) == doctest::Approx(n).epsilon(1e-14));
        }
    }
    SUBCASE("crossover")
    {
        const ScalingModelParams p{1e-9, 0.0, 1e-7, 0.0, 0.0};
        const auto t = predict_time(p, 1080, 5736, 1);
        CHECK(t.crossover == doctest::Approx(10.8).epsilon(1e-12));
        CHECK(predict_time(p, 1080, 5736, 10).regime == Regime::ComputeBound);
        CHECK(predict_time(p, 1080, 5736, 11).regime == Regime::CommunicationBound);
        CHECK(predict_time(p, 1080, 5736, 40).regime == Regime::CommunicationBound);
    }
    SUBCASE("communication-bound limit")
    {
        const ScalingModelParams p{1e-9, 3e-7, 1e-7, 0.0, 0.0};
        const double limit = (1e-9 * 1080 * 5736 + 3e-7 * 1080) / (1e-7 * 5736);
        CHECK(predict_speedup(p, 1080, 5736, 100000) == doctest::Approx(limit).epsilon(1e-12));
    }
    CHECK_THROWS(predict_time({}, 10, 10, 0));
}

TEST_CASE("speedup properties hold for random parameters")
{
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> logu(-10.0, -6.0);
    for (int trial = 0; trial < 200; ++trial) {
        const ScalingModelParams p{std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)),
                                   std::pow(10.0, logu(rng)), 0.0};
        const double lx = 1080;
        const double ly = 5736;
        CHECK(predict_speedup(p, lx, ly, 1) == 1.0);
        double prev_t = predict_time(p, lx, ly, 1).time;
        double prev_s = 1.0;
        double prev_e = 1.0;
        int switches = 0;
        Regime prev_r = predict_time(p, lx, ly, 1).regime;
        for (int n = 2; n <= 256; ++n) {
            const auto t = predict_time(p, lx, ly, n);
            const double s = predict_speedup(p, lx, ly, n);
            const double e = predict_efficiency(p, lx, ly, n);
            CHECK(t.time <= prev_t * (1 + 1e-15));
            CHECK(s >= prev_s * (1 - 1e-15));
            CHECK(e <= prev_e * (1 + 1e-15));
            if (t.regime != prev_r) {
                ++switches;
                CHECK(n >= t.crossover);
                CHECK(n - 1 < t.crossover);
            }
            prev_t = t.time;
            prev_s = s;
            prev_e = e;
            prev_r = t.regime;
        }
        CHECK(switches <= 1);
    }
}

TEST_CASE("timing CSV ingestion")
{
    std::istringstream in("# lx=96 ly=32 n_ranks=2 model=D2Q9 mode=serial variant=v1\n"
                          "step,t_bulk,t_borderL,t_borderR,t_exchange,t_wall\n"
                          "1,0.000100000,0.000010000,0.000011000,0.000020000,0.000150000\n"
                          "2,0.000300000,0.000012000,0.000013000,0.000022000,0.000350000\n"
                          "3,0.000200000,0.000014000,0.000015000,0.000024000,0.000250000\n");
    const auto csv = read_timing_csv(in);
    CHECK(csv.lx == 96);
    CHECK(csv.ly == 32);
    CHECK(csv.n_ranks == 2);
    const auto samples = samples_from_csv(csv);
    REQUIRE(samples.size() == 4);
    CHECK(samples[0].duration == doctest::Approx(0.0002));
    CHECK(samples[3].region == SampleRegion::Exchange);
    CHECK(samples[3].duration == doctest::Approx(0.000022));
    CHECK(samples[0].repetitions == 3);

    std::istringstream no_meta("step,t_bulk,t_borderL,t_borderR,t_exchange,t_wall\n");
    CHECK_THROWS(read_timing_csv(no_meta));
    std::istringstream bad_row("# lx=1 ly=1 n_ranks=1\nstep,t_bulk,t_borderL,t_borderR,t_exchange,t_wall\n1,2,3\n");
    CHECK_THROWS(read_timing_csv(bad_row));
}

TEST_CASE("params JSON")
{
    const ScalingModelParams p{1e-9, 2e-8, 3e-7, 4e-8, 0.5};
    const auto rows = predict_range(p, 1080, 1024, 1, 4);
    const auto text = params_to_json(p, rows);
    const auto back = params_from_json(text);
    CHECK(back == p);
    CHECK(text.find("\"predictions\"") != std::string::npos);
    CHECK(text.find("\"S_r\"") != std::string::npos);
    CHECK_THROWS_AS(params_from_json("{\"alpha\": 1}"), std::invalid_argument);
    CHECK_THROWS_AS(params_from_json("{\"alpha\": -1, \"beta\": 0, \"gamma\": 0, \"delta\": 0}"), std::invalid_argument);
    CHECK_THROWS_AS(params_from_json("[1,2]"), std::invalid_argument);
    CHECK_THROWS_AS(params_from_json("nope"), std::invalid_argument);
}
