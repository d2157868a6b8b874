#pragma once

#include "lbm/perfmodel.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lbm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBlowup = 3;
inline constexpr int kExitIo = 4;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MeasuredPoint {
    int n = 1;
    double speedup = 1.0;
};

// "n,speedup" rows; a header line is allowed.
std::vector<MeasuredPoint> read_measured_points(const std::filesystem::path& path);

// Writes prediction.json, speedup.dat, efficiency.dat, measured.dat (when
// points are given) and scaling.gp into dir.
void write_prediction_artifacts(const std::filesystem::path& dir, const perf::ScalingModelParams& params, double lx,
                                double ly, const std::vector<perf::PredictionRow>& rows,
                                const std::vector<MeasuredPoint>& measured);

// Entry point of the lbmtool executable: run | bench | fit | predict.
int cli_main(int argc, char** argv);
int cli_main(std::vector<std::string> args);

} // namespace lbm
