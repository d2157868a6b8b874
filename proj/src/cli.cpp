#include "lbm/cli.hpp"

#include "lbm/bench.hpp"
#include "lbm/config.hpp"
#include "lbm/scheduler.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace lbm {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

struct Overrides {
    std::string out;
    std::string variant;
    std::string mode;
    int ranks = 0;
    int reps = 0;
};

RunConfig resolve_config(const std::string& path, const Overrides& o)
{
    RunConfig config;
    try {
        config = parse_config(slurp(path));
    } catch (const IoError&) {
        throw ConfigError("--config", "cannot read " + path);
    }
    try {
        if (!o.out.empty()) {
            config.out_dir = o.out;
        }
        if (!o.variant.empty()) {
            config.variant = parse_variant(o.variant);
        }
        if (!o.mode.empty()) {
            config.mode = parse_mode(o.mode);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError("flags", e.what());
    }
    if (o.ranks > 0) {
        config.n_ranks = o.ranks;
    }
    if (o.reps > 0) {
        config.reps = o.reps;
    }
    if (!config.coefficients_file.empty() && !fs::exists(config.coefficients_file)) {
        throw ConfigError("coefficients_file", "no such file " + config.coefficients_file);
    }
    config.validate();
    return config;
}

void cmd_run(const RunConfig& config)
{
    const fs::path dir(config.out_dir);
    ensure_dir(dir);
    // config is written first so a blow-up still leaves a record of the run
    open_out(dir / "config.json") << emit_config(config) << '\n';
    const RunResult result = run(config);
    {
        auto out = open_out(dir / "timing.csv");
        write_timing_csv(out, result.timings, config);
    }
    {
        auto out = open_out(dir / "monitor.csv");
        write_monitor_csv(out, result.monitor);
    }
    if (config.dump_field) {
        auto out = open_out(dir / "field.bin", std::ios::out | std::ios::binary);
        write_field_dump(out, result.field);
    }
    const auto& last = result.monitor.back();
    std::cout << "run: " << config.steps << " steps on " << config.n_ranks << " rank(s), mass drift "
              << std::setprecision(3) << last.mass_drift << '\n';
    if (result.nonphysical_sites) {
        std::cerr << "warning: " << result.nonphysical_sites << " non-physical site updates\n";
    }
}

void cmd_bench(const RunConfig& config)
{
    const fs::path dir(config.out_dir);
    ensure_dir(dir);
    const BenchReport report = run_bench(config);
    open_out(dir / "bench.json") << bench_to_json(report) << '\n';
    auto csv = open_out(dir / "bench.csv");
    bench_to_csv(csv, report);
    for (const auto& k : report.kernels) {
        std::cout << std::left << std::setw(10) << k.kernel << std::setw(3) << k.variant << " median "
                  << std::setprecision(4) << k.median_s * 1e3 << " ms";
        if (k.bandwidth_gbs > 0.0) {
            std::cout << "  " << k.bandwidth_gbs << " GB/s";
        }
        std::cout << "  " << k.mlups << " MLUPS\n";
    }
}

void cmd_fit(const std::vector<std::string>& csv_paths, const fs::path& out_dir)
{
    std::vector<perf::KernelTimingSample> samples;
    for (const auto& path : csv_paths) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot read " + path);
        }
        const auto csv = perf::read_timing_csv(in);
        const auto s = perf::samples_from_csv(csv);
        samples.insert(samples.end(), s.begin(), s.end());
    }
    const auto params = perf::fit_model(samples);
    ensure_dir(out_dir);
    open_out(out_dir / "params.json") << perf::params_to_json(params) << '\n';
    std::cout << std::setprecision(6) << "alpha=" << params.alpha << " beta=" << params.beta << " gamma=" << params.gamma
              << " delta=" << params.delta << " residual=" << params.residual << '\n';
}

void cmd_predict(const fs::path& params_path, double lx, double ly, int n_min, int n_max,
                 const std::string& measured_path, const fs::path& out_dir)
{
    const auto params = perf::params_from_json(slurp(params_path));
    const auto rows = perf::predict_range(params, lx, ly, n_min, n_max);
    std::vector<MeasuredPoint> measured;
    if (!measured_path.empty()) {
        measured = read_measured_points(measured_path);
    }
    ensure_dir(out_dir);
    write_prediction_artifacts(out_dir, params, lx, ly, rows, measured);
    std::cout << "predict: " << rows.size() << " points, crossover n* = " << perf::predict_time(params, lx, ly, 1).crossover
              << '\n';
}

} // namespace

std::vector<MeasuredPoint> read_measured_points(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::vector<MeasuredPoint> points;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 'n') {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        MeasuredPoint p;
        if (!(row >> p.n >> p.speedup)) {
            throw std::invalid_argument("measured points: malformed row '" + line + "'");
        }
        points.push_back(p);
    }
    return points;
}

void write_prediction_artifacts(const fs::path& dir, const perf::ScalingModelParams& params, double lx, double ly,
                                const std::vector<perf::PredictionRow>& rows, const std::vector<MeasuredPoint>& measured)
{
    open_out(dir / "prediction.json") << perf::params_to_json(params, rows) << '\n';
    {
        auto out = open_out(dir / "speedup.dat");
        out << "# n S_r regime\n" << std::setprecision(12);
        for (const auto& r : rows) {
            out << r.n << ' ' << r.speedup << ' ' << perf::to_string(r.regime) << '\n';
        }
    }
    {
        auto out = open_out(dir / "efficiency.dat");
        out << "# n efficiency regime\n" << std::setprecision(12);
        for (const auto& r : rows) {
            out << r.n << ' ' << r.efficiency << ' ' << perf::to_string(r.regime) << '\n';
        }
    }
    if (!measured.empty()) {
        auto out = open_out(dir / "measured.dat");
        out << "# n S_measured efficiency_measured\n" << std::setprecision(12);
        for (const auto& m : measured) {
            out << m.n << ' ' << m.speedup << ' ' << m.speedup / m.n << '\n';
        }
    }
    auto gp = open_out(dir / "scaling.gp");
    const int n_max = rows.empty() ? 1 : rows.back().n;
    gp << "# strong scaling of a " << lx << " x " << ly << " lattice\n"
       << "set terminal pngcairo size 1200,500\n"
       << "set output 'scaling.png'\n"
       << "set multiplot layout 1,2\n"
       << "set grid\n"
       << "set key top left\n"
       << "set xlabel 'ranks'\n"
       << "set xrange [1:" << n_max << "]\n"
       << "set ylabel 'relative speedup'\n"
       << "plot x title 'ideal' with lines lc rgb 'gray', \\\n"
       << "     'speedup.dat' using 1:2 title 'model' with lines dashtype 2 lw 2";
    if (!measured.empty()) {
        gp << ", \\\n     'measured.dat' using 1:2 title 'measured' with points pt 7";
    }
    gp << "\nset ylabel 'parallel efficiency'\n"
       << "set yrange [0:1.1]\n"
       << "plot 'efficiency.dat' using 1:2 title 'model' with lines dashtype 2 lw 2";
    if (!measured.empty()) {
        gp << ", \\\n     'measured.dat' using 1:3 title 'measured' with points pt 7";
    }
    gp << "\nunset multiplot\n";
}

int cli_main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(std::move(args));
}

int cli_main(std::vector<std::string> args)
{
    CLI::App app{"Lattice Boltzmann D2Q37/D2Q9 performance toolkit", "lbmtool"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", overrides.out, "output directory");
        sub->add_option("--variant", overrides.variant, "propagate variant v1|v2");
        sub->add_option("--mode", overrides.mode, "serial|overlap");
        sub->add_option("--ranks", overrides.ranks, "number of ranks");
        sub->add_option("--reps", overrides.reps, "benchmark repetitions");
    };
    auto* run_cmd = app.add_subcommand("run", "run a simulation");
    add_run_flags(run_cmd);
    auto* bench_cmd = app.add_subcommand("bench", "benchmark kernels and step modes");
    add_run_flags(bench_cmd);

    std::vector<std::string> csv_paths;
    std::string fit_out = "out";
    auto* fit_cmd = app.add_subcommand("fit", "fit the scaling model to timing CSVs");
    fit_cmd->add_option("csv", csv_paths, "timing CSV files")->required();
    fit_cmd->add_option("--out", fit_out, "output directory");

    std::string params_path;
    std::string measured_path;
    std::string predict_out = "out";
    double lx = 0.0;
    double ly = 0.0;
    int n_min = 1;
    int n_max = 8;
    auto* predict_cmd = app.add_subcommand("predict", "predict strong-scaling speedup");
    predict_cmd->add_option("--params", params_path, "params JSON")->required();
    predict_cmd->add_option("--lx", lx, "global lattice width")->required();
    predict_cmd->add_option("--ly", ly, "lattice height")->required();
    predict_cmd->add_option("--n-min", n_min, "smallest rank count");
    predict_cmd->add_option("--n-max", n_max, "largest rank count");
    predict_cmd->add_option("--measured", measured_path, "CSV of measured (n, speedup)");
    predict_cmd->add_option("--out", predict_out, "output directory");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (run_cmd->parsed()) {
            cmd_run(resolve_config(config_path, overrides));
        } else if (bench_cmd->parsed()) {
            cmd_bench(resolve_config(config_path, overrides));
        } else if (fit_cmd->parsed()) {
            cmd_fit(csv_paths, fit_out);
        } else if (predict_cmd->parsed()) {
            cmd_predict(params_path, lx, ly, n_min, n_max, measured_path, predict_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalBlowup& e) {
        std::cerr << "numerical blow-up: " << e.what() << '\n';
        return kExitBlowup;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}

} // namespace lbm
