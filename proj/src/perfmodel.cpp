#include "lbm/perfmodel.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace lbm::perf {

double effective_bandwidth(double sites, double duration_s, double bytes_per_site)
{
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    return sites * bytes_per_site / duration_s / 1e9;
}

double efficiency_p(double bandwidth_gbs, double peak_bandwidth_gbs)
{
    return bandwidth_gbs / peak_bandwidth_gbs;
}

double mlups(double sites, double duration_s)
{
    if (!(duration_s > 0.0)) {
        throw std::invalid_argument("duration must be positive");
    }
    return sites / duration_s / 1e6;
}

double efficiency_c(double mlups_value, double flops_per_site, double peak_gflops)
{
    return mlups_value * flops_per_site / (peak_gflops * 1e3);
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("median of an empty sample");
    }
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

std::vector<double> nnls(const std::vector<std::vector<double>>& design, const std::vector<double>& rhs)
{
    const std::size_t rows = rhs.size();
    const std::size_t cols = design.empty() ? 0 : design.front().size();
    if (cols == 0 || cols > 16) {
        throw std::invalid_argument("nnls supports between 1 and 16 regressors");
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        if (design[i].size() != cols) {
            throw std::invalid_argument("ragged design matrix");
        }
        for (std::size_t j = 0; j < cols; ++j) {
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = design[i][j];
        }
        b(static_cast<Eigen::Index>(i)) = rhs[i];
    }
    // Columns scaled to unit norm so the rank test is scale-free.
    Eigen::VectorXd scale(static_cast<Eigen::Index>(cols));
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double norm = a.col(j).norm();
        scale(j) = norm > 0.0 ? norm : 1.0;
        a.col(j) /= scale(j);
    }

    std::vector<double> best(cols, 0.0);
    double best_residual = b.squaredNorm();
    const std::size_t subsets = std::size_t{1} << cols;
    for (std::size_t mask = 1; mask < subsets; ++mask) {
        std::vector<Eigen::Index> active;
        for (std::size_t j = 0; j < cols; ++j) {
            if (mask & (std::size_t{1} << j)) {
                active.push_back(static_cast<Eigen::Index>(j));
            }
        }
        Eigen::MatrixXd sub(a.rows(), static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) {
            sub.col(static_cast<Eigen::Index>(k)) = a.col(active[k]);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
        if (qr.rank() < sub.cols()) {
            continue;
        }
        const Eigen::VectorXd x = qr.solve(b);
        if ((x.array() < 0.0).any()) {
            continue;
        }
        const double residual = (sub * x - b).squaredNorm();
        if (residual < best_residual) {
            best_residual = residual;
            std::fill(best.begin(), best.end(), 0.0);
            for (std::size_t k = 0; k < active.size(); ++k) {
                best[static_cast<std::size_t>(active[k])] = x(static_cast<Eigen::Index>(k)) / scale(active[k]);
            }
        }
    }
    return best;
}

namespace {

struct Group {
    double bulk = 0.0;
    double border = 0.0;
    double exchange = 0.0;
    bool has_bulk = false;
    bool has_border = false;
    bool has_exchange = false;
};

double fit_single(const std::vector<double>& x, const std::vector<double>& y, const char* name, double& residual2)
{
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (!(sxx > 0.0)) {
        throw IdentifiabilityError(name, "its regressor is zero for every sample");
    }
    const double coef = std::max(0.0, sxy / sxx);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = coef * x[i] - y[i];
        residual2 += r * r;
    }
    return coef;
}

} // namespace

ScalingModelParams fit_model(const std::vector<KernelTimingSample>& samples)
{
    std::map<std::tuple<int, int, int>, Group> groups;
    for (const auto& s : samples) {
        if (!(s.duration >= 0.0) || !std::isfinite(s.duration)) {
            throw std::invalid_argument("timing sample with invalid duration");
        }
        if (s.repetitions < 5) {
            throw std::invalid_argument("timing samples must be medians over at least 5 repetitions");
        }
        if (s.lx <= 0 || s.ly <= 0 || s.n_ranks < 1) {
            throw std::invalid_argument("timing sample with invalid lattice or rank count");
        }
        auto& g = groups[{s.lx, s.ly, s.n_ranks}];
        switch (s.region) {
        case SampleRegion::Bulk:
            g.bulk += s.duration;
            g.has_bulk = true;
            break;
        case SampleRegion::BorderL:
        case SampleRegion::BorderR:
            g.border += s.duration;
            g.has_border = true;
            break;
        case SampleRegion::Exchange:
            g.exchange += s.duration;
            g.has_exchange = true;
            break;
        }
    }
    std::set<int> rank_counts;
    for (const auto& [key, g] : groups) {
        rank_counts.insert(std::get<2>(key));
    }
    if (rank_counts.size() < 2) {
        throw IdentifiabilityError("alpha", "samples cover fewer than two distinct rank counts");
    }

    std::vector<std::vector<double>> bulk_design;
    std::vector<double> bulk_time;
    std::vector<double> ex_x;
    std::vector<double> ex_y;
    std::vector<double> border_x;
    std::vector<double> border_y;
    for (const auto& [key, g] : groups) {
        const auto [lx, ly, n] = key;
        const double cols = static_cast<double>(lx) / n;
        if (g.has_bulk) {
            bulk_design.push_back({cols * ly, cols});
            bulk_time.push_back(g.bulk);
        }
        if (g.has_exchange) {
            ex_x.push_back(ly);
            ex_y.push_back(g.exchange);
        }
        if (g.has_border) {
            border_x.push_back(ly);
            border_y.push_back(g.border);
        }
    }
    if (bulk_design.size() < 2) {
        throw IdentifiabilityError("beta", "fewer than two bulk timing groups");
    }
    if (ex_x.empty()) {
        throw IdentifiabilityError("gamma", "no exchange timings");
    }
    if (border_x.empty()) {
        throw IdentifiabilityError("delta", "no border timings");
    }
    // alpha and beta separate only if (Lx/n) Ly and Lx/n are not proportional,
    // i.e. the samples span more than one Ly.
    {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(bulk_design.size()), 2);
        for (std::size_t i = 0; i < bulk_design.size(); ++i) {
            a(static_cast<Eigen::Index>(i), 0) = bulk_design[i][0];
            a(static_cast<Eigen::Index>(i), 1) = bulk_design[i][1];
        }
        a.col(0).normalize();
        a.col(1).normalize();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        qr.setThreshold(1e-12);
        if (qr.rank() < 2) {
            throw IdentifiabilityError("beta", "bulk regressors are collinear (all samples share one Ly)");
        }
    }

    ScalingModelParams p;
    const auto ab = nnls(bulk_design, bulk_time);
    p.alpha = ab[0];
    p.beta = ab[1];
    double residual2 = 0.0;
    for (std::size_t i = 0; i < bulk_design.size(); ++i) {
        const double r = p.alpha * bulk_design[i][0] + p.beta * bulk_design[i][1] - bulk_time[i];
        residual2 += r * r;
    }
    p.gamma = fit_single(ex_x, ex_y, "gamma", residual2);
    p.delta = fit_single(border_x, border_y, "delta", residual2);
    p.residual = std::sqrt(residual2);
    return p;
}

std::string_view to_string(Regime regime)
{
    return regime == Regime::ComputeBound ? "compute" : "communication";
}

Prediction predict_time(const ScalingModelParams& p, double lx, double ly, int n)
{
    if (n < 1) {
        throw std::invalid_argument("rank count must be at least 1");
    }
    const double compute = p.alpha * (lx / n) * ly + p.beta * (lx / n);
    const double comm = p.gamma * ly;
    Prediction out;
    out.regime = compute > comm ? Regime::ComputeBound : Regime::CommunicationBound;
    out.time = std::max(compute, comm) + p.delta * ly;
    out.crossover = comm > 0.0 ? (p.alpha * lx * ly + p.beta * lx) / comm : std::numeric_limits<double>::infinity();
    return out;
}

double predict_speedup(const ScalingModelParams& p, double lx, double ly, int n)
{
    return predict_time(p, lx, ly, 1).time / predict_time(p, lx, ly, n).time;
}

double predict_efficiency(const ScalingModelParams& p, double lx, double ly, int n)
{
    return predict_speedup(p, lx, ly, n) / n;
}

TimingCsv read_timing_csv(std::istream& in)
{
    TimingCsv csv;
    std::string line;
    bool have_meta = false;
    bool have_header = false;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string token;
            while (meta >> token) {
                const auto eq = token.find('=');
                if (eq == std::string::npos) {
                    continue;
                }
                const auto key = token.substr(0, eq);
                const auto value = token.substr(eq + 1);
                if (key == "lx") {
                    csv.lx = std::stoi(value);
                } else if (key == "ly") {
                    csv.ly = std::stoi(value);
                } else if (key == "n_ranks") {
                    csv.n_ranks = std::stoi(value);
                }
            }
            have_meta = true;
            continue;
        }
        if (!have_header) {
            if (line != "step,t_bulk,t_borderL,t_borderR,t_exchange,t_wall") {
                throw std::invalid_argument("timing CSV: unexpected header '" + line + "'");
            }
            have_header = true;
            continue;
        }
        std::istringstream fields(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(fields, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument("timing CSV: row " + std::to_string(row) + " has a non-numeric cell");
            }
        }
        if (values.size() != 6) {
            throw std::invalid_argument("timing CSV: row " + std::to_string(row) + " must have 6 columns");
        }
        csv.t_bulk.push_back(values[1]);
        csv.t_border_left.push_back(values[2]);
        csv.t_border_right.push_back(values[3]);
        csv.t_exchange.push_back(values[4]);
        csv.t_wall.push_back(values[5]);
    }
    if (!have_meta || csv.lx <= 0 || csv.ly <= 0 || csv.n_ranks < 1) {
        throw std::invalid_argument("timing CSV: missing '# lx=.. ly=.. n_ranks=..' line");
    }
    if (!have_header) {
        throw std::invalid_argument("timing CSV: missing column header");
    }
    return csv;
}

std::vector<KernelTimingSample> samples_from_csv(const TimingCsv& csv)
{
    if (csv.t_bulk.empty()) {
        return {};
    }
    const int reps = static_cast<int>(csv.t_bulk.size());
    auto sample = [&](SampleRegion region, const std::vector<double>& values) {
        return KernelTimingSample{csv.lx, csv.ly, csv.n_ranks, "all", region, median(values), reps};
    };
    return {sample(SampleRegion::Bulk, csv.t_bulk), sample(SampleRegion::BorderL, csv.t_border_left),
            sample(SampleRegion::BorderR, csv.t_border_right), sample(SampleRegion::Exchange, csv.t_exchange)};
}

std::vector<PredictionRow> predict_range(const ScalingModelParams& p, double lx, double ly, int n_min, int n_max)
{
    if (n_min < 1 || n_max < n_min) {
        throw std::invalid_argument("rank range must satisfy 1 <= n_min <= n_max");
    }
    std::vector<PredictionRow> rows;
    for (int n = n_min; n <= n_max; ++n) {
        const auto t = predict_time(p, lx, ly, n);
        const double s = predict_speedup(p, lx, ly, n);
        rows.push_back(PredictionRow{n, t.time, s, s / n, t.regime});
    }
    return rows;
}

std::string params_to_json(const ScalingModelParams& p, const std::vector<PredictionRow>& predictions)
{
    nlohmann::json doc;
    doc["alpha"] = p.alpha;
    doc["beta"] = p.beta;
    doc["gamma"] = p.gamma;
    doc["delta"] = p.delta;
    doc["residual"] = p.residual;
    doc["predictions"] = nlohmann::json::array();
    for (const auto& row : predictions) {
        doc["predictions"].push_back({{"n", row.n},
                                      {"T", row.time},
                                      {"S_r", row.speedup},
                                      {"efficiency", row.efficiency},
                                      {"regime", std::string(to_string(row.regime))}});
    }
    return doc.dump(2);
}

ScalingModelParams params_from_json(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("params: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("params: expected a JSON object");
    }
    ScalingModelParams p;
    auto field = [&](const char* key, double& out, bool required) {
        auto it = doc.find(key);
        if (it == doc.end()) {
            if (required) {
                throw std::invalid_argument(std::string("params: missing required number '") + key + "'");
            }
            return;
        }
        if (!it->is_number()) {
            throw std::invalid_argument(std::string("params: '") + key + "' must be a number");
        }
        out = it->get<double>();
        if (!(out >= 0.0) || !std::isfinite(out)) {
            throw std::invalid_argument(std::string("params: '") + key + "' must be finite and non-negative");
        }
    };
    field("alpha", p.alpha, true);
    field("beta", p.beta, true);
    field("gamma", p.gamma, true);
    field("delta", p.delta, true);
    field("residual", p.residual, false);
    return p;
}

} // namespace lbm::perf
