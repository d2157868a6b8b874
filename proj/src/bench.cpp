#include "lbm/bench.hpp"

#include "lbm/perfmodel.hpp"
#include "lbm/scheduler.hpp"

#include <json.hpp>

#include <chrono>
#include <iomanip>
#include <ostream>
#include <thread>

namespace lbm {

namespace {

template <typename F>
std::vector<double> time_reps(int reps, F&& body)
{
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return times;
}

} // namespace

BenchReport run_bench(const RunConfig& config)
{
    config.validate();
    if (config.reps < 5) {
        throw ConfigError("reps", "bench needs at least 5 repetitions");
    }
    BenchReport report;
    report.config = config;
    const VelocitySet vs = build_velocity_set(config.model);
    const EquilibriumModel model = make_equilibrium(config, vs);
    const MachineSpec& machine = config.machine;
    report.bytes_per_site = bytes_per_site_propagate(machine, vs.q());
    report.counted_collide_flops_per_site = collide_flops_per_site(model, vs);

    const LatticeGeometry geometry = make_geometry(config.lx_total, config.ly, vs);
    const Region physical = physical_region(geometry);
    const double sites = static_cast<double>(physical.sites());
    PopulationField prv = initial_field(config, vs, model, geometry, 0);
    PopulationField nxt = prv;

    for (auto variant : {PropagateVariant::V1, PropagateVariant::V2}) {
        KernelBench k;
        k.kernel = "propagate";
        k.variant = std::string(to_string(variant));
        k.sites = sites;
        k.times = time_reps(config.reps, [&] { propagate(variant, prv, nxt, vs, physical); });
        k.median_s = perf::median(k.times);
        k.bandwidth_gbs = perf::effective_bandwidth(sites, k.median_s, report.bytes_per_site);
        k.efficiency_p = perf::efficiency_p(k.bandwidth_gbs, machine.peak_bandwidth_gbs);
        k.mlups = perf::mlups(sites, k.median_s);
        report.kernels.push_back(k);
    }
    {
        KernelBench k;
        k.kernel = "bc";
        k.variant = "-";
        const WallSpec wall{config.t_wall};
        const Region bottom = edge_region(geometry, Edge::Bottom, physical.x0, physical.x1);
        const Region top = edge_region(geometry, Edge::Top, physical.x0, physical.x1);
        k.sites = static_cast<double>(bottom.sites() + top.sites());
        k.times = time_reps(config.reps, [&] {
            apply_bc(nxt, vs, model, wall, bottom);
            apply_bc(nxt, vs, model, wall, top);
        });
        k.median_s = perf::median(k.times);
        k.mlups = perf::mlups(k.sites, k.median_s);
        report.kernels.push_back(k);
    }
    {
        KernelBench k;
        k.kernel = "collide";
        k.variant = "-";
        k.sites = sites;
        const CollisionParams params{config.tau, config.dt};
        k.times = time_reps(config.reps, [&] {
            collide(nxt, prv, params, model, vs, physical);
            if (config.collide_delay > 0.0) {
                std::this_thread::sleep_for(std::chrono::duration<double>(config.collide_delay));
            }
        });
        k.median_s = perf::median(k.times);
        k.mlups = perf::mlups(sites, k.median_s);
        k.efficiency_c = perf::efficiency_c(k.mlups, machine.flops_per_site, machine.peak_gflops);
        report.kernels.push_back(k);
    }

    const double global_sites = static_cast<double>(config.lx_total) * config.ly;
    for (auto mode : {ExecMode::Serial, ExecMode::Overlap}) {
        RunConfig c = config;
        c.mode = mode;
        c.steps = config.reps;
        const auto result = run(c);
        ModeBench m;
        m.mode = std::string(to_string(mode));
        m.sites = global_sites;
        for (const auto& t : result.timings) {
            m.wall_times.push_back(t.t_wall);
        }
        m.median_wall_s = perf::median(m.wall_times);
        m.mlups = perf::mlups(global_sites, m.median_wall_s);
        report.modes.push_back(m);
    }
    for (auto ordering : {ExchangeOrdering::Serialized, ExchangeOrdering::Pipelined}) {
        RunConfig c = config;
        c.mode = ExecMode::Serial;
        c.exchange_ordering = ordering;
        c.steps = config.reps;
        const auto result = run(c);
        OrderingBench o;
        o.ordering = std::string(to_string(ordering));
        o.n_ranks = config.n_ranks;
        for (const auto& t : result.timings) {
            o.exchange_times.push_back(t.t_exchange);
        }
        o.median_exchange_s = perf::median(o.exchange_times);
        report.orderings.push_back(o);
    }
    return report;
}

std::string bench_to_json(const BenchReport& r)
{
    using nlohmann::json;
    json doc;
    doc["config"] = json::parse(emit_config(r.config));
    doc["machine"] = {{"peak_bandwidth_gbs", r.config.machine.peak_bandwidth_gbs},
                      {"peak_gflops", r.config.machine.peak_gflops},
                      {"flops_per_site", r.config.machine.flops_per_site},
                      {"bytes_per_site_propagate", r.bytes_per_site},
                      {"counted_collide_flops_per_site", r.counted_collide_flops_per_site},
                      {"hardware_threads", std::thread::hardware_concurrency()}};
    doc["kernels"] = json::array();
    for (const auto& k : r.kernels) {
        doc["kernels"].push_back({{"kernel", k.kernel},
                                  {"variant", k.variant},
                                  {"sites", k.sites},
                                  {"times_s", k.times},
                                  {"median_s", k.median_s},
                                  {"bandwidth_gbs", k.bandwidth_gbs},
                                  {"efficiency_p", k.efficiency_p},
                                  {"mlups", k.mlups},
                                  {"efficiency_c", k.efficiency_c}});
    }
    doc["modes"] = json::array();
    for (const auto& m : r.modes) {
        doc["modes"].push_back({{"mode", m.mode},
                                {"sites", m.sites},
                                {"wall_times_s", m.wall_times},
                                {"median_wall_s", m.median_wall_s},
                                {"mlups", m.mlups}});
    }
    doc["exchange_orderings"] = json::array();
    for (const auto& o : r.orderings) {
        doc["exchange_orderings"].push_back({{"ordering", o.ordering},
                                             {"n_ranks", o.n_ranks},
                                             {"exchange_times_s", o.exchange_times},
                                             {"median_exchange_s", o.median_exchange_s}});
    }
    return doc.dump(2);
}

void bench_to_csv(std::ostream& out, const BenchReport& r)
{
    out << "kind,name,variant,sites,median_s,bandwidth_gbs,efficiency_p,mlups,efficiency_c\n";
    out << std::setprecision(9);
    for (const auto& k : r.kernels) {
        out << "kernel," << k.kernel << ',' << k.variant << ',' << k.sites << ',' << k.median_s << ','
            << k.bandwidth_gbs << ',' << k.efficiency_p << ',' << k.mlups << ',' << k.efficiency_c << '\n';
    }
    for (const auto& m : r.modes) {
        out << "step," << m.mode << ",-," << m.sites << ',' << m.median_wall_s << ",0,0," << m.mlups << ",0\n";
    }
    for (const auto& o : r.orderings) {
        out << "exchange," << o.ordering << ",-,0," << o.median_exchange_s << ",0,0,0,0\n";
    }
}

} // namespace lbm
