#include "lbm/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <bit>
#include <cassert>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace lbm {

std::string_view to_string(TaskKind kind)
{
    switch (kind) {
    case TaskKind::Propagate:
        return "propagate";
    case TaskKind::Bc:
        return "bc";
    case TaskKind::Collide:
        return "collide";
    case TaskKind::Exchange:
        return "exchange";
    }
    return "?";
}

std::string_view to_string(RegionKind kind)
{
    switch (kind) {
    case RegionKind::Bulk:
        return "bulk";
    case RegionKind::BorderL:
        return "borderL";
    case RegionKind::BorderR:
        return "borderR";
    case RegionKind::Halo:
        return "halo";
    }
    return "?";
}

bool StepPlan::depends_on(int task, int prerequisite) const
{
    std::vector<int> frontier{task};
    std::vector<bool> seen(tasks.size(), false);
    while (!frontier.empty()) {
        const int t = frontier.back();
        frontier.pop_back();
        for (const auto& [before, after] : edges) {
            if (after == t && !seen[static_cast<std::size_t>(before)]) {
                if (before == prerequisite) {
                    return true;
                }
                seen[static_cast<std::size_t>(before)] = true;
                frontier.push_back(before);
            }
        }
    }
    return false;
}

StepPlan plan_step(const LatticeGeometry& geometry, const RankTopology& topology)
{
    (void)topology;
    const int hx = geometry.hx;
    const int lx = geometry.lx;
    if (lx < hx) {
        throw GeometryError("sub-lattice narrower than the halo width");
    }
    StepPlan plan;
    plan.border_width = hx;
    const int x_begin = geometry.x_begin();
    const int x_end = geometry.x_end();
    int left_end = x_begin + hx;
    int right_begin = x_end - hx;
    if (lx <= 2 * hx) {
        plan.degenerate = true;
        left_end = x_begin + std::min(hx, lx);
        right_begin = left_end;
    }
    plan.bulk_columns = std::max(0, right_begin - left_end);

    auto add_chain = [&](RegionKind region, int queue, int x0, int x1) {
        const int first = static_cast<int>(plan.tasks.size());
        for (TaskKind kind : {TaskKind::Propagate, TaskKind::Bc, TaskKind::Collide}) {
            plan.tasks.push_back(PlannedTask{kind, region, queue, x0, x1});
        }
        plan.edges.emplace_back(first, first + 1);
        plan.edges.emplace_back(first + 1, first + 2);
        return first;
    };
    add_chain(RegionKind::Bulk, kBulkQueue, left_end, std::max(left_end, right_begin));
    plan.exchange_task = static_cast<int>(plan.tasks.size());
    plan.tasks.push_back(PlannedTask{TaskKind::Exchange, RegionKind::Halo, kHostQueue, 0, 0});
    const int left = add_chain(RegionKind::BorderL, kBorderLQueue, x_begin, left_end);
    const int right = add_chain(RegionKind::BorderR, kBorderRQueue, right_begin, x_end);
    plan.edges.emplace_back(plan.exchange_task, left);
    plan.edges.emplace_back(plan.exchange_task, right);
    return plan;
}

Lane::Lane() : worker_([this] { loop(); }) {}

Lane::~Lane()
{
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
}

void Lane::submit(std::function<void()> task)
{
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(std::move(task));
        ++pending_;
    }
    cv_.notify_all();
}

void Lane::wait()
{
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return pending_ == 0; });
    if (error_) {
        auto e = error_;
        error_ = nullptr;
        std::rethrow_exception(e);
    }
}

void Lane::loop()
{
    for (;;) {
        std::function<void()> task;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stop_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            task = std::move(queue_.front());
            queue_.pop_front();
        }
        std::exception_ptr failure;
        try {
            task();
        } catch (...) {
            failure = std::current_exception();
        }
        {
            std::lock_guard lock(mutex_);
            if (failure && !error_) {
                error_ = std::move(failure);
            }
            failure = nullptr;
            --pending_;
        }
        cv_.notify_all();
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int kernel_index(TaskKind kind)
{
    return kind == TaskKind::Propagate ? 0 : (kind == TaskKind::Bc ? 1 : 2);
}

int region_index(RegionKind region)
{
    return region == RegionKind::Bulk ? 0 : (region == RegionKind::BorderL ? 1 : 2);
}

void run_kernel(const PlannedTask& task, RankState& state)
{
    const auto& g = state.geometry;
    if (task.x0 >= task.x1) {
        return;
    }
    const Region columns{task.x0, task.x1, g.y_begin(), g.y_end()};
    switch (task.kind) {
    case TaskKind::Propagate:
        propagate(state.variant, state.current, state.scratch, state.vs, columns);
        break;
    case TaskKind::Bc:
        if (state.boundary == VerticalBoundary::Walls) {
            apply_bc(state.scratch, state.vs, *state.model, state.wall, edge_region(g, Edge::Bottom, task.x0, task.x1));
            apply_bc(state.scratch, state.vs, *state.model, state.wall, edge_region(g, Edge::Top, task.x0, task.x1));
        }
        break;
    case TaskKind::Collide: {
        const auto diag = collide(state.scratch, state.scratch, state.collision, *state.model, state.vs, columns);
        if (diag.nonphysical_sites) {
            std::atomic_ref<std::size_t>(state.nonphysical_sites).fetch_add(diag.nonphysical_sites);
        }
        if (state.collide_delay > 0.0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(state.collide_delay));
        }
        break;
    }
    case TaskKind::Exchange:
        break;
    }
}

// Runs the three kernels of one region in order and records their spans.
double run_chain(const StepPlan& plan, RegionKind region, RankState& state, StepTimings& timings,
                 std::uint64_t expected_epoch)
{
    const auto t0 = Clock::now();
    for (const auto& task : plan.tasks) {
        if (task.region != region) {
            continue;
        }
        if (region != RegionKind::Bulk) {
            assert(state.halo_epoch == expected_epoch && "border kernel would read stale halos");
        }
        (void)expected_epoch;
        const auto tk = Clock::now();
        run_kernel(task, state);
        timings.kernel[static_cast<std::size_t>(kernel_index(task.kind))][static_cast<std::size_t>(region_index(region))] =
            seconds_since(tk);
    }
    return seconds_since(t0);
}

// Fills the y-halos read by every propagate and the corners the exchange ships.
double wrap_vertical(RankState& state)
{
    const auto t0 = Clock::now();
    if (state.boundary == VerticalBoundary::Periodic) {
        vertical_halo_wrap(state.current);
    }
    return seconds_since(t0);
}

double run_exchange(RankState& state, RingTransport& transport)
{
    const auto t0 = Clock::now();
    exchange_halos(state.current, state.topology, transport, state.exchange);
    ++state.halo_epoch;
    return seconds_since(t0);
}

} // namespace

StepTimings StepExecutor::execute(const StepPlan& plan, ExecMode mode, RankState& state, RingTransport& transport)
{
    StepTimings t;
    const std::uint64_t epoch = state.halo_epoch + 1;
    const auto t0 = Clock::now();
    const double t_wrap = wrap_vertical(state);
    if (mode == ExecMode::Serial) {
        t.t_exchange = run_exchange(state, transport);
        t.t_bulk = run_chain(plan, RegionKind::Bulk, state, t, epoch);
        t.t_border_left = run_chain(plan, RegionKind::BorderL, state, t, epoch);
        t.t_border_right = run_chain(plan, RegionKind::BorderR, state, t, epoch);
    } else {
        bulk_.submit([&] { t.t_bulk = run_chain(plan, RegionKind::Bulk, state, t, epoch); });
        try {
            t.t_exchange = run_exchange(state, transport);
        } catch (...) {
            bulk_.wait();
            throw;
        }
        left_.submit([&] { t.t_border_left = run_chain(plan, RegionKind::BorderL, state, t, epoch); });
        right_.submit([&] { t.t_border_right = run_chain(plan, RegionKind::BorderR, state, t, epoch); });
        bulk_.wait();
        left_.wait();
        right_.wait();
    }
    t.t_exchange += t_wrap;
    std::swap(state.current, state.scratch);
    t.t_wall = seconds_since(t0);
    return t;
}

StepTimings execute_step(const StepPlan& plan, ExecMode mode, RankState& state, RingTransport& transport)
{
    StepExecutor executor;
    return executor.execute(plan, mode, state, transport);
}

EquilibriumModel make_equilibrium(const RunConfig& config, const VelocitySet& vs)
{
    if (config.equilibrium == EquilibriumKind::Polynomial2) {
        return EquilibriumModel::polynomial2(vs);
    }
    if (config.coefficients_file.empty()) {
        return EquilibriumModel::synthetic_hermite(vs);
    }
    return EquilibriumModel::load_hermite(std::filesystem::path(config.coefficients_file), vs);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Uniform in [-1, 1), a pure function of (seed, gx, gy, k).
double site_noise(std::uint64_t seed, int gx, int gy, int k)
{
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(gx)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(gy)) << 20));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(k) << 40));
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
}

} // namespace

PopulationField initial_field(const RunConfig& config, const VelocitySet& vs, const EquilibriumModel& model,
                              const LatticeGeometry& geometry, int global_x0)
{
    PopulationField field = allocate_field(geometry, vs.q());
    const int q = vs.q();
    const auto rest = model.evaluate(MacroState{config.rho0, 0.0, 0.0, config.t_wall});
    for (int l = 0; l < q; ++l) {
        std::fill_n(field.plane(l), field.plane_size(), rest[static_cast<std::size_t>(l)]);
    }
    if (config.init == InitKind::Uniform) {
        return field;
    }
    const double p = config.perturbation;
    std::vector<double> feq(static_cast<std::size_t>(q));
    for (int ix = geometry.x_begin(); ix < geometry.x_end(); ++ix) {
        const int gx = global_x0 + ix - geometry.x_begin();
        for (int iy = geometry.y_begin(); iy < geometry.y_end(); ++iy) {
            const int gy = iy - geometry.y_begin();
            const MacroState macro{config.rho0 * (1.0 + p * site_noise(config.seed, gx, gy, 0)),
                                   p * site_noise(config.seed, gx, gy, 1), p * site_noise(config.seed, gx, gy, 2),
                                   config.t_wall * (1.0 + p * site_noise(config.seed, gx, gy, 3))};
            model.evaluate(macro, feq);
            for (int l = 0; l < q; ++l) {
                field(l, ix, iy) = feq[static_cast<std::size_t>(l)] * (1.0 + p * site_noise(config.seed, gx, gy, 4 + l));
            }
        }
    }
    return field;
}

namespace {

struct LocalSums {
    double mass = 0.0;
    double jx = 0.0;
    double jy = 0.0;
};

LocalSums local_sums(const PopulationField& field, const VelocitySet& vs)
{
    const auto& g = field.geometry();
    LocalSums s;
    for (int ix = g.x_begin(); ix < g.x_end(); ++ix) {
        for (int iy = g.y_begin(); iy < g.y_end(); ++iy) {
            double rho = 0.0;
            double jx = 0.0;
            double jy = 0.0;
            for (int l = 0; l < vs.q(); ++l) {
                const double f = field(l, ix, iy);
                rho += f;
                jx += vs[l].x * f;
                jy += vs[l].y * f;
            }
            s.mass += rho;
            s.jx += jx;
            s.jy += jy;
        }
    }
    return s;
}

StepTimings max_over(const std::vector<std::vector<StepTimings>>& per_rank, std::size_t step)
{
    StepTimings m;
    for (const auto& rank : per_rank) {
        const auto& t = rank[step];
        m.t_bulk = std::max(m.t_bulk, t.t_bulk);
        m.t_border_left = std::max(m.t_border_left, t.t_border_left);
        m.t_border_right = std::max(m.t_border_right, t.t_border_right);
        m.t_exchange = std::max(m.t_exchange, t.t_exchange);
        m.t_wall = std::max(m.t_wall, t.t_wall);
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t r = 0; r < 3; ++r) {
                m.kernel[k][r] = std::max(m.kernel[k][r], t.kernel[k][r]);
            }
        }
    }
    return m;
}

} // namespace

RunResult run(const RunConfig& config)
{
    config.validate();
    const VelocitySet vs = build_velocity_set(config.model);
    const EquilibriumModel model = make_equilibrium(config, vs);
    const int n = config.n_ranks;
    const int lx = config.lx_per_rank();
    const LatticeGeometry geometry = make_geometry(lx, config.ly, vs);

    RingTransport transport(n, vs.q(), config.serialize_messages);
    transport.set_injected_delay(
        std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(config.exchange_delay)));

    std::vector<RankState> states(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        auto& s = states[static_cast<std::size_t>(r)];
        s.vs = vs;
        s.geometry = geometry;
        s.topology = make_topology(n, r);
        s.current = initial_field(config, vs, model, geometry, r * lx);
        s.scratch = s.current;
        s.model = &model;
        s.collision = CollisionParams{config.tau, config.dt};
        s.wall = WallSpec{config.t_wall};
        s.boundary = config.boundary;
        s.variant = config.variant;
        s.exchange = ExchangeOptions{config.aggregate_halos, config.exchange_ordering};
        s.collide_delay = config.collide_delay;
    }
    const StepPlan plan = plan_step(geometry, states.front().topology);

    RunResult result;
    result.rank_timings.assign(static_cast<std::size_t>(n), {});
    std::vector<LocalSums> sums(static_cast<std::size_t>(n));
    double initial_mass = 0.0;
    int halt_step = -1;

    auto reduce = [&](int step) {
        LocalSums total;
        for (const auto& s : sums) {
            total.mass += s.mass;
            total.jx += s.jx;
            total.jy += s.jy;
        }
        if (step == 0) {
            initial_mass = total.mass;
        }
        result.monitor.push_back(MonitorSample{step, total.mass, total.jx, total.jy,
                                               (total.mass - initial_mass) / initial_mass});
        if (!std::isfinite(total.mass) || !std::isfinite(total.jx) || !std::isfinite(total.jy)) {
            halt_step = step;
        }
    };

    for (int r = 0; r < n; ++r) {
        sums[static_cast<std::size_t>(r)] = local_sums(states[static_cast<std::size_t>(r)].current, vs);
    }
    reduce(0);

    int completed = 0;
    auto rank_loop = [&](int r, auto&& sync) {
        auto& state = states[static_cast<std::size_t>(r)];
        auto& log = result.rank_timings[static_cast<std::size_t>(r)];
        StepExecutor executor;
        for (int step = 1; step <= config.steps; ++step) {
            log.push_back(executor.execute(plan, config.mode, state, transport));
            sums[static_cast<std::size_t>(r)] = local_sums(state.current, vs);
            sync(step);
            if (halt_step >= 0) {
                return;
            }
        }
    };

    if (n == 1) {
        rank_loop(0, [&](int step) {
            reduce(step);
            completed = step;
        });
    } else {
        int barrier_step = 0;
        std::barrier sync_point(n, [&]() noexcept {
            ++barrier_step;
            reduce(barrier_step);
            completed = barrier_step;
        });
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
        {
            std::vector<std::jthread> threads;
            for (int r = 0; r < n; ++r) {
                threads.emplace_back([&, r] {
                    try {
                        rank_loop(r, [&](int) { sync_point.arrive_and_wait(); });
                    } catch (...) {
                        errors[static_cast<std::size_t>(r)] = std::current_exception();
                        sync_point.arrive_and_drop();
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    for (auto& s : states) {
        result.nonphysical_sites += s.nonphysical_sites;
    }
    if (halt_step >= 0) {
        throw NumericalBlowup(halt_step, "non-finite conserved quantity detected at step " + std::to_string(halt_step));
    }
    for (int step = 0; step < completed; ++step) {
        result.timings.push_back(max_over(result.rank_timings, static_cast<std::size_t>(step)));
    }

    const LatticeGeometry global = make_geometry(config.lx_total, config.ly, vs);
    result.field = allocate_field(global, vs.q());
    for (int r = 0; r < n; ++r) {
        const auto& local = states[static_cast<std::size_t>(r)].current;
        for (int l = 0; l < vs.q(); ++l) {
            for (int ix = geometry.x_begin(); ix < geometry.x_end(); ++ix) {
                const int gx = global.x_begin() + r * lx + (ix - geometry.x_begin());
                for (int iy = geometry.y_begin(); iy < geometry.y_end(); ++iy) {
                    result.field(l, gx, iy) = local(l, ix, iy);
                }
            }
        }
    }
    return result;
}

void write_timing_csv(std::ostream& out, const std::vector<StepTimings>& timings, const RunConfig& config)
{
    out << "# lx=" << config.lx_total << " ly=" << config.ly << " n_ranks=" << config.n_ranks
        << " model=" << to_string(config.model) << " mode=" << to_string(config.mode)
        << " variant=" << to_string(config.variant) << '\n';
    out << "step,t_bulk,t_borderL,t_borderR,t_exchange,t_wall\n";
    out << std::fixed << std::setprecision(9);
    for (std::size_t i = 0; i < timings.size(); ++i) {
        const auto& t = timings[i];
        out << (i + 1) << ',' << t.t_bulk << ',' << t.t_border_left << ',' << t.t_border_right << ',' << t.t_exchange
            << ',' << t.t_wall << '\n';
    }
}

void write_monitor_csv(std::ostream& out, const std::vector<MonitorSample>& monitor)
{
    out << "step,mass,momentum_x,momentum_y,mass_drift\n";
    out << std::setprecision(17);
    for (const auto& m : monitor) {
        out << m.step << ',' << m.mass << ',' << m.momentum_x << ',' << m.momentum_y << ',' << m.mass_drift << '\n';
    }
}

void write_field_dump(std::ostream& out, const PopulationField& field)
{
    out << "LBFIELD " << field.q() << ' ' << field.geometry().nx() << ' ' << field.geometry().ny() << '\n';
    std::vector<char> bytes;
    bytes.reserve(field.size() * sizeof(double));
    for (double v : field.data()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) {
            bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
        }
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PopulationField read_field_dump(std::istream& in)
{
    std::string header;
    if (!std::getline(in, header)) {
        throw std::runtime_error("field dump: missing header");
    }
    std::istringstream hs(header);
    std::string magic;
    int q = 0;
    int nx = 0;
    int ny = 0;
    if (!(hs >> magic >> q >> nx >> ny) || magic != "LBFIELD" || q <= 0 || nx <= 0 || ny <= 0) {
        throw std::runtime_error("field dump: malformed header '" + header + "'");
    }
    // Halo widths are not recorded; the dump is returned as a halo-free grid.
    PopulationField field(LatticeGeometry{nx, ny, 0, 0}, q, 0.0);
    std::vector<char> bytes(field.size() * sizeof(double));
    if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
        throw std::runtime_error("field dump: truncated payload");
    }
    auto data = field.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)]))
                    << (8 * b);
        }
        data[i] = std::bit_cast<double>(bits);
    }
    return field;
}

} // namespace lbm
