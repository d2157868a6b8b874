#pragma once

#include "lbm/config.hpp"
#include "lbm/exchange.hpp"
#include "lbm/kernels.hpp"
#include "lbm/lattice.hpp"

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lbm {

enum class TaskKind { Propagate, Bc, Collide, Exchange };
enum class RegionKind { Bulk, BorderL, BorderR, Halo };

std::string_view to_string(TaskKind kind);
std::string_view to_string(RegionKind kind);

// Queue 0 is the host context; 1 runs bulk kernels, 2 and 3 the borders.
inline constexpr int kHostQueue = 0;
inline constexpr int kBulkQueue = 1;
inline constexpr int kBorderLQueue = 2;
inline constexpr int kBorderRQueue = 3;

struct PlannedTask {
    TaskKind kind = TaskKind::Propagate;
    RegionKind region = RegionKind::Bulk;
    int queue = kBulkQueue;
    int x0 = 0; // allocated-grid columns [x0, x1)
    int x1 = 0;
};

struct StepPlan {
    std::vector<PlannedTask> tasks;
    // (before, after) pairs of task indices, including same-queue ordering.
    std::vector<std::pair<int, int>> edges;
    int exchange_task = -1;
    int bulk_columns = 0;
    int border_width = 0;
    bool degenerate = false; // no bulk: every kernel waits on the exchange

    [[nodiscard]] bool depends_on(int task, int prerequisite) const;
    [[nodiscard]] std::size_t kernel_count() const { return tasks.size() - (exchange_task >= 0 ? 1 : 0); }
};

StepPlan plan_step(const LatticeGeometry& geometry, const RankTopology& topology);

struct StepTimings {
    double t_bulk = 0.0;
    double t_border_left = 0.0;
    double t_border_right = 0.0;
    double t_exchange = 0.0;
    double t_wall = 0.0;
    // Per-kernel spans indexed [kernel][region] for Propagate/Bc/Collide x Bulk/BorderL/BorderR.
    std::array<std::array<double, 3>, 3> kernel{};
};

// A worker lane: tasks run in submission order on one thread.
class Lane {
public:
    Lane();
    ~Lane();
    Lane(const Lane&) = delete;
    Lane& operator=(const Lane&) = delete;

    void submit(std::function<void()> task);
    // Blocks until every submitted task has finished; rethrows the first failure.
    void wait();

private:
    void loop();

    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> queue_;
    std::size_t pending_ = 0;
    bool stop_ = false;
    std::exception_ptr error_;
    std::thread worker_;
};

// Everything one rank owns across timesteps. Populations live in `current`
// between steps. A step propagates current -> scratch, applies bc and collide
// in place on scratch, then swaps the two, so nothing writes `current` while
// border kernels and the exchange read it.
struct RankState {
    VelocitySet vs;
    LatticeGeometry geometry;
    RankTopology topology;
    PopulationField current;
    PopulationField scratch;
    const EquilibriumModel* model = nullptr;
    CollisionParams collision;
    WallSpec wall;
    VerticalBoundary boundary = VerticalBoundary::Periodic;
    PropagateVariant variant = PropagateVariant::V1;
    ExchangeOptions exchange;
    double collide_delay = 0.0;
    std::size_t nonphysical_sites = 0;
    std::uint64_t halo_epoch = 0;
};

// Per-rank executor holding the three worker lanes used in overlap mode.
class StepExecutor {
public:
    StepExecutor() = default;

    StepTimings execute(const StepPlan& plan, ExecMode mode, RankState& state, RingTransport& transport);

private:
    Lane bulk_;
    Lane left_;
    Lane right_;
};

StepTimings execute_step(const StepPlan& plan, ExecMode mode, RankState& state, RingTransport& transport);

struct MonitorSample {
    int step = 0;
    double mass = 0.0;
    double momentum_x = 0.0;
    double momentum_y = 0.0;
    double mass_drift = 0.0; // relative to step 0
};

struct RunResult {
    // Global lattice with physical sites gathered from all ranks; halos zero.
    PopulationField field;
    // Per step, each component is the maximum over ranks.
    std::vector<StepTimings> timings;
    // timings per rank, [rank][step]
    std::vector<std::vector<StepTimings>> rank_timings;
    std::vector<MonitorSample> monitor;
    std::size_t nonphysical_sites = 0;
};

class NumericalBlowup : public std::runtime_error {
public:
    NumericalBlowup(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
    [[nodiscard]] int step() const { return step_; }

private:
    int step_;
};

EquilibriumModel make_equilibrium(const RunConfig& config, const VelocitySet& vs);

// Initial populations of one rank; depends only on global site coordinates so
// every decomposition starts from the same global state.
PopulationField initial_field(const RunConfig& config, const VelocitySet& vs, const EquilibriumModel& model,
                              const LatticeGeometry& geometry, int global_x0);

// Runs config.steps timesteps on config.n_ranks in-process ranks.
// Throws NumericalBlowup when the mass monitor turns non-finite.
RunResult run(const RunConfig& config);

void write_timing_csv(std::ostream& out, const std::vector<StepTimings>& timings, const RunConfig& config);
void write_monitor_csv(std::ostream& out, const std::vector<MonitorSample>& monitor);
// "LBFIELD Q NX NY\n" followed by raw little-endian doubles in storage order.
void write_field_dump(std::ostream& out, const PopulationField& field);
PopulationField read_field_dump(std::istream& in);

} // namespace lbm
