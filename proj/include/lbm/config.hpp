#pragma once

#include "lbm/exchange.hpp"
#include "lbm/kernels.hpp"
#include "lbm/lattice.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace lbm {

enum class ExecMode { Serial, Overlap };
ExecMode parse_mode(std::string_view name);
std::string_view to_string(ExecMode mode);

enum class VerticalBoundary {
    Periodic, // top/bottom halos wrapped every step
    Walls,    // bc kernel on the Hy rows at each horizontal edge
};

enum class InitKind { Uniform, Random };

class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(field)
    {
    }
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct MachineSpec {
    double peak_bandwidth_gbs = 288.0;
    double peak_gflops = 1430.0;
    double flops_per_site = 6500.0;
    // 0 means 2 * Q * 8 (one read and one write per population)
    double bytes_per_site_propagate = 0.0;

    friend bool operator==(const MachineSpec&, const MachineSpec&) = default;
};

// Everything a run, bench, or scaling experiment needs. Defaults for the
// physical parameters live here.
struct RunConfig {
    Model model = Model::D2Q9;
    int lx_total = 64;
    int ly = 64;
    int n_ranks = 1;
    int steps = 100;
    double tau = 0.8;
    double dt = 1.0;
    double t_wall = 1.0;
    EquilibriumKind equilibrium = EquilibriumKind::Polynomial2;
    std::string coefficients_file; // empty: synthetic table
    PropagateVariant variant = PropagateVariant::V1;
    ExecMode mode = ExecMode::Serial;
    VerticalBoundary boundary = VerticalBoundary::Periodic;
    InitKind init = InitKind::Random;
    double rho0 = 1.0;
    double perturbation = 0.01;
    std::uint64_t seed = 1;
    MachineSpec machine;
    int reps = 5;
    double exchange_delay = 0.0; // seconds injected per halo exchange
    double collide_delay = 0.0;  // seconds injected per collide call (bench perturbation)
    bool aggregate_halos = false;
    ExchangeOrdering exchange_ordering = ExchangeOrdering::Serialized;
    bool serialize_messages = false;
    bool dump_field = false;
    std::string out_dir = "out";

    [[nodiscard]] int lx_per_rank() const { return lx_total / n_ranks; }
    // Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string emit_config(const RunConfig& config);

double bytes_per_site_propagate(const MachineSpec& machine, int q);

} // namespace lbm
