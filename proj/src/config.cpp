#include "lbm/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace lbm {

using nlohmann::json;

ExecMode parse_mode(std::string_view name)
{
    if (name == "serial") {
        return ExecMode::Serial;
    }
    if (name == "overlap") {
        return ExecMode::Overlap;
    }
    throw std::invalid_argument("unknown mode '" + std::string(name) + "' (expected serial or overlap)");
}

std::string_view to_string(ExecMode mode)
{
    return mode == ExecMode::Serial ? "serial" : "overlap";
}

void RunConfig::validate() const
{
    if (lx_total <= 0) {
        throw ConfigError("lx", "must be positive");
    }
    if (ly <= 0) {
        throw ConfigError("ly", "must be positive");
    }
    if (n_ranks < 1) {
        throw ConfigError("n_ranks", "must be at least 1");
    }
    if (lx_total % n_ranks != 0) {
        throw ConfigError("n_ranks", "lx=" + std::to_string(lx_total) + " is not divisible by n_ranks=" +
                                         std::to_string(n_ranks));
    }
    const int halo = default_halo(model);
    if (lx_per_rank() < halo) {
        throw ConfigError("n_ranks", "each rank needs at least " + std::to_string(halo) + " columns");
    }
    if (ly < (boundary == VerticalBoundary::Walls ? 2 * halo : halo)) {
        throw ConfigError("ly", "too small for the halo/wall rows");
    }
    if (steps < 0) {
        throw ConfigError("steps", "must be non-negative");
    }
    try {
        CollisionParams{tau, dt}.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("tau", e.what());
    }
    if (!(rho0 > 0.0)) {
        throw ConfigError("rho0", "must be positive");
    }
    if (!(t_wall > 0.0)) {
        throw ConfigError("t_wall", "must be positive");
    }
    if (perturbation < 0.0 || perturbation >= 0.5) {
        throw ConfigError("perturbation", "must lie in [0, 0.5)");
    }
    if (reps < 1) {
        throw ConfigError("reps", "must be at least 1");
    }
    if (exchange_delay < 0.0) {
        throw ConfigError("exchange_delay", "must be non-negative");
    }
    if (collide_delay < 0.0) {
        throw ConfigError("collide_delay", "must be non-negative");
    }
    if (!(machine.peak_bandwidth_gbs > 0.0)) {
        throw ConfigError("peak_bandwidth_gbs", "must be positive");
    }
    if (!(machine.peak_gflops > 0.0)) {
        throw ConfigError("peak_gflops", "must be positive");
    }
    if (!(machine.flops_per_site > 0.0)) {
        throw ConfigError("flops_per_site", "must be positive");
    }
    if (machine.bytes_per_site_propagate < 0.0) {
        throw ConfigError("bytes_per_site_propagate", "must be non-negative");
    }
}

namespace {

const std::set<std::string> kKnownKeys{
    "model", "lx", "ly", "n_ranks", "steps", "tau", "dt", "t_wall", "equilibrium", "coefficients_file", "variant",
    "mode", "boundary", "init", "rho0", "perturbation", "seed", "peak_bandwidth_gbs", "peak_gflops",
    "flops_per_site", "bytes_per_site_propagate", "reps", "exchange_delay", "collide_delay", "aggregate_halos",
    "exchange_ordering", "serialize_messages", "dump_field", "out_dir"};

template <typename T>
void read(const json& doc, const char* key, T& out)
{
    auto it = doc.find(key);
    if (it == doc.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(key, "has the wrong type");
    }
}

template <typename Enum, typename Parse>
void read_enum(const json& doc, const char* key, Enum& out, Parse parse)
{
    std::string text;
    read(doc, key, text);
    if (text.empty()) {
        return;
    }
    try {
        out = parse(text);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

EquilibriumKind parse_equilibrium(std::string_view s)
{
    if (s == "polynomial2") {
        return EquilibriumKind::Polynomial2;
    }
    if (s == "hermite_table") {
        return EquilibriumKind::HermiteTable;
    }
    throw std::invalid_argument("unknown equilibrium '" + std::string(s) + "'");
}

VerticalBoundary parse_boundary(std::string_view s)
{
    if (s == "periodic") {
        return VerticalBoundary::Periodic;
    }
    if (s == "walls") {
        return VerticalBoundary::Walls;
    }
    throw std::invalid_argument("unknown boundary '" + std::string(s) + "'");
}

InitKind parse_init(std::string_view s)
{
    if (s == "uniform") {
        return InitKind::Uniform;
    }
    if (s == "random") {
        return InitKind::Random;
    }
    throw std::invalid_argument("unknown init '" + std::string(s) + "'");
}

} // namespace

RunConfig parse_config(const std::string& json_text)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("<document>", "config must be a JSON object");
    }
    for (const auto& item : doc.items()) {
        if (!kKnownKeys.contains(item.key())) {
            throw ConfigError(item.key(), "unknown key");
        }
    }
    RunConfig c;
    read_enum(doc, "model", c.model, parse_model);
    read(doc, "lx", c.lx_total);
    read(doc, "ly", c.ly);
    read(doc, "n_ranks", c.n_ranks);
    read(doc, "steps", c.steps);
    read(doc, "tau", c.tau);
    read(doc, "dt", c.dt);
    read(doc, "t_wall", c.t_wall);
    read_enum(doc, "equilibrium", c.equilibrium, parse_equilibrium);
    read(doc, "coefficients_file", c.coefficients_file);
    read_enum(doc, "variant", c.variant, parse_variant);
    read_enum(doc, "mode", c.mode, parse_mode);
    read_enum(doc, "boundary", c.boundary, parse_boundary);
    read_enum(doc, "init", c.init, parse_init);
    read(doc, "rho0", c.rho0);
    read(doc, "perturbation", c.perturbation);
    read(doc, "seed", c.seed);
    read(doc, "peak_bandwidth_gbs", c.machine.peak_bandwidth_gbs);
    read(doc, "peak_gflops", c.machine.peak_gflops);
    read(doc, "flops_per_site", c.machine.flops_per_site);
    read(doc, "bytes_per_site_propagate", c.machine.bytes_per_site_propagate);
    read(doc, "reps", c.reps);
    read(doc, "exchange_delay", c.exchange_delay);
    read(doc, "collide_delay", c.collide_delay);
    read(doc, "aggregate_halos", c.aggregate_halos);
    read_enum(doc, "exchange_ordering", c.exchange_ordering, parse_ordering);
    read(doc, "serialize_messages", c.serialize_messages);
    read(doc, "dump_field", c.dump_field);
    read(doc, "out_dir", c.out_dir);
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string emit_config(const RunConfig& c)
{
    json doc;
    doc["model"] = std::string(to_string(c.model));
    doc["lx"] = c.lx_total;
    doc["ly"] = c.ly;
    doc["n_ranks"] = c.n_ranks;
    doc["steps"] = c.steps;
    doc["tau"] = c.tau;
    doc["dt"] = c.dt;
    doc["t_wall"] = c.t_wall;
    doc["equilibrium"] = c.equilibrium == EquilibriumKind::Polynomial2 ? "polynomial2" : "hermite_table";
    doc["coefficients_file"] = c.coefficients_file;
    doc["variant"] = std::string(to_string(c.variant));
    doc["mode"] = std::string(to_string(c.mode));
    doc["boundary"] = c.boundary == VerticalBoundary::Periodic ? "periodic" : "walls";
    doc["init"] = c.init == InitKind::Uniform ? "uniform" : "random";
    doc["rho0"] = c.rho0;
    doc["perturbation"] = c.perturbation;
    doc["seed"] = c.seed;
    doc["peak_bandwidth_gbs"] = c.machine.peak_bandwidth_gbs;
    doc["peak_gflops"] = c.machine.peak_gflops;
    doc["flops_per_site"] = c.machine.flops_per_site;
    doc["bytes_per_site_propagate"] = c.machine.bytes_per_site_propagate;
    doc["reps"] = c.reps;
    doc["exchange_delay"] = c.exchange_delay;
    doc["collide_delay"] = c.collide_delay;
    doc["aggregate_halos"] = c.aggregate_halos;
    doc["exchange_ordering"] = std::string(to_string(c.exchange_ordering));
    doc["serialize_messages"] = c.serialize_messages;
    doc["dump_field"] = c.dump_field;
    doc["out_dir"] = c.out_dir;
    return doc.dump(2);
}

double bytes_per_site_propagate(const MachineSpec& machine, int q)
{
    return machine.bytes_per_site_propagate > 0.0 ? machine.bytes_per_site_propagate : 2.0 * q * 8.0;
}

} // namespace lbm
