#pragma once

#include "lbm/lattice.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace lbm {

// Upper bound on Q for stack buffers in per-site loops.
inline constexpr int kMaxQ = 37;

struct CollisionParams {
    double tau = 1.0;
    double dt = 1.0;

    [[nodiscard]] double omega() const { return dt / tau; }
    // Throws std::invalid_argument unless tau > 0, dt > 0 and dt/tau in (0, 2].
    void validate() const;
};

struct MacroReading {
    MacroState state;
    bool physical = true; // false when rho <= 0 or not finite
};

// Density, velocity and temperature (D = 2) of one site's populations.
MacroReading macroscopic(std::span<const double> f, const VelocitySet& vs);
MacroReading macroscopic(const PopulationField& field, const VelocitySet& vs, int ix, int iy);

enum class EquilibriumKind { Polynomial2, HermiteTable };

// Number of per-population expansion coefficients in a HermiteTable.
inline constexpr int kHermiteCoefficients = 18;

// Pluggable equilibrium f_eq(rho, u, T).
//
// Polynomial2 is the athermal second-order expansion
//   f_eq = w rho (1 + c.u/cs2 + (c.u)^2/(2 cs2^2) - u.u/(2 cs2)).
//
// HermiteTable evaluates f_eq_l = rho * sum_k a[l][k] * phi_k(ux, uy, theta),
// theta = T - cs2, over the 18 basis monomials listed by hermite_basis().
// Column 0 of the table holds the rest weights.
class EquilibriumModel {
public:
    static EquilibriumModel polynomial2(const VelocitySet& vs);
    // Synthetic table that reproduces rho and u to round-off; used when no
    // coefficient file is supplied.
    static EquilibriumModel synthetic_hermite(const VelocitySet& vs);
    static EquilibriumModel load_hermite(std::istream& in, const VelocitySet& vs);
    static EquilibriumModel load_hermite(const std::filesystem::path& path, const VelocitySet& vs);

    void write_hermite(std::ostream& out) const;

    [[nodiscard]] EquilibriumKind kind() const { return kind_; }
    [[nodiscard]] int q() const { return static_cast<int>(weights_.size()); }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }
    [[nodiscard]] double cs2() const { return cs2_; }
    [[nodiscard]] std::span<const double> coefficients() const { return coefficients_; }
    [[nodiscard]] std::size_t table_bytes() const { return coefficients_.size() * sizeof(double); }

    // Writes q() values into out. Throws std::invalid_argument on size mismatch.
    void evaluate(const MacroState& macro, std::span<double> out) const;
    [[nodiscard]] std::vector<double> evaluate(const MacroState& macro) const;

    // Arithmetic operations spent in one evaluate() call.
    [[nodiscard]] long flops_per_evaluation() const;

private:
    EquilibriumModel(EquilibriumKind kind, const VelocitySet& vs);

    EquilibriumKind kind_;
    std::vector<Velocity> velocities_;
    std::vector<double> weights_;
    std::vector<double> coefficients_; // q x 18, row per population
    double cs2_ = 0.0;
};

// Basis values phi_0..phi_17 at (ux, uy, theta).
std::array<double, kHermiteCoefficients> hermite_basis(double ux, double uy, double theta);

// Shell weights proportional to exp(-|c|^2/2), normalized to sum 1.
std::vector<double> maxwellian_shell_weights(const VelocitySet& vs);

std::vector<double> equilibrium(const MacroState& macro, const EquilibriumModel& model, const VelocitySet& vs);

// Moment residuals of f_eq against the requested state.
struct MomentResidual {
    double rho = 0.0; // relative
    double u = 0.0;   // absolute, max over components
    double temperature = 0.0;
};
MomentResidual moment_residual(const MacroState& macro, const EquilibriumModel& model, const VelocitySet& vs);

// Streaming: nxt[l, x] = prv[l, x - c_l] for every x in region. Region must be
// inside the physical sub-lattice; prv and nxt must be distinct buffers of the
// same shape. v1 walks sites (ix, iy, l); v2 walks columns (ix, l, iy).
void propagate_v1(const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs, const Region& region);
void propagate_v2(const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs, const Region& region);

enum class PropagateVariant { V1, V2 };
PropagateVariant parse_variant(std::string_view name);
std::string_view to_string(PropagateVariant v);
void propagate(PropagateVariant variant, const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs,
               const Region& region);

struct CollideDiagnostics {
    std::size_t nonphysical_sites = 0;
};

// BGK relaxation: nxt = prv - (dt/tau)(prv - f_eq(macro(prv))) per site.
CollideDiagnostics collide(const PopulationField& prv, PopulationField& nxt, const CollisionParams& params,
                           const EquilibriumModel& model, const VelocitySet& vs, const Region& region);

// Floating-point operations spent per site by collide().
long collide_flops_per_site(const EquilibriumModel& model, const VelocitySet& vs);

enum class Edge { Bottom, Top };

struct WallSpec {
    double temperature = 1.0;
};

// The Hy rows adjacent to `edge`, restricted to columns [x0, x1).
Region edge_region(const LatticeGeometry& g, Edge edge, int x0, int x1);

// Replaces populations of every site in region by f_eq(rho_local, u = 0,
// T_wall), rho_local being the site's density before replacement. The region
// must lie within one edge band of Hy rows.
void apply_bc(PopulationField& field, const VelocitySet& vs, const EquilibriumModel& model, const WallSpec& wall,
              const Region& region);

} // namespace lbm
