#include "lbm/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace lbm {

void CollisionParams::validate() const
{
    if (!(tau > 0.0) || !(dt > 0.0)) {
        throw std::invalid_argument("collision parameters require tau > 0 and dt > 0");
    }
    const double ratio = dt / tau;
    if (!(ratio > 0.0 && ratio <= 2.0)) {
        throw std::invalid_argument("dt/tau = " + std::to_string(ratio) + " outside the stable range (0, 2]");
    }
}

MacroReading macroscopic(std::span<const double> f, const VelocitySet& vs)
{
    const int q = vs.q();
    double rho = 0.0;
    double jx = 0.0;
    double jy = 0.0;
    for (int l = 0; l < q; ++l) {
        const double fl = f[static_cast<std::size_t>(l)];
        rho += fl;
        jx += vs[l].x * fl;
        jy += vs[l].y * fl;
    }
    MacroReading out;
    out.state.rho = rho;
    out.state.ux = jx / rho;
    out.state.uy = jy / rho;
    double e = 0.0;
    for (int l = 0; l < q; ++l) {
        const double dx = vs[l].x - out.state.ux;
        const double dy = vs[l].y - out.state.uy;
        e += (dx * dx + dy * dy) * f[static_cast<std::size_t>(l)];
    }
    out.state.temperature = e / (2.0 * rho);
    out.physical = std::isfinite(rho) && rho > 0.0;
    return out;
}

MacroReading macroscopic(const PopulationField& field, const VelocitySet& vs, int ix, int iy)
{
    std::array<double, kMaxQ> f{};
    for (int l = 0; l < vs.q(); ++l) {
        f[static_cast<std::size_t>(l)] = field.at(l, ix, iy);
    }
    return macroscopic(std::span<const double>(f.data(), static_cast<std::size_t>(vs.q())), vs);
}

std::array<double, kHermiteCoefficients> hermite_basis(double ux, double uy, double theta)
{
    const double ux2 = ux * ux;
    const double uy2 = uy * uy;
    const double uxuy = ux * uy;
    const double u2 = ux2 + uy2;
    return {1.0,
            ux,
            uy,
            ux2,
            uxuy,
            uy2,
            theta,
            ux2 * ux,
            ux2 * uy,
            ux * uy2,
            uy2 * uy,
            theta * ux,
            theta * uy,
            theta * ux2,
            theta * uxuy,
            theta * uy2,
            theta * theta,
            u2 * u2};
}

std::vector<double> maxwellian_shell_weights(const VelocitySet& vs)
{
    std::vector<double> w(static_cast<std::size_t>(vs.q()));
    double z = 0.0;
    for (int l = 0; l < vs.q(); ++l) {
        const double c2 = vs[l].x * vs[l].x + vs[l].y * vs[l].y;
        w[static_cast<std::size_t>(l)] = std::exp(-0.5 * c2);
        z += w[static_cast<std::size_t>(l)];
    }
    for (auto& x : w) {
        x /= z;
    }
    return w;
}

namespace {

std::vector<double> standard_weights(const VelocitySet& vs)
{
    if (vs.model == Model::D2Q9) {
        std::vector<double> w;
        for (const auto& c : vs.velocities) {
            const int c2 = c.x * c.x + c.y * c.y;
            w.push_back(c2 == 0 ? 4.0 / 9.0 : (c2 == 1 ? 1.0 / 9.0 : 1.0 / 36.0));
        }
        return w;
    }
    return maxwellian_shell_weights(vs);
}

double second_moment(const VelocitySet& vs, std::span<const double> w)
{
    double s = 0.0;
    for (int l = 0; l < vs.q(); ++l) {
        s += w[static_cast<std::size_t>(l)] * vs[l].x * vs[l].x;
    }
    return s;
}

void validate_weights(std::span<const double> w)
{
    double sum = 0.0;
    for (double x : w) {
        if (!(x > 0.0)) {
            throw std::invalid_argument("equilibrium weights must be positive");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("equilibrium weights must sum to 1");
    }
}

} // namespace

EquilibriumModel::EquilibriumModel(EquilibriumKind kind, const VelocitySet& vs)
    : kind_(kind), velocities_(vs.velocities)
{
}

EquilibriumModel EquilibriumModel::polynomial2(const VelocitySet& vs)
{
    EquilibriumModel m(EquilibriumKind::Polynomial2, vs);
    m.weights_ = standard_weights(vs);
    m.cs2_ = second_moment(vs, m.weights_);
    return m;
}

EquilibriumModel EquilibriumModel::synthetic_hermite(const VelocitySet& vs)
{
    EquilibriumModel m(EquilibriumKind::HermiteTable, vs);
    m.weights_ = standard_weights(vs);
    m.cs2_ = second_moment(vs, m.weights_);
    const double cs2 = m.cs2_;
    const double cs4 = cs2 * cs2;
    m.coefficients_.assign(static_cast<std::size_t>(vs.q()) * kHermiteCoefficients, 0.0);
    // Scale of the temperature column so that T is reproduced at rest.
    double thermal_norm = 0.0;
    for (int l = 0; l < vs.q(); ++l) {
        const double c2 = vs[l].x * vs[l].x + vs[l].y * vs[l].y;
        thermal_norm += m.weights_[static_cast<std::size_t>(l)] * (c2 / (2.0 * cs2) - 1.0) * c2;
    }
    for (int l = 0; l < vs.q(); ++l) {
        const double w = m.weights_[static_cast<std::size_t>(l)];
        const double cx = vs[l].x;
        const double cy = vs[l].y;
        double* a = m.coefficients_.data() + static_cast<std::size_t>(l) * kHermiteCoefficients;
        a[0] = w;
        a[1] = w * cx / cs2;
        a[2] = w * cy / cs2;
        a[3] = w * (cx * cx / (2.0 * cs4) - 1.0 / (2.0 * cs2));
        a[4] = w * cx * cy / cs4;
        a[5] = w * (cy * cy / (2.0 * cs4) - 1.0 / (2.0 * cs2));
        // mass- and momentum-neutral
        a[6] = 2.0 * w * ((cx * cx + cy * cy) / (2.0 * cs2) - 1.0) / thermal_norm;
    }
    return m;
}

EquilibriumModel EquilibriumModel::load_hermite(std::istream& in, const VelocitySet& vs)
{
    std::string header;
    if (!std::getline(in, header)) {
        throw std::invalid_argument("coefficient file: missing header line");
    }
    int q = -1;
    int ncoef = -1;
    if (std::sscanf(header.c_str(), "Q=%d COEFFS=%d", &q, &ncoef) != 2) {
        throw std::invalid_argument("coefficient file: malformed header '" + header + "'");
    }
    if (q != vs.q()) {
        throw std::invalid_argument("coefficient file: Q=" + std::to_string(q) + " does not match velocity set Q=" +
                                    std::to_string(vs.q()));
    }
    if (ncoef != kHermiteCoefficients) {
        throw std::invalid_argument("coefficient file: expected COEFFS=18, got " + std::to_string(ncoef));
    }
    EquilibriumModel m(EquilibriumKind::HermiteTable, vs);
    m.coefficients_.reserve(static_cast<std::size_t>(q) * kHermiteCoefficients);
    std::string line;
    for (int l = 0; l < q; ++l) {
        if (!std::getline(in, line)) {
            throw std::invalid_argument("coefficient file: expected " + std::to_string(q) + " rows, got " +
                                        std::to_string(l));
        }
        std::istringstream row(line);
        double v = 0.0;
        int count = 0;
        while (row >> v) {
            m.coefficients_.push_back(v);
            ++count;
        }
        if (count != kHermiteCoefficients || !row.eof()) {
            throw std::invalid_argument("coefficient file: row " + std::to_string(l + 1) + " must hold 18 numbers");
        }
    }
    for (int l = 0; l < q; ++l) {
        m.weights_.push_back(m.coefficients_[static_cast<std::size_t>(l) * kHermiteCoefficients]);
    }
    validate_weights(m.weights_);
    m.cs2_ = second_moment(vs, m.weights_);
    return m;
}

EquilibriumModel EquilibriumModel::load_hermite(const std::filesystem::path& path, const VelocitySet& vs)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open coefficient file " + path.string());
    }
    return load_hermite(in, vs);
}

void EquilibriumModel::write_hermite(std::ostream& out) const
{
    if (kind_ != EquilibriumKind::HermiteTable) {
        throw std::logic_error("only HermiteTable equilibria have a coefficient table");
    }
    out << "Q=" << q() << " COEFFS=" << kHermiteCoefficients << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int l = 0; l < q(); ++l) {
        for (int k = 0; k < kHermiteCoefficients; ++k) {
            out << (k ? " " : "") << coefficients_[static_cast<std::size_t>(l) * kHermiteCoefficients + static_cast<std::size_t>(k)];
        }
        out << '\n';
    }
}

void EquilibriumModel::evaluate(const MacroState& macro, std::span<double> out) const
{
    if (out.size() != weights_.size()) {
        throw std::invalid_argument("equilibrium output size " + std::to_string(out.size()) + " does not match Q=" +
                                    std::to_string(q()));
    }
    const int nq = q();
    if (kind_ == EquilibriumKind::Polynomial2) {
        const double inv_cs2 = 1.0 / cs2_;
        const double half_inv_cs4 = 0.5 * inv_cs2 * inv_cs2;
        const double u2 = macro.ux * macro.ux + macro.uy * macro.uy;
        const double base = 1.0 - 0.5 * u2 * inv_cs2;
        for (int l = 0; l < nq; ++l) {
            const auto& c = velocities_[static_cast<std::size_t>(l)];
            const double cu = c.x * macro.ux + c.y * macro.uy;
            out[static_cast<std::size_t>(l)] =
                weights_[static_cast<std::size_t>(l)] * macro.rho * (base + cu * inv_cs2 + cu * cu * half_inv_cs4);
        }
        return;
    }
    const auto phi = hermite_basis(macro.ux, macro.uy, macro.temperature - cs2_);
    for (int l = 0; l < nq; ++l) {
        const double* a = coefficients_.data() + static_cast<std::size_t>(l) * kHermiteCoefficients;
        double s = 0.0;
        for (int k = 0; k < kHermiteCoefficients; ++k) {
            s += a[k] * phi[static_cast<std::size_t>(k)];
        }
        out[static_cast<std::size_t>(l)] = macro.rho * s;
    }
}

std::vector<double> EquilibriumModel::evaluate(const MacroState& macro) const
{
    std::vector<double> out(weights_.size());
    evaluate(macro, out);
    return out;
}

long EquilibriumModel::flops_per_evaluation() const
{
    const long nq = q();
    if (kind_ == EquilibriumKind::Polynomial2) {
        // per site: 2 constants, u2, base; per population: cu, two products, sums, scaling
        return 4 + 3 + 3 + nq * 10;
    }
    // basis: theta plus 15 products/sums; per population: 18-term dot product and rho scaling
    return 16 + nq * (2 * kHermiteCoefficients - 1 + 1);
}

std::vector<double> equilibrium(const MacroState& macro, const EquilibriumModel& model, const VelocitySet& vs)
{
    if (model.q() != vs.q()) {
        throw std::invalid_argument("equilibrium model Q=" + std::to_string(model.q()) + " does not match velocity set Q=" +
                                    std::to_string(vs.q()));
    }
    return model.evaluate(macro);
}

MomentResidual moment_residual(const MacroState& macro, const EquilibriumModel& model, const VelocitySet& vs)
{
    const auto feq = equilibrium(macro, model, vs);
    const auto m = macroscopic(feq, vs).state;
    MomentResidual r;
    r.rho = std::abs(m.rho - macro.rho) / std::abs(macro.rho);
    r.u = std::max(std::abs(m.ux - macro.ux), std::abs(m.uy - macro.uy));
    r.temperature = std::abs(m.temperature - macro.temperature);
    return r;
}

namespace {

void check_propagate_args(const PopulationField& prv, const PopulationField& nxt, const VelocitySet& vs,
                          const Region& region)
{
    if (&prv == &nxt) {
        throw std::invalid_argument("propagate requires distinct source and destination buffers");
    }
    if (prv.geometry() != nxt.geometry() || prv.q() != nxt.q() || prv.q() != vs.q()) {
        throw std::invalid_argument("propagate: field shapes do not match");
    }
    const auto& g = prv.geometry();
    if (g.hx < vs.max_reach || g.hy < vs.max_reach) {
        throw std::invalid_argument("propagate: halos narrower than the velocity reach");
    }
    if (region.x0 < g.x_begin() || region.x1 > g.x_end() || region.y0 < g.y_begin() || region.y1 > g.y_end()) {
        throw std::out_of_range("propagate: region extends beyond the physical sub-lattice");
    }
}

} // namespace

void propagate_v1(const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs, const Region& region)
{
    check_propagate_args(prv, nxt, vs, region);
    if (region.empty()) {
        return;
    }
    const std::ptrdiff_t ny = prv.geometry().ny();
    const int q = vs.q();
    std::array<std::ptrdiff_t, kMaxQ> shift{};
    for (int l = 0; l < q; ++l) {
        shift[static_cast<std::size_t>(l)] = -(vs[l].x * ny) - vs[l].y;
    }
    const double* src = prv.data().data();
    double* dst = nxt.data().data();
    const auto plane = static_cast<std::ptrdiff_t>(prv.plane_size());
    for (int ix = region.x0; ix < region.x1; ++ix) {
        for (int iy = region.y0; iy < region.y1; ++iy) {
            const std::ptrdiff_t site = ix * ny + iy;
            for (int l = 0; l < q; ++l) {
                const std::ptrdiff_t base = l * plane + site;
                dst[base] = src[base + shift[static_cast<std::size_t>(l)]];
            }
        }
    }
}

void propagate_v2(const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs, const Region& region)
{
    check_propagate_args(prv, nxt, vs, region);
    if (region.empty()) {
        return;
    }
    const std::ptrdiff_t ny = prv.geometry().ny();
    const auto plane = static_cast<std::ptrdiff_t>(prv.plane_size());
    const double* src = prv.data().data();
    double* dst = nxt.data().data();
    for (int ix = region.x0; ix < region.x1; ++ix) {
        for (int l = 0; l < vs.q(); ++l) {
            double* out = dst + l * plane + ix * ny;
            const double* in = src + l * plane + (ix - vs[l].x) * ny - vs[l].y;
            for (int iy = region.y0; iy < region.y1; ++iy) {
                out[iy] = in[iy];
            }
        }
    }
}

PropagateVariant parse_variant(std::string_view name)
{
    if (name == "v1") {
        return PropagateVariant::V1;
    }
    if (name == "v2") {
        return PropagateVariant::V2;
    }
    throw std::invalid_argument("unknown propagate variant '" + std::string(name) + "' (expected v1 or v2)");
}

std::string_view to_string(PropagateVariant v)
{
    return v == PropagateVariant::V1 ? "v1" : "v2";
}

void propagate(PropagateVariant variant, const PopulationField& prv, PopulationField& nxt, const VelocitySet& vs,
               const Region& region)
{
    if (variant == PropagateVariant::V1) {
        propagate_v1(prv, nxt, vs, region);
    } else {
        propagate_v2(prv, nxt, vs, region);
    }
}

CollideDiagnostics collide(const PopulationField& prv, PopulationField& nxt, const CollisionParams& params,
                           const EquilibriumModel& model, const VelocitySet& vs, const Region& region)
{
    if (prv.geometry() != nxt.geometry() || prv.q() != nxt.q() || prv.q() != vs.q() || model.q() != vs.q()) {
        throw std::invalid_argument("collide: field, model and velocity set shapes do not match");
    }
    const auto& g = prv.geometry();
    if (region.x0 < 0 || region.x1 > g.nx() || region.y0 < 0 || region.y1 > g.ny()) {
        throw std::out_of_range("collide: region outside the allocated grid");
    }
    const int q = vs.q();
    const auto nq = static_cast<std::size_t>(q);
    const double omega = params.dt / params.tau;
    CollideDiagnostics diag;
    std::array<double, kMaxQ> f{};
    std::array<double, kMaxQ> feq{};
    for (int ix = region.x0; ix < region.x1; ++ix) {
        for (int iy = region.y0; iy < region.y1; ++iy) {
            for (int l = 0; l < q; ++l) {
                f[static_cast<std::size_t>(l)] = prv(l, ix, iy);
            }
            const auto macro = macroscopic(std::span<const double>(f.data(), nq), vs);
            if (!macro.physical) {
                ++diag.nonphysical_sites;
            }
            model.evaluate(macro.state, std::span<double>(feq.data(), nq));
            for (int l = 0; l < q; ++l) {
                const auto k = static_cast<std::size_t>(l);
                nxt(l, ix, iy) = f[k] - omega * (f[k] - feq[k]);
            }
        }
    }
    return diag;
}

long collide_flops_per_site(const EquilibriumModel& model, const VelocitySet& vs)
{
    const long q = vs.q();
    // moments: rho, j (5 per population) + 2 divisions; temperature: 7 per population + 2
    const long moments = 5 * q + 2 + 7 * q + 2;
    const long relax = 3 * q;
    return moments + model.flops_per_evaluation() + relax;
}

Region edge_region(const LatticeGeometry& g, Edge edge, int x0, int x1)
{
    if (edge == Edge::Bottom) {
        return Region{x0, x1, g.y_begin(), g.y_begin() + g.hy};
    }
    return Region{x0, x1, g.y_end() - g.hy, g.y_end()};
}

void apply_bc(PopulationField& field, const VelocitySet& vs, const EquilibriumModel& model, const WallSpec& wall,
              const Region& region)
{
    const auto& g = field.geometry();
    if (field.q() != vs.q() || model.q() != vs.q()) {
        throw std::invalid_argument("bc: field, model and velocity set shapes do not match");
    }
    if (g.ly < 2 * g.hy) {
        throw std::invalid_argument("bc: lattice of height " + std::to_string(g.ly) + " cannot hold two wall bands of " +
                                    std::to_string(g.hy) + " rows");
    }
    if (region.x0 < g.x_begin() || region.x1 > g.x_end()) {
        throw std::out_of_range("bc: columns outside the physical sub-lattice");
    }
    const Region bottom = edge_region(g, Edge::Bottom, region.x0, region.x1);
    const Region top = edge_region(g, Edge::Top, region.x0, region.x1);
    const bool in_bottom = region.y0 >= bottom.y0 && region.y1 <= bottom.y1;
    const bool in_top = region.y0 >= top.y0 && region.y1 <= top.y1;
    if (!region.empty() && !in_bottom && !in_top) {
        throw std::out_of_range("bc: region reaches into the bulk beyond the wall rows");
    }
    const int q = vs.q();
    const auto nq = static_cast<std::size_t>(q);
    std::array<double, kMaxQ> feq{};
    for (int ix = region.x0; ix < region.x1; ++ix) {
        for (int iy = region.y0; iy < region.y1; ++iy) {
            double rho = 0.0;
            for (int l = 0; l < q; ++l) {
                rho += field(l, ix, iy);
            }
            model.evaluate(MacroState{rho, 0.0, 0.0, wall.temperature}, std::span<double>(feq.data(), nq));
            for (int l = 0; l < q; ++l) {
                field(l, ix, iy) = feq[static_cast<std::size_t>(l)];
            }
        }
    }
}

} // namespace lbm
