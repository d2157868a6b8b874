#pragma once

// Test-only reference implementations. They deliberately share no code path
// with the kernels they check beyond the field accessors.

#include "lbm/kernels.hpp"
#include "lbm/lattice.hpp"

#include <random>
#include <vector>

namespace lbm::test {

// Independent enumeration of the D2Q37 stencil: every integer vector inside
// the disk |c|^2 <= 10.
inline std::vector<Velocity> disk_stencil(int radius2)
{
    std::vector<Velocity> out;
    for (int x = -4; x <= 4; ++x) {
        for (int y = -4; y <= 4; ++y) {
            if (x * x + y * y <= radius2) {
                out.push_back({x, y});
            }
        }
    }
    return out;
}

// Gather: out[l, x] = in[l, x - c_l], index by index through checked access.
inline void gather_oracle(const PopulationField& in, PopulationField& out, const VelocitySet& vs, const Region& r)
{
    for (int l = 0; l < vs.q(); ++l) {
        for (int ix = r.x0; ix < r.x1; ++ix) {
            for (int iy = r.y0; iy < r.y1; ++iy) {
                out.at(l, ix, iy) = in.at(l, ix - vs[l].x, iy - vs[l].y);
            }
        }
    }
}

inline MacroState moments_oracle(const std::vector<double>& f, const VelocitySet& vs)
{
    long double rho = 0.0L;
    long double jx = 0.0L;
    long double jy = 0.0L;
    for (std::size_t l = 0; l < f.size(); ++l) {
        rho += f[l];
        jx += static_cast<long double>(vs.velocities[l].x) * f[l];
        jy += static_cast<long double>(vs.velocities[l].y) * f[l];
    }
    const long double ux = jx / rho;
    const long double uy = jy / rho;
    long double e = 0.0L;
    for (std::size_t l = 0; l < f.size(); ++l) {
        const long double dx = vs.velocities[l].x - ux;
        const long double dy = vs.velocities[l].y - uy;
        e += (dx * dx + dy * dy) * f[l];
    }
    return MacroState{static_cast<double>(rho), static_cast<double>(ux), static_cast<double>(uy),
                      static_cast<double>(e / (2.0L * rho))};
}

inline std::vector<double> site_values(const PopulationField& f, int ix, int iy)
{
    std::vector<double> v;
    for (int l = 0; l < f.q(); ++l) {
        v.push_back(f.at(l, ix, iy));
    }
    return v;
}

// Fills every allocated value with U(lo, hi).
inline void fill_random(PopulationField& field, std::mt19937_64& rng, double lo = 0.5, double hi = 1.5)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : field.data()) {
        v = dist(rng);
    }
}

} // namespace lbm::test
