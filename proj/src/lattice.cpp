#include "lbm/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <set>
#include <utility>

namespace lbm {

namespace {

// Base vectors (a, b) with a >= b >= 0 whose signed permutations make up each
// set, after the rest velocity. This is the one place the l -> c_l labelling
// is defined.
constexpr std::array<std::pair<int, int>, 7> kD2Q37Shells{
    {{1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}, {3, 0}, {3, 1}}};
constexpr std::array<std::pair<int, int>, 2> kD2Q9Shells{{{1, 0}, {1, 1}}};

void append_signed_permutations(std::vector<Velocity>& out, int a, int b)
{
    const std::array<Velocity, 8> candidates{{{a, b}, {-a, b}, {a, -b}, {-a, -b}, {b, a}, {-b, a}, {b, -a}, {-b, -a}}};
    for (const auto& v : candidates) {
        if (std::find(out.begin(), out.end(), v) == out.end()) {
            out.push_back(v);
        }
    }
}

template <std::size_t N>
VelocitySet make_set(Model model, const std::array<std::pair<int, int>, N>& shells)
{
    VelocitySet vs;
    vs.model = model;
    vs.velocities.push_back({0, 0});
    for (const auto& [a, b] : shells) {
        append_signed_permutations(vs.velocities, a, b);
    }
    for (const auto& c : vs.velocities) {
        vs.max_reach = std::max({vs.max_reach, std::abs(c.x), std::abs(c.y)});
    }
    return vs;
}

} // namespace

Model parse_model(std::string_view name)
{
    if (name == "D2Q37" || name == "d2q37") {
        return Model::D2Q37;
    }
    if (name == "D2Q9" || name == "d2q9") {
        return Model::D2Q9;
    }
    throw std::invalid_argument("unknown lattice model '" + std::string(name) + "'");
}

std::string_view to_string(Model model)
{
    switch (model) {
    case Model::D2Q37:
        return "D2Q37";
    case Model::D2Q9:
        return "D2Q9";
    }
    throw std::invalid_argument("unknown lattice model");
}

int VelocitySet::opposite(int l) const
{
    const Velocity& c = (*this)[l];
    for (int k = 0; k < q(); ++k) {
        if (velocities[static_cast<std::size_t>(k)] == Velocity{-c.x, -c.y}) {
            return k;
        }
    }
    throw std::logic_error("velocity set is not symmetric");
}

VelocitySet build_velocity_set(Model model)
{
    switch (model) {
    case Model::D2Q37:
        return make_set(model, kD2Q37Shells);
    case Model::D2Q9:
        return make_set(model, kD2Q9Shells);
    }
    throw std::invalid_argument("unknown lattice model");
}

int default_halo(Model model)
{
    return model == Model::D2Q37 ? 3 : 1;
}

LatticeGeometry make_geometry(int lx, int ly, const VelocitySet& vs)
{
    const int h = default_halo(vs.model);
    return make_geometry(lx, ly, h, h, vs);
}

LatticeGeometry make_geometry(int lx, int ly, int hx, int hy, const VelocitySet& vs)
{
    if (lx <= 0 || ly <= 0) {
        throw GeometryError("lattice extents must be positive, got " + std::to_string(lx) + "x" + std::to_string(ly));
    }
    if (hx < vs.max_reach || hy < vs.max_reach) {
        throw GeometryError("halo width must be at least the velocity reach " + std::to_string(vs.max_reach));
    }
    const long long nx = static_cast<long long>(lx) + 2LL * hx;
    const long long ny = static_cast<long long>(ly) + 2LL * hy;
    if (nx > std::numeric_limits<int>::max() || ny > std::numeric_limits<int>::max()) {
        throw GeometryError("allocated extents overflow the index space");
    }
    return LatticeGeometry{lx, ly, hx, hy};
}

Region physical_region(const LatticeGeometry& g)
{
    return Region{g.x_begin(), g.x_end(), g.y_begin(), g.y_end()};
}

std::size_t site_offset(const LatticeGeometry& g, int q, int l, int ix, int iy)
{
    if (l < 0 || l >= q || ix < 0 || ix >= g.nx() || iy < 0 || iy >= g.ny()) {
        throw std::out_of_range("site (" + std::to_string(l) + ", " + std::to_string(ix) + ", " + std::to_string(iy) +
                                ") outside field of Q=" + std::to_string(q) + " NX=" + std::to_string(g.nx()) +
                                " NY=" + std::to_string(g.ny()));
    }
    return static_cast<std::size_t>(l) * g.sites() + static_cast<std::size_t>(ix) * static_cast<std::size_t>(g.ny()) +
           static_cast<std::size_t>(iy);
}

PopulationField::PopulationField(const LatticeGeometry& geometry, int q, double fill)
    : geometry_(geometry), q_(q)
{
    if (q <= 0) {
        throw GeometryError("population count must be positive");
    }
    const std::size_t plane = geometry.sites();
    if (geometry.nx() <= 0 || geometry.ny() <= 0 || plane / static_cast<std::size_t>(geometry.nx()) != static_cast<std::size_t>(geometry.ny()) ||
        plane > std::numeric_limits<std::size_t>::max() / sizeof(double) / static_cast<std::size_t>(q)) {
        throw GeometryError("field extents overflow the index space");
    }
    data_.assign(plane * static_cast<std::size_t>(q), fill);
}

PopulationField allocate_field(const LatticeGeometry& geometry, int q, double fill)
{
    return PopulationField(geometry, q, fill);
}

bool bit_identical(std::span<const double> a, std::span<const double> b)
{
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

} // namespace lbm
