#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lbm {

enum class Model { D2Q37, D2Q9 };

Model parse_model(std::string_view name);
std::string_view to_string(Model model);

struct Velocity {
    int x = 0;
    int y = 0;
    friend bool operator==(const Velocity&, const Velocity&) = default;
};

// Discrete velocity set of a DnQy model. The index into `velocities` is the
// population label l used everywhere else (storage planes, halo messages).
struct VelocitySet {
    Model model = Model::D2Q9;
    std::vector<Velocity> velocities;
    int max_reach = 0;

    [[nodiscard]] int q() const { return static_cast<int>(velocities.size()); }
    [[nodiscard]] const Velocity& operator[](int l) const { return velocities[static_cast<std::size_t>(l)]; }
    // Label of -c_l.
    [[nodiscard]] int opposite(int l) const;
};

VelocitySet build_velocity_set(Model model);

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Physical sub-lattice Lx x Ly surrounded by halos of width Hx (left/right)
// and Hy (top/bottom). Allocated extents are NX = Lx + 2Hx, NY = Ly + 2Hy.
struct LatticeGeometry {
    int lx = 0;
    int ly = 0;
    int hx = 0;
    int hy = 0;

    [[nodiscard]] int nx() const { return lx + 2 * hx; }
    [[nodiscard]] int ny() const { return ly + 2 * hy; }
    [[nodiscard]] std::size_t sites() const { return static_cast<std::size_t>(nx()) * static_cast<std::size_t>(ny()); }
    [[nodiscard]] int x_begin() const { return hx; }
    [[nodiscard]] int x_end() const { return hx + lx; }
    [[nodiscard]] int y_begin() const { return hy; }
    [[nodiscard]] int y_end() const { return hy + ly; }

    friend bool operator==(const LatticeGeometry&, const LatticeGeometry&) = default;
};

// Validates extents and halo widths against the velocity set's reach.
LatticeGeometry make_geometry(int lx, int ly, const VelocitySet& vs);
LatticeGeometry make_geometry(int lx, int ly, int hx, int hy, const VelocitySet& vs);

// Default halo width: 3 for D2Q37, 1 for D2Q9.
int default_halo(Model model);

// Half-open rectangle of allocated-grid indices.
struct Region {
    int x0 = 0;
    int x1 = 0;
    int y0 = 0;
    int y1 = 0;

    [[nodiscard]] bool empty() const { return x0 >= x1 || y0 >= y1; }
    [[nodiscard]] std::size_t sites() const
    {
        return empty() ? 0 : static_cast<std::size_t>(x1 - x0) * static_cast<std::size_t>(y1 - y0);
    }
    friend bool operator==(const Region&, const Region&) = default;
};

Region physical_region(const LatticeGeometry& g);

// Linear offset of (l, ix, iy): l*NX*NY + ix*NY + iy. Throws std::out_of_range.
std::size_t site_offset(const LatticeGeometry& g, int q, int l, int ix, int iy);

// Structure-of-Arrays population storage: one contiguous NX*NY plane per
// population, each plane column-major (ix outer, iy inner).
class PopulationField {
public:
    PopulationField() = default;
    PopulationField(const LatticeGeometry& geometry, int q, double fill);

    [[nodiscard]] const LatticeGeometry& geometry() const { return geometry_; }
    [[nodiscard]] int q() const { return q_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] std::size_t plane_size() const { return geometry_.sites(); }

    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] double* plane(int l) { return data_.data() + static_cast<std::size_t>(l) * plane_size(); }
    [[nodiscard]] const double* plane(int l) const { return data_.data() + static_cast<std::size_t>(l) * plane_size(); }

    // Unchecked accessors for kernels.
    [[nodiscard]] std::size_t index(int l, int ix, int iy) const
    {
        return static_cast<std::size_t>(l) * plane_size() + static_cast<std::size_t>(ix) * static_cast<std::size_t>(geometry_.ny()) +
               static_cast<std::size_t>(iy);
    }
    double& operator()(int l, int ix, int iy) { return data_[index(l, ix, iy)]; }
    double operator()(int l, int ix, int iy) const { return data_[index(l, ix, iy)]; }

    // Bounds-checked access.
    double& at(int l, int ix, int iy) { return data_[site_offset(geometry_, q_, l, ix, iy)]; }
    [[nodiscard]] double at(int l, int ix, int iy) const { return data_[site_offset(geometry_, q_, l, ix, iy)]; }

    friend bool operator==(const PopulationField& a, const PopulationField& b)
    {
        return a.geometry_ == b.geometry_ && a.q_ == b.q_ && a.data_ == b.data_;
    }

private:
    LatticeGeometry geometry_{};
    int q_ = 0;
    std::vector<double> data_;
};

PopulationField allocate_field(const LatticeGeometry& geometry, int q, double fill = 0.0);

// Bit-level equality (distinguishes -0.0 from 0.0 and compares NaN payloads).
bool bit_identical(std::span<const double> a, std::span<const double> b);

struct MacroState {
    double rho = 0.0;
    double ux = 0.0;
    double uy = 0.0;
    double temperature = 0.0;
};

} // namespace lbm
