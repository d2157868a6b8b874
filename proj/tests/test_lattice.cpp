#include "lbm/lattice.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace lbm;

TEST_CASE("D2Q37 velocity set")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    CHECK(vs.q() == 37);
    CHECK(vs.max_reach == 3);
    const auto has = [&](Velocity v) { return std::find(vs.velocities.begin(), vs.velocities.end(), v) != vs.velocities.end(); };
    CHECK(has({3, 0}));
    CHECK(has({3, -1}));

    // same membership as the disk |c|^2 <= 10
    auto disk = test::disk_stencil(10);
    CHECK(disk.size() == 37);
    for (const auto& c : disk) {
        CHECK(has(c));
    }

    int sum_sq = 0;
    for (const auto& c : disk) {
        sum_sq += c.x * c.x + c.y * c.y;
    }
    CHECK(sum_sq == 216);
    int impl_sum_sq = 0;
    for (const auto& c : vs.velocities) {
        impl_sum_sq += c.x * c.x + c.y * c.y;
    }
    CHECK(impl_sum_sq == 216);
}

TEST_CASE("velocity sets are symmetric with a single rest vector")
{
    for (auto model : {Model::D2Q37, Model::D2Q9}) {
        const auto vs = build_velocity_set(model);
        int zeros = 0;
        int sx = 0;
        int sy = 0;
        for (int l = 0; l < vs.q(); ++l) {
            const auto& c = vs[l];
            zeros += (c.x == 0 && c.y == 0);
            sx += c.x;
            sy += c.y;
            const int o = vs.opposite(l);
            CHECK(vs[o] == Velocity{-c.x, -c.y});
            for (int k = l + 1; k < vs.q(); ++k) {
                CHECK_FALSE(vs[k] == c);
            }
        }
        CHECK(zeros == 1);
        CHECK(sx == 0);
        CHECK(sy == 0);
    }
    const auto d2q9 = build_velocity_set(Model::D2Q9);
    CHECK(d2q9.q() == 9);
    CHECK(d2q9.max_reach == 1);
}

TEST_CASE("model names")
{
    CHECK(parse_model("D2Q37") == Model::D2Q37);
    CHECK(parse_model("d2q9") == Model::D2Q9);
    CHECK_THROWS_AS(parse_model("D3Q19"), std::invalid_argument);
    CHECK(to_string(Model::D2Q37) == "D2Q37");
}

TEST_CASE("geometry arithmetic and validation")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> ext(1, 500);
    std::uniform_int_distribution<int> halo(3, 6);
    for (int i = 0; i < 200; ++i) {
        const auto g = make_geometry(ext(rng), ext(rng), halo(rng), halo(rng), vs);
        CHECK(g.nx() == g.lx + 2 * g.hx);
        CHECK(g.ny() == g.ly + 2 * g.hy);
        const auto r = physical_region(g);
        CHECK(r.x0 == g.hx);
        CHECK(r.x1 == g.hx + g.lx);
        CHECK(r.y0 == g.hy);
        CHECK(r.y1 == g.hy + g.ly);
    }
    const auto g = make_geometry(4, 4, vs);
    CHECK(g.hx == 3);
    CHECK(g.hy == 3);
    CHECK(make_geometry(4, 4, build_velocity_set(Model::D2Q9)).hx == 1);
    CHECK_THROWS_AS(make_geometry(4, 4, 2, 3, vs), GeometryError);
    CHECK_THROWS_AS(make_geometry(0, 4, vs), GeometryError);
    CHECK_THROWS_AS(make_geometry(2147483645, 4, vs), GeometryError);
}

TEST_CASE("site_offset layout")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(4, 5, vs);
    const int nx = g.nx();
    const int ny = g.ny();
    CHECK(site_offset(g, 37, 0, 0, 0) == 0);
    CHECK(site_offset(g, 37, 1, 2, 3) == static_cast<std::size_t>(nx * ny + 2 * ny + 3));
    CHECK_THROWS_AS(site_offset(g, 37, 37, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(site_offset(g, 37, 0, nx, 0), std::out_of_range);
    CHECK_THROWS_AS(site_offset(g, 37, 0, 0, -1), std::out_of_range);
}

TEST_CASE("site_offset is a bijection matching storage-order enumeration")
{
    const auto vs = build_velocity_set(Model::D2Q9);
    // exhaustive on small geometries: rank in (l, ix, iy) lexicographic order
    for (int lx = 1; lx <= 4; ++lx) {
        for (int ly = 1; ly <= 4; ++ly) {
            const auto g = make_geometry(lx, ly, vs);
            std::size_t rank = 0;
            std::vector<bool> hit(static_cast<std::size_t>(9) * g.sites(), false);
            for (int l = 0; l < 9; ++l) {
                for (int ix = 0; ix < g.nx(); ++ix) {
                    for (int iy = 0; iy < g.ny(); ++iy) {
                        const auto off = site_offset(g, 9, l, ix, iy);
                        CHECK(off == rank);
                        CHECK_FALSE(hit[off]);
                        hit[off] = true;
                        ++rank;
                    }
                }
            }
            CHECK(std::all_of(hit.begin(), hit.end(), [](bool b) { return b; }));
        }
    }
    // inversion on random samples of a larger geometry
    const auto g = make_geometry(123, 77, build_velocity_set(Model::D2Q37));
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> ll(0, 36), xx(0, g.nx() - 1), yy(0, g.ny() - 1);
    for (int i = 0; i < 1000; ++i) {
        const int l = ll(rng), ix = xx(rng), iy = yy(rng);
        auto off = site_offset(g, 37, l, ix, iy);
        const auto plane = g.sites();
        CHECK(static_cast<int>(off / plane) == l);
        off %= plane;
        CHECK(static_cast<int>(off / static_cast<std::size_t>(g.ny())) == ix);
        CHECK(static_cast<int>(off % static_cast<std::size_t>(g.ny())) == iy);
    }
}

TEST_CASE("allocate_field")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(4, 4, vs);
    const auto zeros = allocate_field(g, 37, 0.0);
    CHECK(zeros.size() == 37u * 10u * 10u);
    CHECK(std::all_of(zeros.data().begin(), zeros.data().end(), [](double v) { return v == 0.0; }));
    const auto ones = allocate_field(g, 37, 1.0);
    CHECK(std::accumulate(ones.data().begin(), ones.data().end(), 0.0) == 3700.0);
    CHECK(bit_identical(allocate_field(g, 37, 0.25).data(), allocate_field(g, 37, 0.25).data()));
    CHECK(ones.plane(1) - ones.plane(0) == 100);
    CHECK_THROWS_AS(allocate_field(g, 0, 0.0), GeometryError);
}

TEST_CASE("bit_identical distinguishes signed zero")
{
    const std::vector<double> a{0.0, 1.0};
    const std::vector<double> b{-0.0, 1.0};
    CHECK_FALSE(bit_identical(a, b));
    CHECK(bit_identical(a, a));
}
