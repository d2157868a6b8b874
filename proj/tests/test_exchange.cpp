#include "lbm/exchange.hpp"
#include "lbm/kernels.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <thread>

using namespace lbm;

namespace {

// Runs exchange_halos on every rank concurrently.
void exchange_all(std::vector<PopulationField>& fields, RingTransport& transport, const ExchangeOptions& options = {})
{
    const int n = static_cast<int>(fields.size());
    std::vector<std::jthread> threads;
    for (int r = 0; r < n; ++r) {
        threads.emplace_back([&, r] { exchange_halos(fields[static_cast<std::size_t>(r)], make_topology(n, r), transport, options); });
    }
}

double physical_sum(const PopulationField& f)
{
    const auto& g = f.geometry();
    double s = 0.0;
    for (int l = 0; l < f.q(); ++l) {
        for (int ix = g.x_begin(); ix < g.x_end(); ++ix) {
            for (int iy = g.y_begin(); iy < g.y_end(); ++iy) {
                s += f.at(l, ix, iy);
            }
        }
    }
    return s;
}

} // namespace

TEST_CASE("ring topology")
{
    const auto t = make_topology(4, 0);
    CHECK(t.left() == 3);
    CHECK(t.right() == 1);
    CHECK(make_topology(4, 3).right() == 0);
    CHECK(make_topology(1, 0).left() == 0);
    CHECK_THROWS(make_topology(0, 0));
    CHECK_THROWS(make_topology(2, 2));
}

TEST_CASE("wire format")
{
    HaloMessage msg{36, Direction::ToRight, {1.5, -0.0, 3.25e-300}};
    const auto bytes = encode_message(msg);
    REQUIRE(bytes.size() == 4 + 1 + 8 + 3 * 8);
    CHECK(std::to_integer<int>(bytes[0]) == 36);
    CHECK(std::to_integer<int>(bytes[1]) == 0);
    CHECK(std::to_integer<int>(bytes[4]) == 1);
    CHECK(std::to_integer<int>(bytes[5]) == 3);
    // 1.5 = 0x3FF8000000000000, little-endian
    CHECK(std::to_integer<int>(bytes[13 + 7]) == 0x3F);
    CHECK(std::to_integer<int>(bytes[13 + 6]) == 0xF8);
    const auto back = decode_message(bytes);
    CHECK(back.population == 36);
    CHECK(back.direction == Direction::ToRight);
    CHECK(bit_identical(back.payload, msg.payload));

    // property: random messages survive encode/decode
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 50; ++i) {
        HaloMessage m{static_cast<std::uint32_t>(bits(rng) % 37), bits(rng) % 2 ? Direction::ToLeft : Direction::ToRight, {}};
        m.payload.resize(bits(rng) % 64);
        for (auto& v : m.payload) {
            v = std::bit_cast<double>(bits(rng) & 0x7FEFFFFFFFFFFFFFULL);
        }
        const auto d = decode_message(encode_message(m));
        CHECK(d.population == m.population);
        CHECK(d.direction == m.direction);
        CHECK(bit_identical(d.payload, m.payload));
    }

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_message(truncated), ProtocolError);
    auto bad_dir = bytes;
    bad_dir[4] = std::byte{7};
    CHECK_THROWS_AS(decode_message(bad_dir), ProtocolError);
    CHECK_THROWS_AS(decode_message(std::span<const std::byte>(bytes.data(), 3)), ProtocolError);
}

TEST_CASE("single rank exchange wraps around")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(7, 5, vs);
    std::mt19937_64 rng(3);
    auto f = allocate_field(g, 37);
    test::fill_random(f, rng);
    RingTransport transport(1, 37);
    const auto stats = exchange_halos(f, make_topology(1, 0), transport);
    CHECK(stats.transfers == 74);
    for (int l = 0; l < 37; ++l) {
        for (int h = 0; h < 3; ++h) {
            for (int iy = 0; iy < g.ny(); ++iy) {
                CHECK(f.at(l, h, iy) == f.at(l, g.lx + h, iy));
                CHECK(f.at(l, g.x_end() + h, iy) == f.at(l, g.hx + h, iy));
            }
        }
    }
    // idempotent for fixed physical content
    const auto once = f;
    exchange_halos(f, make_topology(1, 0), transport);
    CHECK(bit_identical(once.data(), f.data()));
}

TEST_CASE("four ranks see their neighbours' ids in the halos")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(5, 6, vs);
    const int n = 4;
    for (auto ordering : {ExchangeOrdering::Serialized, ExchangeOrdering::Pipelined}) {
        for (bool aggregate : {false, true}) {
            for (bool serialize : {false, true}) {
                std::vector<PopulationField> fields;
                for (int r = 0; r < n; ++r) {
                    fields.push_back(allocate_field(g, 37, -1.0));
                    auto& f = fields.back();
                    for (int l = 0; l < 37; ++l) {
                        for (int ix = g.x_begin(); ix < g.x_end(); ++ix) {
                            for (int iy = 0; iy < g.ny(); ++iy) {
                                f.at(l, ix, iy) = r;
                            }
                        }
                    }
                }
                RingTransport transport(n, 37, serialize);
                exchange_all(fields, transport, ExchangeOptions{aggregate, ordering});
                CHECK(transport.messages_sent() == static_cast<std::size_t>(n) * (aggregate ? 2u : 74u));
                for (int r = 0; r < n; ++r) {
                    const auto& f = fields[static_cast<std::size_t>(r)];
                    const double left = (r + n - 1) % n;
                    const double right = (r + 1) % n;
                    for (int l = 0; l < 37; ++l) {
                        for (int iy = 0; iy < g.ny(); ++iy) {
                            for (int h = 0; h < 3; ++h) {
                                CHECK(f.at(l, h, iy) == left);
                                CHECK(f.at(l, g.x_end() + h, iy) == right);
                            }
                        }
                    }
                }
            }
        }
    }
}

TEST_CASE("exchange delivers the correct columns and conserves the physical sum")
{
    const auto vs = build_velocity_set(Model::D2Q9);
    const auto g = make_geometry(4, 3, vs);
    const int n = 3;
    std::mt19937_64 rng(5);
    std::vector<PopulationField> fields;
    for (int r = 0; r < n; ++r) {
        fields.push_back(allocate_field(g, 9));
        test::fill_random(fields.back(), rng);
    }
    double before = 0.0;
    for (const auto& f : fields) {
        before += physical_sum(f);
    }
    const auto snapshot = fields;
    RingTransport transport(n, 9);
    exchange_all(fields, transport);
    double after = 0.0;
    for (const auto& f : fields) {
        after += physical_sum(f);
    }
    CHECK(before == after);
    for (int r = 0; r < n; ++r) {
        const auto& f = fields[static_cast<std::size_t>(r)];
        const auto& left = snapshot[static_cast<std::size_t>((r + n - 1) % n)];
        const auto& right = snapshot[static_cast<std::size_t>((r + 1) % n)];
        for (int l = 0; l < 9; ++l) {
            for (int iy = 0; iy < g.ny(); ++iy) {
                CHECK(f.at(l, 0, iy) == left.at(l, g.x_end() - 1, iy));
                CHECK(f.at(l, g.x_end(), iy) == right.at(l, g.x_begin(), iy));
                CHECK(f.at(l, g.x_begin(), iy) == snapshot[static_cast<std::size_t>(r)].at(l, g.x_begin(), iy));
            }
        }
    }
}

TEST_CASE("protocol errors")
{
    RingTransport transport(2, 37);
    CHECK_THROWS_AS(transport.send(0, 1, HaloMessage{37, Direction::ToLeft, {}}), ProtocolError);
    CHECK_THROWS_AS(transport.send(0, 5, HaloMessage{0, Direction::ToLeft, {}}), ProtocolError);

    // wrong payload length reaches the receiver and is rejected there
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(4, 4, vs);
    auto f = allocate_field(g, 37);
    transport.send(1, 0, HaloMessage{0, Direction::ToRight, std::vector<double>(5, 0.0)});
    CHECK_THROWS_AS(exchange_halos(f, make_topology(2, 0), transport), ProtocolError);

    RingTransport mismatch(3, 37);
    CHECK_THROWS(exchange_halos(f, make_topology(2, 0), mismatch));
    auto narrow = allocate_field(make_geometry(2, 4, vs), 37);
    RingTransport one(1, 37);
    CHECK_THROWS_AS(exchange_halos(narrow, make_topology(1, 0), one), GeometryError);
}

TEST_CASE("vertical halo wrap")
{
    const auto vs = build_velocity_set(Model::D2Q37);
    const auto g = make_geometry(4, 6, vs);
    auto f = allocate_field(g, 37, -1.0);
    for (int l = 0; l < 37; ++l) {
        for (int ix = 0; ix < g.nx(); ++ix) {
            for (int iy = g.y_begin(); iy < g.y_end(); ++iy) {
                f.at(l, ix, iy) = iy; // constant per row
            }
        }
    }
    vertical_halo_wrap(f);
    for (int ix = 0; ix < g.nx(); ++ix) {
        for (int h = 0; h < 3; ++h) {
            CHECK(f.at(2, ix, h) == g.ly + h);
            CHECK(f.at(2, ix, g.y_end() + h) == g.hy + h);
        }
    }
    const auto once = f;
    vertical_halo_wrap(f);
    CHECK(bit_identical(once.data(), f.data()));
}

TEST_CASE("propagation on the torus is a permutation")
{
    std::mt19937_64 rng(99);
    for (auto model : {Model::D2Q37, Model::D2Q9}) {
        const auto vs = build_velocity_set(model);
        const auto g = make_geometry(11, 9, vs);
        auto f = allocate_field(g, vs.q());
        test::fill_random(f, rng);
        vertical_halo_wrap(f);
        RingTransport transport(1, vs.q());
        exchange_halos(f, make_topology(1, 0), transport);
        auto out = allocate_field(g, vs.q());
        propagate_v2(f, out, vs, physical_region(g));
        for (int l = 0; l < vs.q(); ++l) {
            std::vector<double> a;
            std::vector<double> b;
            for (int ix = g.x_begin(); ix < g.x_end(); ++ix) {
                for (int iy = g.y_begin(); iy < g.y_end(); ++iy) {
                    a.push_back(f.at(l, ix, iy));
                    b.push_back(out.at(l, ix, iy));
                }
            }
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(bit_identical(a, b));
        }
    }
}
