#include "lbm/exchange.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <string>
#include <thread>

namespace lbm {

RankTopology make_topology(int n_ranks, int rank)
{
    if (n_ranks < 1) {
        throw std::invalid_argument("ring needs at least one rank");
    }
    if (rank < 0 || rank >= n_ranks) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " outside ring of " + std::to_string(n_ranks));
    }
    return RankTopology{n_ranks, rank};
}

namespace {

template <typename T>
void put_le(std::vector<std::byte>& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::byte>((value >> (8 * i)) & 0xFF));
    }
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t at)
{
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(std::to_integer<unsigned>(in[at + i])) << (8 * i);
    }
    return value;
}

constexpr std::size_t kHeaderBytes = 4 + 1 + 8;

} // namespace

std::vector<std::byte> encode_message(const HaloMessage& msg)
{
    std::vector<std::byte> out;
    out.reserve(kHeaderBytes + msg.payload.size() * sizeof(double));
    put_le<std::uint32_t>(out, msg.population);
    out.push_back(static_cast<std::byte>(msg.direction));
    put_le<std::uint64_t>(out, msg.payload.size());
    for (double v : msg.payload) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

HaloMessage decode_message(std::span<const std::byte> bytes)
{
    if (bytes.size() < kHeaderBytes) {
        throw ProtocolError("halo message shorter than its header");
    }
    HaloMessage msg;
    msg.population = get_le<std::uint32_t>(bytes, 0);
    const auto dir = std::to_integer<unsigned>(bytes[4]);
    if (dir > 1) {
        throw ProtocolError("halo message has unknown direction byte " + std::to_string(dir));
    }
    msg.direction = static_cast<Direction>(dir);
    const auto count = get_le<std::uint64_t>(bytes, 5);
    if (count != (bytes.size() - kHeaderBytes) / sizeof(double) || (bytes.size() - kHeaderBytes) % sizeof(double) != 0) {
        throw ProtocolError("halo message payload length " + std::to_string(count) + " does not match " +
                            std::to_string(bytes.size() - kHeaderBytes) + " payload bytes");
    }
    msg.payload.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        msg.payload[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, kHeaderBytes + i * sizeof(double)));
    }
    return msg;
}

RingTransport::RingTransport(int n_ranks, int q, bool serialize)
    : q_(q), serialize_(serialize)
{
    if (n_ranks < 1) {
        throw std::invalid_argument("ring needs at least one rank");
    }
    for (int r = 0; r < n_ranks; ++r) {
        mailboxes_.push_back(std::make_unique<Mailbox>());
    }
}

void RingTransport::send(int from, int to, HaloMessage msg)
{
    if (from < 0 || from >= n_ranks() || to < 0 || to >= n_ranks()) {
        throw ProtocolError("halo message between unknown ranks " + std::to_string(from) + " -> " + std::to_string(to));
    }
    if (msg.population != kAllPopulations && msg.population >= static_cast<std::uint32_t>(q_)) {
        throw ProtocolError("halo message for unknown population " + std::to_string(msg.population));
    }
    auto& box = *mailboxes_[static_cast<std::size_t>(to)];
    const Key key{from, msg.population, msg.direction};
    {
        std::lock_guard lock(box.mutex);
        if (serialize_) {
            box.wire[key].push_back(encode_message(msg));
        } else {
            box.direct[key].push_back(std::move(msg));
        }
    }
    sent_.fetch_add(1);
    box.ready.notify_all();
}

HaloMessage RingTransport::receive(int at, int from, std::uint32_t population, Direction direction)
{
    if (at < 0 || at >= n_ranks() || from < 0 || from >= n_ranks()) {
        throw ProtocolError("receive between unknown ranks");
    }
    auto& box = *mailboxes_[static_cast<std::size_t>(at)];
    const Key key{from, population, direction};
    std::unique_lock lock(box.mutex);
    if (serialize_) {
        box.ready.wait(lock, [&] {
            auto it = box.wire.find(key);
            return it != box.wire.end() && !it->second.empty();
        });
        auto bytes = std::move(box.wire[key].front());
        box.wire[key].pop_front();
        lock.unlock();
        auto msg = decode_message(bytes);
        if (msg.population != population || msg.direction != direction) {
            throw ProtocolError("halo message header does not match its channel");
        }
        return msg;
    }
    box.ready.wait(lock, [&] {
        auto it = box.direct.find(key);
        return it != box.direct.end() && !it->second.empty();
    });
    auto msg = std::move(box.direct[key].front());
    box.direct[key].pop_front();
    return msg;
}

ExchangeOrdering parse_ordering(std::string_view name)
{
    if (name == "serialized") {
        return ExchangeOrdering::Serialized;
    }
    if (name == "pipelined") {
        return ExchangeOrdering::Pipelined;
    }
    throw std::invalid_argument("unknown exchange ordering '" + std::string(name) + "'");
}

std::string_view to_string(ExchangeOrdering ordering)
{
    return ordering == ExchangeOrdering::Serialized ? "serialized" : "pipelined";
}

namespace {

struct HaloLayout {
    std::size_t column_block; // Hx * NY
    std::size_t send_right;   // offset within a plane of the Hx rightmost physical columns
    std::size_t send_left;    // ... leftmost physical columns
    std::size_t halo_left;
    std::size_t halo_right;
};

HaloLayout halo_layout(const LatticeGeometry& g)
{
    const auto ny = static_cast<std::size_t>(g.ny());
    const auto hx = static_cast<std::size_t>(g.hx);
    const auto lx = static_cast<std::size_t>(g.lx);
    return HaloLayout{hx * ny, lx * ny, hx * ny, 0, (hx + lx) * ny};
}

void copy_block(const double* src, double* dst, std::size_t n)
{
    std::memcpy(dst, src, n * sizeof(double));
}

HaloMessage outgoing(const PopulationField& field, const HaloLayout& layout, std::uint32_t population, Direction dir)
{
    HaloMessage msg;
    msg.population = population;
    msg.direction = dir;
    const std::size_t offset = dir == Direction::ToRight ? layout.send_right : layout.send_left;
    auto append_plane = [&](int l) {
        const double* src = field.plane(l) + offset;
        msg.payload.insert(msg.payload.end(), src, src + layout.column_block);
    };
    if (population == kAllPopulations) {
        msg.payload.reserve(layout.column_block * static_cast<std::size_t>(field.q()));
        for (int l = 0; l < field.q(); ++l) {
            append_plane(l);
        }
    } else {
        msg.payload.reserve(layout.column_block);
        append_plane(static_cast<int>(population));
    }
    return msg;
}

void incoming(PopulationField& field, const HaloLayout& layout, const HaloMessage& msg)
{
    // A ToRight message came from the left neighbor and fills the left halo.
    const std::size_t offset = msg.direction == Direction::ToRight ? layout.halo_left : layout.halo_right;
    const std::size_t planes = msg.population == kAllPopulations ? static_cast<std::size_t>(field.q()) : 1;
    if (msg.payload.size() != planes * layout.column_block) {
        throw ProtocolError("halo payload of " + std::to_string(msg.payload.size()) + " values, expected " +
                            std::to_string(planes * layout.column_block));
    }
    if (msg.population == kAllPopulations) {
        for (int l = 0; l < field.q(); ++l) {
            copy_block(msg.payload.data() + static_cast<std::size_t>(l) * layout.column_block, field.plane(l) + offset,
                       layout.column_block);
        }
    } else {
        if (msg.population >= static_cast<std::uint32_t>(field.q())) {
            throw ProtocolError("halo message for unknown population " + std::to_string(msg.population));
        }
        copy_block(msg.payload.data(), field.plane(static_cast<int>(msg.population)) + offset, layout.column_block);
    }
}

} // namespace

ExchangeStats exchange_halos(PopulationField& field, const RankTopology& topology, RingTransport& transport,
                             const ExchangeOptions& options)
{
    const auto& g = field.geometry();
    if (g.lx < g.hx) {
        throw GeometryError("sub-lattice of width " + std::to_string(g.lx) + " cannot fill a halo of " +
                            std::to_string(g.hx) + " columns");
    }
    if (topology.n_ranks != transport.n_ranks()) {
        throw std::invalid_argument("topology and transport disagree on the ring size");
    }
    if (const auto delay = transport.injected_delay(); delay.count() > 0) {
        std::this_thread::sleep_for(delay);
    }
    const HaloLayout layout = halo_layout(g);
    const int q = field.q();
    ExchangeStats stats;
    const std::size_t planes_per_message = options.aggregate ? static_cast<std::size_t>(q) : 1;
    const std::size_t messages = options.aggregate ? 1 : static_cast<std::size_t>(q);
    stats.transfers = 2 * messages;
    stats.doubles_moved = 2 * messages * planes_per_message * layout.column_block;

    if (topology.n_ranks == 1) {
        for (int l = 0; l < q; ++l) {
            double* plane = field.plane(l);
            copy_block(plane + layout.send_right, plane + layout.halo_left, layout.column_block);
            copy_block(plane + layout.send_left, plane + layout.halo_right, layout.column_block);
        }
        return stats;
    }

    const int me = topology.rank;
    const int left = topology.left();
    const int right = topology.right();
    auto label = [&](std::size_t i) { return options.aggregate ? kAllPopulations : static_cast<std::uint32_t>(i); };

    if (options.ordering == ExchangeOrdering::Serialized) {
        for (std::size_t i = 0; i < messages; ++i) {
            transport.send(me, right, outgoing(field, layout, label(i), Direction::ToRight));
            incoming(field, layout, transport.receive(me, left, label(i), Direction::ToRight));
            transport.send(me, left, outgoing(field, layout, label(i), Direction::ToLeft));
            incoming(field, layout, transport.receive(me, right, label(i), Direction::ToLeft));
        }
    } else {
        for (std::size_t i = 0; i < messages; ++i) {
            transport.send(me, right, outgoing(field, layout, label(i), Direction::ToRight));
            transport.send(me, left, outgoing(field, layout, label(i), Direction::ToLeft));
        }
        for (std::size_t i = 0; i < messages; ++i) {
            incoming(field, layout, transport.receive(me, left, label(i), Direction::ToRight));
            incoming(field, layout, transport.receive(me, right, label(i), Direction::ToLeft));
        }
    }
    return stats;
}

void vertical_halo_wrap(PopulationField& field)
{
    const auto& g = field.geometry();
    if (g.ly < g.hy) {
        throw GeometryError("sub-lattice of height " + std::to_string(g.ly) + " cannot fill a halo of " +
                            std::to_string(g.hy) + " rows");
    }
    const auto ny = static_cast<std::size_t>(g.ny());
    const auto hy = static_cast<std::size_t>(g.hy);
    const auto ly = static_cast<std::size_t>(g.ly);
    for (int l = 0; l < field.q(); ++l) {
        double* plane = field.plane(l);
        for (int ix = 0; ix < g.nx(); ++ix) {
            double* col = plane + static_cast<std::size_t>(ix) * ny;
            copy_block(col + hy, col + hy + ly, hy);
            copy_block(col + ly, col, hy);
        }
    }
}

} // namespace lbm
