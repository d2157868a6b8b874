#pragma once

#include "lbm/lattice.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace lbm {

// Ring of ranks; the global lattice is split along X into n_ranks slabs.
struct RankTopology {
    int n_ranks = 1;
    int rank = 0;

    [[nodiscard]] int left() const { return (rank - 1 + n_ranks) % n_ranks; }
    [[nodiscard]] int right() const { return (rank + 1) % n_ranks; }
};

RankTopology make_topology(int n_ranks, int rank);

enum class Direction : std::uint8_t { ToLeft = 0, ToRight = 1 };

// Population label used by aggregated messages that carry all planes.
inline constexpr std::uint32_t kAllPopulations = 0xFFFFFFFFu;

struct HaloMessage {
    std::uint32_t population = 0;
    Direction direction = Direction::ToLeft;
    std::vector<double> payload;

    friend bool operator==(const HaloMessage&, const HaloMessage&) = default;
};

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wire format: u32 LE population, u8 direction, u64 LE payload length (number
// of doubles), payload as LE IEEE-754 doubles.
std::vector<std::byte> encode_message(const HaloMessage& msg);
HaloMessage decode_message(std::span<const std::byte> bytes);

// In-process paired-message channel between ranks. send() never blocks;
// receive() blocks until the matching (population, direction) message from the
// given neighbor arrives. Messages on one channel are delivered in order.
class RingTransport {
public:
    // With `serialize` set, every message travels as its wire encoding.
    RingTransport(int n_ranks, int q, bool serialize = false);

    [[nodiscard]] int n_ranks() const { return static_cast<int>(mailboxes_.size()); }

    void send(int from, int to, HaloMessage msg);
    HaloMessage receive(int at, int from, std::uint32_t population, Direction direction);

    // Extra latency charged once per halo exchange, for overlap experiments.
    void set_injected_delay(std::chrono::nanoseconds delay) { delay_ns_.store(delay.count()); }
    [[nodiscard]] std::chrono::nanoseconds injected_delay() const { return std::chrono::nanoseconds(delay_ns_.load()); }

    [[nodiscard]] std::size_t messages_sent() const { return sent_.load(); }

private:
    struct Key {
        int from;
        std::uint32_t population;
        Direction direction;
        auto operator<=>(const Key&) const = default;
    };
    struct Mailbox {
        std::mutex mutex;
        std::condition_variable ready;
        std::map<Key, std::deque<std::vector<std::byte>>> wire;
        std::map<Key, std::deque<HaloMessage>> direct;
    };

    int q_;
    bool serialize_;
    std::vector<std::unique_ptr<Mailbox>> mailboxes_;
    std::atomic<long long> delay_ns_{0};
    std::atomic<std::size_t> sent_{0};
};

enum class ExchangeOrdering {
    Serialized, // per population: send-receive left, then send-receive right
    Pipelined,  // post all sends, then drain all receives
};

ExchangeOrdering parse_ordering(std::string_view name);
std::string_view to_string(ExchangeOrdering ordering);

struct ExchangeOptions {
    bool aggregate = false; // one message per direction instead of one per population
    ExchangeOrdering ordering = ExchangeOrdering::Serialized;
};

struct ExchangeStats {
    std::size_t transfers = 0; // paired send/receive operations
    std::size_t doubles_moved = 0;
};

// Periodic left/right halo update: the Hx rightmost physical columns of every
// plane go to the right neighbor's left halo, the Hx leftmost to the left
// neighbor's right halo. Columns are sent whole (all NY rows). With a single
// rank this is a local wrap-around copy.
ExchangeStats exchange_halos(PopulationField& field, const RankTopology& topology, RingTransport& transport,
                             const ExchangeOptions& options = {});

// Copies the Hy bottom physical rows into the top halo and the Hy top
// physical rows into the bottom halo, for every column and population.
void vertical_halo_wrap(PopulationField& field);

} // namespace lbm
