#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "swarm/geometry.hpp"
#include "swarm/observation.hpp"

namespace swarm {

struct AgentState;  // agent.hpp

struct OutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedPacket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Signal-value interval used for fixed-point quantization.
struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;
    double span() const { return hi - lo; }
};

/// One broadcast: the sender's next waypoint plus the observations gathered
/// over its last path segment (empty on the first decision).
struct Packet {
    int sender = 0;
    Vec2 waypoint{0.0, 0.0};
    std::vector<Observation> observations;
    double send_time = 0.0;
};

/// Wire layout, little-endian u16 fields quantized over the declared ranges:
///   [wx][wy]                      waypoint, 4 bytes
///   ([x][y][value]) * n           6 bytes per observation
/// Total 4 + 6n bytes. Sender identity and timing travel out of band.
std::vector<std::uint8_t> encode(const Packet& packet, const BoundingBox& arena,
                                 const ValueRange& value_range);

/// Inverse of encode. Positions and values come back within one quantization
/// step (extent / 2^16). The out-of-band sender/send_time, when known, fill
/// the corresponding fields; decoded observations carry the send time.
Packet decode(const std::vector<std::uint8_t>& bytes, const BoundingBox& arena,
              const ValueRange& value_range, int sender = 0, double send_time = 0.0);

std::size_t encoded_size(std::size_t n_observations);

/// Merge a peer's broadcast into the receiving robot's state: observations
/// union into the dataset and the peer's pending segment shifts so the old
/// target becomes the segment start and the new waypoint the end.
void receive_information(AgentState& state, const Packet& packet);

}  // namespace swarm
