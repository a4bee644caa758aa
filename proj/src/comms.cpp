#include "swarm/comms.hpp"

#include <cmath>

#include "swarm/agent.hpp"

namespace swarm {

namespace {

std::uint16_t quantize(double v, double lo, double span, const char* what) {
    if (!(v >= lo && v <= lo + span))
        throw OutOfRange(std::string(what) + " outside declared quantization range");
    return static_cast<std::uint16_t>(std::lround((v - lo) / span * 65535.0));
}

double dequantize(std::uint16_t q, double lo, double span) {
    return lo + static_cast<double>(q) / 65535.0 * span;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint16_t get_u16(const std::vector<std::uint8_t>& in, std::size_t at) {
    return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

}  // namespace

std::size_t encoded_size(std::size_t n_observations) { return 4 + 6 * n_observations; }

std::vector<std::uint8_t> encode(const Packet& packet, const BoundingBox& arena,
                                 const ValueRange& value_range) {
    const Vec2 ext = arena.extent();
    std::vector<std::uint8_t> out;
    out.reserve(encoded_size(packet.observations.size()));
    put_u16(out, quantize(packet.waypoint.x(), arena.lo.x(), ext.x(), "waypoint x"));
    put_u16(out, quantize(packet.waypoint.y(), arena.lo.y(), ext.y(), "waypoint y"));
    for (const auto& o : packet.observations) {
        put_u16(out, quantize(o.position.x(), arena.lo.x(), ext.x(), "observation x"));
        put_u16(out, quantize(o.position.y(), arena.lo.y(), ext.y(), "observation y"));
        put_u16(out, quantize(o.value, value_range.lo, value_range.span(), "observation value"));
    }
    return out;
}

Packet decode(const std::vector<std::uint8_t>& bytes, const BoundingBox& arena,
              const ValueRange& value_range, int sender, double send_time) {
    if (bytes.size() < 4 || (bytes.size() - 4) % 6 != 0)
        throw MalformedPacket("packet length must be 4 + 6n bytes, got " +
                              std::to_string(bytes.size()));
    const Vec2 ext = arena.extent();
    Packet p;
    p.sender = sender;
    p.send_time = send_time;
    p.waypoint = {dequantize(get_u16(bytes, 0), arena.lo.x(), ext.x()),
                  dequantize(get_u16(bytes, 2), arena.lo.y(), ext.y())};
    const std::size_t n = (bytes.size() - 4) / 6;
    p.observations.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = 4 + 6 * i;
        Observation o;
        o.position = {dequantize(get_u16(bytes, at), arena.lo.x(), ext.x()),
                      dequantize(get_u16(bytes, at + 2), arena.lo.y(), ext.y())};
        o.value = dequantize(get_u16(bytes, at + 4), value_range.lo, value_range.span());
        o.time = send_time;
        o.origin_robot = sender;
        p.observations.push_back(o);
    }
    return p;
}

void receive_information(AgentState& state, const Packet& packet) {
    if (packet.sender == state.robot_id)
        throw std::invalid_argument("receive_information: robot cannot receive its own packet");
    state.dataset.merge(packet.observations);

    auto it = state.peer_table.find(packet.sender);
    if (it == state.peer_table.end()) {
        state.peer_table[packet.sender] =
            PendingPlan{packet.sender, packet.waypoint, packet.waypoint};
    } else {
        it->second.segment_start = it->second.segment_end;
        it->second.segment_end = packet.waypoint;
    }
}

}  // namespace swarm
