#pragma once

#include <bit>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "swarm/geometry.hpp"

namespace swarm {

/// A single timestamped signal measurement.
struct Observation {
    Vec2 position{0.0, 0.0};
    double value = 0.0;
    double time = 0.0;        // seconds since mission start
    int origin_robot = 0;
};

/// Ordered observation store with set semantics on (position, time, origin).
/// Inserting an exact duplicate of an existing entry is a no-op, so merging
/// the same broadcast twice cannot inflate the training set.
class Dataset {
public:
    Dataset() = default;

    bool insert(const Observation& o) {
        if (!keys_.insert(key_of(o)).second) return false;
        obs_.push_back(o);
        return true;
    }

    std::size_t merge(const std::vector<Observation>& batch) {
        std::size_t added = 0;
        for (const auto& o : batch) added += insert(o) ? 1 : 0;
        return added;
    }

    std::size_t size() const { return obs_.size(); }
    bool empty() const { return obs_.empty(); }
    const Observation& operator[](std::size_t i) const { return obs_[i]; }
    const std::vector<Observation>& items() const { return obs_; }

    auto begin() const { return obs_.begin(); }
    auto end() const { return obs_.end(); }

private:
    struct Key {
        std::uint64_t x, y, t;
        int origin;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            auto mix = [](std::uint64_t h, std::uint64_t v) {
                h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
                return h;
            };
            std::uint64_t h = static_cast<std::uint64_t>(k.origin);
            h = mix(h, k.t);
            h = mix(h, k.x);
            return static_cast<std::size_t>(mix(h, k.y));
        }
    };

    static Key key_of(const Observation& o) {
        return {std::bit_cast<std::uint64_t>(o.position.x()),
                std::bit_cast<std::uint64_t>(o.position.y()),
                std::bit_cast<std::uint64_t>(o.time), o.origin_robot};
    }

    std::vector<Observation> obs_;
    std::unordered_set<Key, KeyHash> keys_;
};

}  // namespace swarm
