#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

#include "swarm/agent.hpp"
#include "swarm/comms.hpp"
#include "swarm/environment.hpp"

namespace swarm {

// ---------------------------------------------------------------------------
// events

struct ArrivalEvent {
    int robot;
};
struct DeliveryEvent {
    Packet packet;
    int recipient;
};
struct TickEvent {};

/// Time-ordered engine event; equal times break by creation sequence.
struct SimEvent {
    double time = 0.0;
    std::int64_t sequence = 0;
    std::variant<ArrivalEvent, DeliveryEvent, TickEvent> kind;
};

class EventQueue {
public:
    void push(double time, std::variant<ArrivalEvent, DeliveryEvent, TickEvent> kind) {
        heap_.push(SimEvent{time, next_sequence_++, std::move(kind)});
    }
    bool empty() const { return heap_.empty(); }
    const SimEvent& top() const { return heap_.top(); }
    SimEvent pop() {
        SimEvent e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const SimEvent& a, const SimEvent& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };
    std::priority_queue<SimEvent, std::vector<SimEvent>, Later> heap_;
    std::int64_t next_sequence_ = 0;
};

// ---------------------------------------------------------------------------
// policies & configuration

struct BayesPolicy {
    double alpha = 0.4;
};
struct RandomWalkPolicy {};
struct ExhaustivePolicy {
    double swath = 0.1;  // row spacing; 2 * epsilon guarantees detection coverage
};
using Policy = std::variant<BayesPolicy, RandomWalkPolicy, ExhaustivePolicy>;

struct RunConfig {
    double speed = 0.1;          // m/s
    double t_first = 4.0;        // s, first decision horizon
    double t_later = 10.0;       // s, later decision horizons
    std::size_t n_max = 400;     // training-set cap
    double delta_theta = 360.0;  // deg, initial fan-out range
    int quadrature_nodes = 32;
    double sample_rate = 1.0;    // Hz
    double decision_latency = 0.0;
    double delivery_latency = 0.0;
    double sim_dt = 1e-3;        // s, termination-check granularity
    int mapping_lattice = 50;
    FitBudget fit_budget;
    std::optional<double> epsilon;   // defaults to the case value
    std::optional<double> t_max;     // defaults to the case / policy value
    std::optional<double> noise_sd;  // defaults to the case value

    void validate() const;
};

// ---------------------------------------------------------------------------
// results

enum class Outcome { Found, Timeout };

struct RobotStats {
    int decisions = 0;
    double knowledge_gain_total = 0.0;
    std::uint64_t bytes_sent = 0;
    bool has_model = false;
    double mapping_error = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
    Outcome outcome = Outcome::Timeout;
    double completion_time = 0.0;
    int found_by = -1;  // robot id, or -1 on timeout
    double t_max_used = 0.0;
    std::vector<RobotStats> per_robot;
    double mapping_error = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> log_lines;  // line-delimited JSON events
    std::string trajectory_csv;          // robot,t,x,y,value
};

struct Metrics {
    std::string outcome;
    double completion_time = 0.0;
    double mean_decisions = 0.0;
    double mean_knowledge_gain = 0.0;
    double mapping_error = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t total_bytes = 0;
    int n_robots = 0;
};

// ---------------------------------------------------------------------------
// operations

/// Deterministic asynchronous rollout of one mission. Robots move at
/// constant speed along straight legs; termination is checked on a 1 ms
/// grid between events; decisions and packet deliveries are event-driven.
RunResult run(const CaseStudy& cs, const Policy& policy, int n_robots, std::uint64_t seed,
              const RunConfig& config = {});

/// Fixed-length step in a uniformly random direction, mirrored back into
/// the arena at the edges.
Vec2 random_walk_step(const Vec2& position, double speed, double horizon,
                      const BoundingBox& arena, std::mt19937_64& rng);

/// Boustrophedon coverage routes: vertical strips (equal quarters when
/// n_robots == 4), rows spaced by `swath`, always including both the bottom
/// and top row of each cell.
std::vector<std::vector<Vec2>> exhaustive_plan(const BoundingBox& arena, int n_robots,
                                               double swath);

Metrics collect_metrics(const RunResult& result);

}  // namespace swarm
