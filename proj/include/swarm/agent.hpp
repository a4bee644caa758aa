#pragma once

#include <map>
#include <optional>
#include <random>

#include "swarm/acquisition.hpp"
#include "swarm/gp.hpp"

namespace swarm {

/// Per-robot mutable state. Owned by exactly one logical agent; peers touch
/// it only through delivered packets.
struct AgentState {
    int robot_id = 0;
    Vec2 position{0.0, 0.0};
    int iteration = 0;  // committed waypoints so far
    Dataset dataset;
    std::optional<GpModel> model;
    std::map<int, PendingPlan> peer_table;
    std::mt19937_64 rng;
    double alpha = 0.4;
    std::optional<Vec2> next_waypoint;
    std::optional<Vec2> previous_position;
};

/// Knobs shared by every decision of a run.
struct DecisionOptions {
    std::size_t n_max = 400;
    int quadrature_nodes = 32;
    double sample_rate = 1.0;
    double recent_window = 10.0;
    FitBudget fit_budget;
};

enum class TerminationStatus { Found, Timeout, Continue };

/// Uninformed first waypoint: robots fan out from the start position at
/// angle r * dtheta / n when dtheta covers the full circle, otherwise at
/// (r + 1) * dtheta / (n + 1) so every heading falls strictly inside the
/// allowed range. Step length is speed * horizon_first.
Vec2 take_first_decision(int robot_id, int n_robots, double delta_theta_deg, double speed,
                         double horizon_first, const Vec2& start);

/// One planning step: down-sample the dataset to n_max if oversize, refit
/// the belief model (warm-started from the previous fit), and maximize the
/// acquisition over the reachable disk. Increments the iteration counter.
Vec2 take_decision(AgentState& state, double speed, double horizon, const BoundingBox& arena,
                   const DecisionOptions& options);

/// Found when some robot is within epsilon of the source; otherwise Timeout
/// once elapsed reaches t_max. Found wins exact ties.
TerminationStatus check_termination(const std::vector<Vec2>& positions, const Vec2& true_source,
                                    double epsilon, double elapsed, double t_max);

}  // namespace swarm
