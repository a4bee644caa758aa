#include "swarm/agent.hpp"

#include <cmath>
#include <numbers>

namespace swarm {

Vec2 take_first_decision(int robot_id, int n_robots, double delta_theta_deg, double speed,
                         double horizon_first, const Vec2& start) {
    if (robot_id < 0 || robot_id >= n_robots)
        throw std::invalid_argument("take_first_decision: robot_id outside [0, n_robots)");
    if (delta_theta_deg <= 0.0 || delta_theta_deg > 360.0)
        throw std::invalid_argument("take_first_decision: delta_theta must be in (0, 360]");

    const double d = speed * horizon_first;
    double theta_deg;
    if (delta_theta_deg == 360.0)
        theta_deg = static_cast<double>(robot_id) * delta_theta_deg / n_robots;
    else
        theta_deg = static_cast<double>(robot_id + 1) * delta_theta_deg / (n_robots + 1);
    const double theta = theta_deg * std::numbers::pi / 180.0;
    return start + d * Vec2{std::cos(theta), std::sin(theta)};
}

Vec2 take_decision(AgentState& state, double speed, double horizon, const BoundingBox& arena,
                   const DecisionOptions& options) {
    if (state.iteration < 1)
        throw std::logic_error("take_decision: first decision is handled by take_first_decision");
    if (state.dataset.empty()) throw std::logic_error("take_decision: empty dataset");

    if (state.dataset.size() > options.n_max)
        state.dataset =
            downsample(state.dataset, options.n_max, state.rng, options.recent_window);

    Hyperparameters init;
    if (state.model.has_value()) {
        init = state.model->hyper();
    } else {
        // data-driven first guess
        double mean = 0.0, var = 0.0;
        for (const auto& o : state.dataset) mean += o.value;
        mean /= static_cast<double>(state.dataset.size());
        for (const auto& o : state.dataset) var += (o.value - mean) * (o.value - mean);
        var /= static_cast<double>(state.dataset.size());
        init.signal_variance = std::max(var, 1e-6);
        init.length_scales = Vec2::Constant(std::max(arena.max_extent() / 4.0, 1e-3));
        init.noise_variance = 1e-4 * init.signal_variance;
        init.beta = mean;
    }
    state.model = fit(state.dataset, init, options.fit_budget, state.rng);

    AcquisitionContext ctx;
    ctx.model = &*state.model;
    ctx.current_position = state.position;
    for (const auto& [id, plan] : state.peer_table) ctx.peer_plans.push_back(plan);
    ctx.alpha = state.alpha;
    ctx.speed = speed;
    ctx.horizon = horizon;
    ctx.arena = arena;
    ctx.previous_position = state.previous_position;
    ctx.quadrature_nodes = options.quadrature_nodes;
    ctx.sample_rate = options.sample_rate;

    const Vec2 waypoint = plan_waypoint(ctx);
    state.iteration += 1;
    state.next_waypoint = waypoint;
    return waypoint;
}

TerminationStatus check_termination(const std::vector<Vec2>& positions, const Vec2& true_source,
                                    double epsilon, double elapsed, double t_max) {
    if (epsilon <= 0.0 || t_max < 0.0)
        throw std::invalid_argument("check_termination: epsilon must be positive");
    for (const auto& p : positions)
        if ((p - true_source).norm() <= epsilon) return TerminationStatus::Found;
    if (elapsed >= t_max) return TerminationStatus::Timeout;
    return TerminationStatus::Continue;
}

}  // namespace swarm
