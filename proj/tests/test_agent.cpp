#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "swarm/agent.hpp"
#include "swarm/environment.hpp"

using namespace swarm;

namespace {

const BoundingBox kArena{{0.0, 0.0}, {10.0, 10.0}};

/// Seed a state with noise-free samples of a field around the start.
AgentState seeded_state(const SignalField& field, const Vec2& position, int n, double alpha,
                        std::uint64_t seed) {
    AgentState s;
    s.robot_id = 0;
    s.position = position;
    s.iteration = 1;
    s.alpha = alpha;
    s.rng.seed(seed);
    std::mt19937_64 sampler(99);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    for (int i = 0; i < n; ++i) {
        Vec2 p = position + Vec2{jitter(sampler), jitter(sampler)};
        p = field.arena.clamp(p);
        s.dataset.insert({p, field.value(p), static_cast<double>(i), 0});
    }
    return s;
}

}  // namespace

TEST_CASE("first decision: full-circle fan-out angles") {
    // four robots, full circle: 0, 90, 180, 270 degrees
    const Vec2 wp = take_first_decision(1, 4, 360.0, 0.1, 4.0, {0.0, 0.0});
    CHECK(wp.x() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(wp.y() == doctest::Approx(0.4).epsilon(1e-12));

    const Vec2 single = take_first_decision(0, 1, 360.0, 0.1, 4.0, {0.0, 0.0});
    CHECK(single.x() == doctest::Approx(0.4));
    CHECK(single.y() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("first decision: restricted range spreads headings strictly inside") {
    // two robots in a 90-degree range: 30 and 60 degrees
    const Vec2 w0 = take_first_decision(0, 2, 90.0, 0.1, 4.0, {0.0, 0.0});
    CHECK(w0.x() == doctest::Approx(0.4 * std::cos(std::numbers::pi / 6.0)));
    CHECK(w0.y() == doctest::Approx(0.4 * std::sin(std::numbers::pi / 6.0)));
    const Vec2 w1 = take_first_decision(1, 2, 90.0, 0.1, 4.0, {0.0, 0.0});
    CHECK(w1.x() == doctest::Approx(0.4 * std::cos(std::numbers::pi / 3.0)));
    CHECK(w1.y() == doctest::Approx(0.4 * std::sin(std::numbers::pi / 3.0)));
}

TEST_CASE("first decision: step length is speed times the first horizon") {
    for (int r = 0; r < 5; ++r) {
        const Vec2 wp = take_first_decision(r, 5, 120.0, 0.1, 4.0, {2.0, 3.0});
        CHECK((wp - Vec2{2.0, 3.0}).norm() == doctest::Approx(0.4).epsilon(1e-12));
    }
}

TEST_CASE("first decision: translated by the start position") {
    const Vec2 start{4.0, 7.0};
    const Vec2 wp = take_first_decision(0, 2, 360.0, 0.1, 4.0, start);
    CHECK(testutil::eq(wp, {4.4, 7.0}));
}

TEST_CASE("first decision rejects bad arguments") {
    CHECK_THROWS(take_first_decision(4, 4, 360.0, 0.1, 4.0, {0.0, 0.0}));
    CHECK_THROWS(take_first_decision(-1, 4, 360.0, 0.1, 4.0, {0.0, 0.0}));
    CHECK_THROWS(take_first_decision(0, 4, 0.0, 0.1, 4.0, {0.0, 0.0}));
    CHECK_THROWS(take_first_decision(0, 4, 400.0, 0.1, 4.0, {0.0, 0.0}));
}

TEST_CASE("take_decision caps the training set at n_max") {
    SignalField f;
    f.arena = kArena;
    f.components.push_back({{5.0, 5.0}, 2.0, 4.0 * Eigen::Matrix2d::Identity()});
    AgentState s = seeded_state(f, {5.0, 2.0}, 500, 0.4, 7);
    REQUIRE(s.dataset.size() == 500);

    DecisionOptions opts;
    opts.fit_budget = {3, 2, 4};
    take_decision(s, 0.1, 10.0, kArena, opts);
    CHECK(s.dataset.size() == 400);
    CHECK(s.model->train_size() == 400);
    CHECK(s.iteration == 2);
    CHECK(s.next_waypoint.has_value());
}

TEST_CASE("greedy decisions approach the peak of a convex field") {
    SignalField f;
    f.arena = kArena;
    f.components.push_back({{6.0, 6.0}, 2.0, 8.0 * Eigen::Matrix2d::Identity()});

    AgentState s = seeded_state(f, {3.0, 3.0}, 25, 1.0, 11);
    DecisionOptions opts;
    opts.fit_budget = {3, 2, 6};

    std::mt19937_64 sampler(5);
    double prev_dist = (s.position - Vec2{6.0, 6.0}).norm();
    for (int step = 0; step < 10; ++step) {
        const Vec2 wp = take_decision(s, 0.1, 10.0, kArena, opts);
        // travel the leg, sampling noise-free along it
        for (const auto& o :
             sample_along(f, s.position, wp, 0.1, 1.0, 100.0 * (step + 1), 0.0, sampler, 0))
            s.dataset.insert(o);
        s.previous_position = s.position;
        s.position = wp;
        const double dist = (s.position - Vec2{6.0, 6.0}).norm();
        CHECK(dist <= prev_dist + 1e-9);
        prev_dist = dist;
        if (dist < 0.05) break;
    }
    CHECK(prev_dist < 2.5);  // made real progress over ten legs
}

TEST_CASE("identical state and rng give identical waypoints") {
    SignalField f;
    f.arena = kArena;
    f.components.push_back({{4.0, 6.0}, 1.5, 3.0 * Eigen::Matrix2d::Identity()});
    DecisionOptions opts;
    opts.fit_budget = {3, 2, 4};

    AgentState a = seeded_state(f, {5.0, 5.0}, 40, 0.4, 21);
    AgentState b = seeded_state(f, {5.0, 5.0}, 40, 0.4, 21);
    const Vec2 wa = take_decision(a, 0.1, 10.0, kArena, opts);
    const Vec2 wb = take_decision(b, 0.1, 10.0, kArena, opts);
    CHECK(testutil::eq(wa, wb));

    // same data, different position: a different waypoint is permitted
    AgentState c = seeded_state(f, {5.0, 5.0}, 40, 0.4, 21);
    c.position = {5.5, 4.5};
    CHECK_NOTHROW(take_decision(c, 0.1, 10.0, kArena, opts));
}

TEST_CASE("take_decision preconditions") {
    AgentState s;
    s.iteration = 0;
    CHECK_THROWS_AS(take_decision(s, 0.1, 10.0, kArena, {}), std::logic_error);
    s.iteration = 1;
    CHECK_THROWS_AS(take_decision(s, 0.1, 10.0, kArena, {}), std::logic_error);  // empty data
}

TEST_CASE("termination: found within epsilon") {
    const Vec2 source{1.0, 1.0};
    CHECK(check_termination({{1.0, 1.04}}, source, 0.05, 10.0, 100.0) ==
          TerminationStatus::Found);
    CHECK(check_termination({{5.0, 5.0}, {1.0, 1.05}}, source, 0.05, 10.0, 100.0) ==
          TerminationStatus::Found);  // boundary counts
}

TEST_CASE("termination: timeout at the boundary, found wins ties") {
    const Vec2 source{1.0, 1.0};
    CHECK(check_termination({{3.0, 3.0}}, source, 0.05, 100.0, 100.0) ==
          TerminationStatus::Timeout);
    CHECK(check_termination({{1.0, 1.0}}, source, 0.05, 100.0, 100.0) ==
          TerminationStatus::Found);
    CHECK(check_termination({{3.0, 3.0}}, source, 0.05, 99.9, 100.0) ==
          TerminationStatus::Continue);
}
