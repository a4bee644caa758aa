#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

#include "swarm/gp.hpp"
#include "swarm/observation.hpp"

namespace swarm {

/// One anisotropic Gaussian bump of the ground-truth signal.
struct GaussianComponent {
    Vec2 center{0.0, 0.0};
    double amplitude = 1.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

/// Ground-truth signal: a positive sum of Gaussian components over an arena.
struct SignalField {
    std::vector<GaussianComponent> components;
    BoundingBox arena;
    Vec2 global_max_location{0.0, 0.0};

    double value(const Vec2& x) const;

    /// True when global_max_location beats every cell of an n x n lattice.
    bool verify_global_max(int lattice = 500) const;
};

/// A benchmark environment plus its termination settings.
struct CaseStudy {
    int id = 0;
    SignalField field;
    Vec2 start{0.0, 0.0};
    double epsilon = 0.05;
    double t_max_bayes = 0.0;
    double t_max_random = 0.0;
    double noise_sd = 0.0;
};

/// The environment definitions compiled into the library (same content as
/// fixtures/cases.json).
const std::string& default_cases_json();

std::vector<CaseStudy> load_cases_json(const std::string& json_text);
std::vector<CaseStudy> load_cases_file(const std::string& path);

/// Case study by id from the embedded definitions. Throws std::out_of_range
/// for unknown ids.
CaseStudy canonical_case(int id);

double field_value(const SignalField& field, const Vec2& x);

/// Observations taken at `rate` Hz while travelling the straight leg
/// from -> to at constant speed, starting one sampling interval after t0.
/// Values are field values plus iid Gaussian noise.
std::vector<Observation> sample_along(const SignalField& field, const Vec2& from, const Vec2& to,
                                      double speed, double rate, double t0, double noise_sd,
                                      std::mt19937_64& rng, int origin_robot);

/// RMSE between the model's posterior mean and the true field over a uniform
/// lattice x lattice grid spanning the arena (bounds inclusive).
double mapping_error(const GpModel& model, const SignalField& field, int lattice);

}  // namespace swarm
