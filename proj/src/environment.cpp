#include "swarm/environment.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace swarm {

using nlohmann::json;

double SignalField::value(const Vec2& x) const {
    double acc = 0.0;
    for (const auto& c : components) {
        const Vec2 d = x - c.center;
        // 2x2 inverse in closed form; covariances are validated SPD on load
        const double det = c.covariance(0, 0) * c.covariance(1, 1) -
                           c.covariance(0, 1) * c.covariance(1, 0);
        const double q = (c.covariance(1, 1) * d.x() * d.x() -
                          2.0 * c.covariance(0, 1) * d.x() * d.y() +
                          c.covariance(0, 0) * d.y() * d.y()) /
                         det;
        acc += c.amplitude * std::exp(-0.5 * q);
    }
    return acc;
}

bool SignalField::verify_global_max(int lattice) const {
    const double peak = value(global_max_location);
    const Vec2 ext = arena.extent();
    for (int i = 0; i < lattice; ++i) {
        for (int j = 0; j < lattice; ++j) {
            const Vec2 p(arena.lo.x() + ext.x() * i / (lattice - 1),
                         arena.lo.y() + ext.y() * j / (lattice - 1));
            if (value(p) > peak) return false;
        }
    }
    return true;
}

double field_value(const SignalField& field, const Vec2& x) { return field.value(x); }

namespace {

Vec2 vec2_of(const json& a) { return {a.at(0).get<double>(), a.at(1).get<double>()}; }

CaseStudy case_of(const json& j) {
    CaseStudy cs;
    cs.id = j.at("id").get<int>();
    cs.field.arena.lo = vec2_of(j.at("arena").at("min"));
    cs.field.arena.hi = vec2_of(j.at("arena").at("max"));
    for (const auto& cj : j.at("components")) {
        GaussianComponent c;
        c.center = vec2_of(cj.at("center"));
        c.amplitude = cj.at("amplitude").get<double>();
        const auto& m = cj.at("cov");
        c.covariance << m.at(0).at(0).get<double>(), m.at(0).at(1).get<double>(),
            m.at(1).at(0).get<double>(), m.at(1).at(1).get<double>();
        const double det = c.covariance.determinant();
        if (c.amplitude <= 0.0 || det <= 0.0 || c.covariance(0, 0) <= 0.0)
            throw std::runtime_error("case config: component must have positive amplitude and SPD covariance");
        cs.field.components.push_back(c);
    }
    cs.field.global_max_location = vec2_of(j.at("global_max"));
    cs.start = vec2_of(j.at("start"));
    cs.epsilon = j.at("epsilon").get<double>();
    cs.t_max_bayes = j.at("t_max_bayes").get<double>();
    cs.t_max_random = j.at("t_max_random").get<double>();
    cs.noise_sd = j.at("noise_sd").get<double>();
    if (!cs.field.arena.contains(cs.start))
        throw std::runtime_error("case config: start position outside arena");
    return cs;
}

}  // namespace

std::vector<CaseStudy> load_cases_json(const std::string& json_text) {
    const json doc = json::parse(json_text);
    std::vector<CaseStudy> cases;
    for (const auto& j : doc.at("cases")) cases.push_back(case_of(j));
    return cases;
}

std::vector<CaseStudy> load_cases_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open case config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_cases_json(ss.str());
}

CaseStudy canonical_case(int id) {
    for (auto& cs : load_cases_json(default_cases_json()))
        if (cs.id == id) return cs;
    throw std::out_of_range("unknown case study id " + std::to_string(id));
}

std::vector<Observation> sample_along(const SignalField& field, const Vec2& from, const Vec2& to,
                                      double speed, double rate, double t0, double noise_sd,
                                      std::mt19937_64& rng, int origin_robot) {
    if (speed <= 0.0 || rate <= 0.0)
        throw std::invalid_argument("sample_along: speed and rate must be positive");
    const double length = (to - from).norm();
    const double duration = length / speed;
    const int count = static_cast<int>(std::floor(duration * rate + 1e-9));
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    if (count <= 0) return out;

    const Vec2 dir = (to - from) / length;
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (int i = 1; i <= count; ++i) {
        const double dt = static_cast<double>(i) / rate;
        Observation o;
        o.position = from + speed * dt * dir;
        o.value = field.value(o.position) + (noise_sd > 0.0 ? noise(rng) : 0.0);
        o.time = t0 + dt;
        o.origin_robot = origin_robot;
        out.push_back(o);
    }
    return out;
}

double mapping_error(const GpModel& model, const SignalField& field, int lattice) {
    if (lattice < 2) throw std::invalid_argument("mapping_error: lattice must be >= 2");
    const Vec2 ext = field.arena.extent();
    double sq = 0.0;
    for (int i = 0; i < lattice; ++i) {
        for (int j = 0; j < lattice; ++j) {
            const Vec2 p(field.arena.lo.x() + ext.x() * i / (lattice - 1),
                         field.arena.lo.y() + ext.y() * j / (lattice - 1));
            const double e = model.posterior_mean(p) - field.value(p);
            sq += e * e;
        }
    }
    return std::sqrt(sq / (static_cast<double>(lattice) * lattice));
}

}  // namespace swarm
