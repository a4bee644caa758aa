#include "swarm/bench.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <thread>

#include <json.hpp>

#include "swarm/version.hpp"

namespace swarm::bench {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// config

namespace {

json overrides_to_json(const Overrides& o) {
    json j = json::object();
    auto put = [&](const char* k, const auto& v) {
        if (v.has_value()) j[k] = *v;
    };
    put("speed", o.speed);
    put("t_first", o.t_first);
    put("t_later", o.t_later);
    put("n_max", o.n_max);
    put("epsilon", o.epsilon);
    put("quadrature_nodes", o.quadrature_nodes);
    put("delta_theta", o.delta_theta);
    put("t_max", o.t_max);
    put("noise_sd", o.noise_sd);
    put("swath", o.swath);
    put("mapping_lattice", o.mapping_lattice);
    return j;
}

void overrides_from_json(const json& j, Overrides& o) {
    auto get = [&](const char* k, auto& v) {
        if (j.contains(k)) v = j.at(k).get<typename std::decay_t<decltype(v)>::value_type>();
    };
    get("speed", o.speed);
    get("t_first", o.t_first);
    get("t_later", o.t_later);
    get("n_max", o.n_max);
    get("epsilon", o.epsilon);
    get("quadrature_nodes", o.quadrature_nodes);
    get("delta_theta", o.delta_theta);
    get("t_max", o.t_max);
    get("noise_sd", o.noise_sd);
    get("swath", o.swath);
    get("mapping_lattice", o.mapping_lattice);
}

std::string stamp_lines(const ExperimentConfig& cfg) {
    json seeds = cfg.seeds;
    std::string s;
    s += std::string("# swarmsearch ") + kVersion + "\n";
    s += "# seeds " + seeds.dump() + "\n";
    s += "# config " + cfg.to_json_text() + "\n";
    return s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

std::string ExperimentConfig::to_json_text() const {
    json j{{"case", case_id},     {"policy", policy}, {"alpha", alpha},
           {"robots", n_robots},  {"alphas", alphas}, {"sizes", sizes},
           {"seeds", seeds},      {"out", out_dir},   {"cases_path", cases_path},
           {"overrides", overrides_to_json(overrides)}};
    return j.dump();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    cfg.case_id = j.at("case").get<int>();
    cfg.policy = j.at("policy").get<std::string>();
    cfg.alpha = j.at("alpha").get<double>();
    cfg.n_robots = j.at("robots").get<int>();
    cfg.alphas = j.at("alphas").get<std::vector<double>>();
    cfg.sizes = j.at("sizes").get<std::vector<int>>();
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.out_dir = j.at("out").get<std::string>();
    cfg.cases_path = j.at("cases_path").get<std::string>();
    overrides_from_json(j.at("overrides"), cfg.overrides);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (case_id < 1 || case_id > 4) throw std::invalid_argument("case must be 1..4");
    if (policy != "bayes" && policy != "random" && policy != "exhaustive")
        throw std::invalid_argument("policy must be bayes, random or exhaustive");
    if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
    if (n_robots < 1) throw std::invalid_argument("robots must be >= 1");
    for (double a : alphas)
        if (a < 0.0 || a > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("sizes must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("need at least one seed");
    if (overrides.epsilon.has_value() && *overrides.epsilon <= 0.0)
        throw std::invalid_argument("epsilon must be positive");
    if (overrides.speed.has_value() && *overrides.speed <= 0.0)
        throw std::invalid_argument("speed must be positive");
}

void ExperimentConfig::apply_override(const std::string& key_value) {
    const auto eq = key_value.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + key_value);
    const std::string key = key_value.substr(0, eq);
    const std::string val = key_value.substr(eq + 1);
    auto as_double = [&] { return std::stod(val); };
    auto as_int = [&] { return std::stoi(val); };

    if (key == "speed" || key == "V")
        overrides.speed = as_double();
    else if (key == "t_first" || key == "T_first")
        overrides.t_first = as_double();
    else if (key == "t_later" || key == "T_later")
        overrides.t_later = as_double();
    else if (key == "n_max" || key == "N_max")
        overrides.n_max = static_cast<std::uint64_t>(std::stoull(val));
    else if (key == "epsilon")
        overrides.epsilon = as_double();
    else if (key == "quadrature_nodes")
        overrides.quadrature_nodes = as_int();
    else if (key == "delta_theta")
        overrides.delta_theta = as_double();
    else if (key == "t_max" || key == "T_max")
        overrides.t_max = as_double();
    else if (key == "noise_sd")
        overrides.noise_sd = as_double();
    else if (key == "swath")
        overrides.swath = as_double();
    else if (key == "mapping_lattice")
        overrides.mapping_lattice = as_int();
    else
        throw std::invalid_argument("unknown override key: " + key);
}

CaseStudy resolve_case(const ExperimentConfig& cfg) {
    std::vector<CaseStudy> cases = cfg.cases_path.empty()
                                       ? load_cases_json(default_cases_json())
                                       : load_cases_file(cfg.cases_path);
    for (auto& cs : cases)
        if (cs.id == cfg.case_id) return cs;
    throw std::out_of_range("case id not in config file");
}

RunConfig resolve_run_config(const ExperimentConfig& cfg) {
    RunConfig rc;
    const auto& o = cfg.overrides;
    if (o.speed) rc.speed = *o.speed;
    if (o.t_first) rc.t_first = *o.t_first;
    if (o.t_later) rc.t_later = *o.t_later;
    if (o.n_max) rc.n_max = static_cast<std::size_t>(*o.n_max);
    if (o.epsilon) rc.epsilon = *o.epsilon;
    if (o.quadrature_nodes) rc.quadrature_nodes = *o.quadrature_nodes;
    if (o.delta_theta) rc.delta_theta = *o.delta_theta;
    if (o.t_max) rc.t_max = *o.t_max;
    if (o.noise_sd) rc.noise_sd = *o.noise_sd;
    if (o.mapping_lattice) rc.mapping_lattice = *o.mapping_lattice;
    rc.validate();
    return rc;
}

Policy resolve_policy(const ExperimentConfig& cfg) {
    if (cfg.policy == "bayes") return BayesPolicy{cfg.alpha};
    if (cfg.policy == "random") return RandomWalkPolicy{};
    ExhaustivePolicy p;
    if (cfg.overrides.swath) p.swath = *cfg.overrides.swath;
    return p;
}

int worker_count() {
    if (const char* env = std::getenv("SWARMSEARCH_WORKERS")) {
        int n = 0;
        const auto res = std::from_chars(env, env + std::strlen(env), n);
        if (res.ec == std::errc{} && n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

/// Run `count` independent jobs on the pool; `fn(i)` must only touch slot i
/// of its output. Output order is by index, never by completion.
void run_jobs(int count, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

json metrics_to_json(const Metrics& m) {
    json j{{"outcome", m.outcome},
           {"completion_time", m.completion_time},
           {"mean_decisions", m.mean_decisions},
           {"mean_knowledge_gain", m.mean_knowledge_gain},
           {"total_bytes", m.total_bytes},
           {"n_robots", m.n_robots}};
    j["mapping_error"] = std::isfinite(m.mapping_error) ? json(m.mapping_error) : json();
    return j;
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg) {
    cfg.validate();
    const CaseStudy cs = resolve_case(cfg);
    const RunConfig rc = resolve_run_config(cfg);
    const Policy policy = resolve_policy(cfg);
    const std::uint64_t seed = cfg.seeds.front();

    const RunResult result = run(cs, policy, cfg.n_robots, seed, rc);
    const Metrics metrics = collect_metrics(result);

    fs::create_directories(cfg.out_dir);
    std::string log;
    for (const auto& line : result.log_lines) log += line + "\n";
    write_file(fs::path(cfg.out_dir) / "runlog.ndjson", log);
    write_file(fs::path(cfg.out_dir) / "trajectory.csv", stamp_lines(cfg) + result.trajectory_csv);

    json mj{{"version", kVersion},
            {"seed", seed},
            {"config", json::parse(cfg.to_json_text())},
            {"metrics", metrics_to_json(metrics)}};
    write_file(fs::path(cfg.out_dir) / "metrics.json", mj.dump(2) + "\n");

    return result.outcome == Outcome::Found ? 0 : 2;
}

int cmd_sweep_alpha(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.alphas.empty()) throw std::invalid_argument("sweep-alpha: empty alpha list");
    const CaseStudy cs = resolve_case(cfg);
    const RunConfig rc = resolve_run_config(cfg);

    struct Cell {
        double alpha;
        std::uint64_t seed;
        Metrics metrics;
    };
    std::vector<Cell> cells;
    for (double a : cfg.alphas)
        for (auto seed : cfg.seeds) cells.push_back({a, seed, {}});

    run_jobs(static_cast<int>(cells.size()), worker_count(), [&](int i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        c.metrics = collect_metrics(run(cs, BayesPolicy{c.alpha}, cfg.n_robots, c.seed, rc));
    });

    std::string csv = stamp_lines(cfg);
    csv += "row_type,alpha,n_robots,seed,completion_time,mapping_error,success\n";
    for (const auto& c : cells) {
        csv += "result," + format_double(c.alpha) + "," + std::to_string(cfg.n_robots) + "," +
               std::to_string(c.seed) + "," + format_double(c.metrics.completion_time) + "," +
               format_double(c.metrics.mapping_error) + "," +
               (c.metrics.outcome == "found" ? "1" : "0") + "\n";
    }
    for (double a : cfg.alphas) {
        double time_sum = 0.0, err_sum = 0.0, found = 0.0, n = 0.0;
        for (const auto& c : cells) {
            if (c.alpha != a) continue;
            time_sum += c.metrics.completion_time;
            err_sum += c.metrics.mapping_error;
            found += c.metrics.outcome == "found" ? 1.0 : 0.0;
            n += 1.0;
        }
        csv += "summary," + format_double(a) + "," + std::to_string(cfg.n_robots) + ",," +
               format_double(time_sum / n) + "," + format_double(err_sum / n) + "," +
               format_double(found / n) + "\n";
    }
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "sweep_alpha.csv", csv);
    return 0;
}

int cmd_sweep_size(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.sizes.empty()) throw std::invalid_argument("sweep-size: empty sizes list");
    const CaseStudy cs = resolve_case(cfg);
    const RunConfig rc = resolve_run_config(cfg);

    struct Cell {
        int size;
        std::uint64_t seed;
        Metrics metrics;
    };
    std::vector<Cell> cells;
    for (int s : cfg.sizes)
        for (auto seed : cfg.seeds) cells.push_back({s, seed, {}});

    run_jobs(static_cast<int>(cells.size()), worker_count(), [&](int i) {
        auto& c = cells[static_cast<std::size_t>(i)];
        c.metrics = collect_metrics(run(cs, BayesPolicy{cfg.alpha}, c.size, c.seed, rc));
    });

    std::string csv = stamp_lines(cfg);
    csv += "n_robots,seed,completion_time,mean_knowledge_gain,mean_decisions,mapping_error,success\n";
    for (const auto& c : cells) {
        csv += std::to_string(c.size) + "," + std::to_string(c.seed) + "," +
               format_double(c.metrics.completion_time) + "," +
               format_double(c.metrics.mean_knowledge_gain) + "," +
               format_double(c.metrics.mean_decisions) + "," +
               format_double(c.metrics.mapping_error) + "," +
               (c.metrics.outcome == "found" ? "1" : "0") + "\n";
    }
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "sweep_size.csv", csv);
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    const CaseStudy cs = resolve_case(cfg);
    const RunConfig rc = resolve_run_config(cfg);

    // one deterministic cell per policy seed; random walk gets every seed
    const Metrics bayes =
        collect_metrics(run(cs, BayesPolicy{cfg.alpha}, cfg.n_robots, cfg.seeds.front(), rc));
    ExhaustivePolicy ex;
    if (cfg.overrides.swath) ex.swath = *cfg.overrides.swath;
    const Metrics exhaustive = collect_metrics(run(cs, ex, cfg.n_robots, cfg.seeds.front(), rc));

    std::vector<Metrics> random_cells(cfg.seeds.size());
    run_jobs(static_cast<int>(cfg.seeds.size()), worker_count(), [&](int i) {
        random_cells[static_cast<std::size_t>(i)] = collect_metrics(
            run(cs, RandomWalkPolicy{}, cfg.n_robots, cfg.seeds[static_cast<std::size_t>(i)], rc));
    });
    int random_found = 0;
    double random_best = std::numeric_limits<double>::infinity();
    for (const auto& m : random_cells) {
        if (m.outcome == "found") {
            ++random_found;
            random_best = std::min(random_best, m.completion_time);
        }
    }

    std::string csv = stamp_lines(cfg);
    csv += "case,algorithm,total_time,success_rate\n";
    auto line = [&](const std::string& name, double t, const std::string& rate) {
        csv += std::to_string(cfg.case_id) + "," + name + "," +
               (std::isfinite(t) ? format_double(t) : "") + "," + rate + "\n";
    };
    line("bayes", bayes.completion_time, bayes.outcome == "found" ? "1/1" : "0/1");
    line("random", random_found > 0 ? random_best : std::numeric_limits<double>::quiet_NaN(),
         std::to_string(random_found) + "/" + std::to_string(cfg.seeds.size()));
    line("exhaustive", exhaustive.completion_time, exhaustive.outcome == "found" ? "1/1" : "0/1");
    fs::create_directories(cfg.out_dir);
    write_file(fs::path(cfg.out_dir) / "compare.csv", csv);

    std::cout << "case " << cfg.case_id << ": bayes " << bayes.completion_time << " s ("
              << bayes.outcome << ")\n";
    std::cout << "case " << cfg.case_id << ": random best "
              << (random_found > 0 ? format_double(random_best) : "-") << " s (" << random_found
              << "/" << cfg.seeds.size() << ")\n";
    std::cout << "case " << cfg.case_id << ": exhaustive " << exhaustive.completion_time
              << " s (" << exhaustive.outcome << ")\n";
    if (bayes.outcome == "found") {
        std::cout << "speedup vs exhaustive: "
                  << format_double(exhaustive.completion_time / bayes.completion_time) << "x\n";
        if (random_found > 0)
            std::cout << "speedup vs random (best of " << cfg.seeds.size()
                      << "): " << format_double(random_best / bayes.completion_time) << "x\n";
    }
    return 0;
}

int cmd_dump_packet(int case_id, const Vec2& waypoint,
                    const std::vector<Observation>& observations) {
    ExperimentConfig cfg;
    cfg.case_id = case_id;
    const CaseStudy cs = resolve_case(cfg);
    double amp_sum = 0.0;
    for (const auto& c : cs.field.components) amp_sum += c.amplitude;
    const ValueRange range{std::min(0.0, -10.0 * cs.noise_sd), amp_sum * 1.01 + 10.0 * cs.noise_sd};

    Packet p;
    p.waypoint = waypoint;
    p.observations = observations;
    const auto bytes = encode(p, cs.field.arena, range);

    std::printf("%zu bytes (4 + 6*%zu)\n", bytes.size(), observations.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        std::printf("%02x%s", bytes[i], (i + 1) % 16 == 0 || i + 1 == bytes.size() ? "\n" : " ");
    return 0;
}

}  // namespace swarm::bench
