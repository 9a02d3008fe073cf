#pragma once

// Scenario files (YAML), per-step CSV records, summary JSON, diagnostics and
// track checkpoints. Every file is written to a temporary sibling first and
// renamed into place, so readers never observe a partial file.

#include "cellmb/errors.hpp"
#include "cellmb/sim.hpp"

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace cellmb {

namespace io_detail {

inline constexpr double deg_to_rad = std::numbers::pi / 180.0;

template <class T>
T get(const YAML::Node& node, const std::string& key, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return v.as<T>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const YAML::Node& node, const std::string& key, T fallback, const std::string& where) {
    if (!node || !node[key]) return fallback;
    return get<T>(node, key, where);
}

/// Mask from a list of strings, one per row (row 0 first), '#' or '1' marking
/// member cells. A missing node yields an all-true mask.
inline std::vector<bool> parse_mask(const YAML::Node& node, std::size_t cols, std::size_t rows, const std::string& where) {
    if (!node || node.IsNull()) return std::vector<bool>(cols * rows, true);
    const auto lines = node.as<std::vector<std::string>>();
    if (lines.size() != rows) throw ConfigError(where + ": expected " + std::to_string(rows) + " rows");
    std::vector<bool> mask(cols * rows, false);
    for (std::size_t r = 0; r < rows; ++r) {
        if (lines[r].size() != cols) throw ConfigError(where + ": row " + std::to_string(r) + " has the wrong width");
        for (std::size_t c = 0; c < cols; ++c) {
            const char ch = lines[r][c];
            if (ch == '#' || ch == '1') mask[r * cols + c] = true;
            else if (ch != '.' && ch != '0') throw ConfigError(where + ": unexpected character '" + std::string(1, ch) + "'");
        }
    }
    return mask;
}

/// Per-cell field given as a scalar (applied to cells where `where_set` is
/// true), a full list, or a map {value, cells: [[col,row], ...]}.
inline std::vector<double> parse_field(const YAML::Node& node, const CellGrid& grid, const std::vector<bool>& where_set,
                                       double fallback, const std::string& where) {
    const std::size_t P = grid.num_cells();
    std::vector<double> out(P, 0.0);
    if (!node || node.IsNull()) {
        for (std::size_t j = 0; j < P; ++j) out[j] = where_set[j] ? fallback : 0.0;
        return out;
    }
    try {
        if (node.IsScalar()) {
            const double v = node.as<double>();
            for (std::size_t j = 0; j < P; ++j) out[j] = where_set[j] ? v : 0.0;
        } else if (node.IsSequence()) {
            out = node.as<std::vector<double>>();
            if (out.size() != P) throw ConfigError(where + ": expected " + std::to_string(P) + " values");
        } else if (node.IsMap()) {
            const double v = get<double>(node, "value", where);
            for (const auto& cell : node["cells"]) {
                const auto cr = cell.as<std::vector<std::size_t>>();
                if (cr.size() != 2 || cr[0] >= grid.n_cols() || cr[1] >= grid.n_rows())
                    throw ConfigError(where + ": bad cell reference");
                out[grid.index(cr[0], cr[1])] = v;
            }
        } else {
            throw ConfigError(where + ": unsupported value");
        }
    } catch (const YAML::Exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return out;
}

inline Vec2 parse_vec2(const YAML::Node& node, const std::string& key, const std::string& where) {
    const auto v = get<std::vector<double>>(node, key, where);
    if (v.size() != 2) throw ConfigError(where + "." + key + ": expected two numbers");
    return {v[0], v[1]};
}

} // namespace io_detail

/// Builds a scenario from YAML text. Angles in files are degrees (road
/// direction, turn rates in deg/s); turn-rate noise is arcmin/s.
inline Scenario parse_scenario(const std::string& text) {
    using namespace io_detail;
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("scenario is not valid YAML: ") + e.what());
    }
    if (!root.IsMap()) throw ConfigError("scenario must be a mapping");

    Scenario sc;
    sc.name = get_or<std::string>(root, "name", "scenario", "scenario");
    sc.duration = get<int>(root, "duration", "scenario");
    sc.mc_runs = get_or<std::size_t>(root, "mc_runs", 1, "scenario");
    sc.master_seed = get_or<std::uint64_t>(root, "master_seed", 0, "scenario");
    sc.truth_noise_scale = get_or<double>(root, "truth_noise_scale", 1.0, "scenario");
    sc.estimate_threshold = get_or<double>(root, "estimate_threshold", 0.5, "scenario");
    sc.pims_lattice = get_or<std::size_t>(root, "pims_lattice", 16, "scenario");

    const YAML::Node g = root["grid"];
    if (!g) throw ConfigError("scenario: missing key 'grid'");
    const auto cols = get<std::size_t>(g, "cols", "grid");
    const auto rows = get<std::size_t>(g, "rows", "grid");
    const Vec2 origin = g["origin"] ? parse_vec2(g, "origin", "grid") : Vec2::Zero();
    sc.grid = CellGrid(origin, parse_vec2(g, "cell_size", "grid"), cols, rows, parse_mask(g["roi"], cols, rows, "grid.roi"),
                       parse_mask(g["for"], cols, rows, "grid.for"));
    const std::vector<bool> all(sc.grid.num_cells(), true);

    const YAML::Node s = root["sensor"];
    if (!s) throw ConfigError("scenario: missing key 'sensor'");
    sc.sensor = SensorModel::uniform(sc.grid, get<double>(s, "meas_var", "sensor"), 1.0,
                                     get<double>(s, "clutter_per_frame", "sensor"));
    sc.sensor.p_detect = parse_field(s["p_detect"], sc.grid, all, 0.9, "sensor.p_detect");
    for (double p : sc.sensor.p_detect)
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sensor.p_detect: values must lie in [0,1]");

    const YAML::Node m = root["motion"];
    sc.motion.dt = get_or<double>(m, "dt", 1.0, "motion");
    sc.motion.sigma_t = get_or<double>(m, "sigma_t", 1.0, "motion");
    sc.motion.sigma_n = get_or<double>(m, "sigma_n", 1.0, "motion");
    sc.motion.sigma_turn_arcmin = get_or<double>(m, "sigma_turn_arcmin", 30.0, "motion");
    sc.motion.p_survival = get_or<double>(m, "p_survival", 0.99, "motion");
    if (m && m["road_angle_deg"]) {
        sc.motion.road_angle = parse_field(m["road_angle_deg"], sc.grid, all, 0.0, "motion.road_angle_deg");
        for (double& a : sc.motion.road_angle) a *= deg_to_rad;
    }

    const YAML::Node u = root["undiscovered"];
    sc.lambda_init = parse_field(u ? u["lambda_init"] : YAML::Node(), sc.grid, sc.grid.roi_mask(), 0.0,
                                 "undiscovered.lambda_init");
    sc.undiscovered.lambda_birth = parse_field(u ? u["lambda_birth"] : YAML::Node(), sc.grid, sc.grid.roi_mask(), 0.0,
                                               "undiscovered.lambda_birth");
    sc.undiscovered.p_survival = get_or<double>(u, "p_survival", 1.0, "undiscovered");
    const YAML::Node diff = u ? u["diffusion"] : YAML::Node();
    sc.undiscovered.transition = diffusion_transition(sc.grid, get_or<double>(diff, "stay", 0.6, "undiscovered.diffusion"),
                                                      get_or<double>(diff, "move", 0.1, "undiscovered.diffusion"));

    const YAML::Node p = root["policy"];
    sc.policy.kind = parse_policy(get_or<std::string>(p, "kind", "cellmb", "policy"));
    if (p && p["fov"]) {
        const auto f = p["fov"].as<std::vector<std::size_t>>();
        if (f.size() != 2) throw ConfigError("policy.fov: expected [width, height] in cells");
        sc.policy.fov_width = f[0];
        sc.policy.fov_height = f[1];
    }
    if (p && p["max_step_cells"]) sc.policy.max_step_cells = p["max_step_cells"].as<std::size_t>();

    const YAML::Node t = root["tracker"];
    auto& tc = sc.tracker;
    tc.k_best = get_or<std::size_t>(t, "k_best", tc.k_best, "tracker");
    tc.birth_existence = get_or<double>(t, "birth_existence", tc.birth_existence, "tracker");
    tc.birth_velocity_sd = get_or<double>(t, "birth_velocity_sd", tc.birth_velocity_sd, "tracker");
    tc.birth_turn_sd_arcmin = get_or<double>(t, "birth_turn_sd_arcmin", tc.birth_turn_sd_arcmin, "tracker");
    tc.gate_distance = get_or<double>(t, "gate_distance", tc.gate_distance, "tracker");
    tc.prune_weight = get_or<double>(t, "prune_weight", tc.prune_weight, "tracker");
    tc.merge_distance = get_or<double>(t, "merge_distance", tc.merge_distance, "tracker");
    tc.max_components = get_or<std::size_t>(t, "max_components", tc.max_components, "tracker");
    tc.min_existence = get_or<double>(t, "min_existence", tc.min_existence, "tracker");
    tc.split_max_depth = get_or<int>(t, "split_max_depth", tc.split_max_depth, "tracker");

    const YAML::Node q = root["quadrature"];
    sc.quadrature.lattice_n = get_or<std::size_t>(q, "lattice", sc.quadrature.lattice_n, "quadrature");
    sc.quadrature.r_max = get_or<std::size_t>(q, "r_max", sc.quadrature.r_max, "quadrature");
    if (q && q["eps_min"]) sc.quadrature.eps_min = q["eps_min"].as<double>();

    const YAML::Node gp = root["gospa"];
    sc.gospa.c = get_or<double>(gp, "c", sc.gospa.c, "gospa");
    sc.gospa.p = get_or<double>(gp, "p", sc.gospa.p, "gospa");
    sc.gospa.alpha = get_or<double>(gp, "alpha", sc.gospa.alpha, "gospa");

    std::size_t i = 0;
    for (const auto& o : root["objects"]) {
        const std::string where = "objects[" + std::to_string(i++) + "]";
        ObjectScript script;
        script.birth_step = get<int>(o, "birth", where);
        script.death_step = get<int>(o, "death", where);
        const auto st = get<std::vector<double>>(o, "state", where);
        if (st.size() != 5) throw ConfigError(where + ".state: expected [x, y, vx, vy, turn_deg_s]");
        script.initial << st[0], st[1], st[2], st[3], st[4] * deg_to_rad;
        for (const auto& c : o["controls"]) {
            ControlSegment seg;
            seg.step = get<int>(c, "step", where + ".controls");
            seg.turn_rate = get_or<double>(c, "turn_deg_s", 0.0, where + ".controls") * deg_to_rad;
            if (c["speed"]) seg.speed = c["speed"].as<double>();
            script.controls.push_back(seg);
        }
        sc.objects.push_back(std::move(script));
    }

    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

/// Writes `content` to `path` through a temporary file in the same directory
/// followed by a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw std::runtime_error("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

inline constexpr const char* step_csv_header = "step,policy,run,fov_col,fov_row,gospa,loc,nmissed,nfalse,ntracks,sum_lambda";

inline std::string step_csv(const std::vector<RunResult>& runs) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << step_csv_header << '\n';
    for (const auto& r : runs)
        for (const auto& s : r.steps)
            os << s.step << ',' << to_string(r.policy) << ',' << r.run << ',' << s.fov.anchor_col << ','
               << s.fov.anchor_row << ',' << s.gospa << ',' << s.localization << ',' << s.n_missed << ','
               << s.n_false << ',' << s.n_tracks << ',' << s.sum_lambda << '\n';
    return os.str();
}

inline std::string diagnostics_csv(const std::vector<RunResult>& runs, const CellGrid& grid) {
    std::ostringstream os;
    os << std::setprecision(10);
    os << "step,policy,run,cell,col,row,discovered,undiscovered,r_v,r_w,violation\n";
    for (const auto& r : runs)
        for (const auto& d : r.diagnostics)
            for (std::size_t j = 0; j < grid.num_cells(); ++j)
                os << d.step << ',' << to_string(r.policy) << ',' << r.run << ',' << j << ',' << grid.col(j) << ','
                   << grid.row(j) << ',' << d.gains.discovered[j] << ',' << d.gains.undiscovered[j] << ','
                   << d.gains.r_v[j] << ',' << d.gains.r_w[j] << ',' << d.gains.violation[j] << '\n';
    return os.str();
}

inline nlohmann::json to_json(const MeanCi& m) { return {{"mean", m.mean}, {"ci95", m.half_width}}; }

inline nlohmann::json to_json(const PolicySummary& s) {
    return {{"policy", std::string(to_string(s.policy))},
            {"runs", s.runs},
            {"steps", s.steps},
            {"gospa", to_json(s.gospa)},
            {"localization", to_json(s.localization)},
            {"missed", to_json(s.missed)},
            {"false", to_json(s.false_tracks)}};
}

inline std::string summary_json(const Scenario& sc, const std::vector<PolicySummary>& rows,
                                 const std::vector<ComparisonRow>& comparison = {}) {
    nlohmann::json j;
    j["scenario"] = sc.name;
    j["master_seed"] = sc.master_seed;
    j["mc_runs"] = sc.mc_runs;
    j["duration"] = sc.duration;
    j["policies"] = nlohmann::json::array();
    for (const auto& r : rows) j["policies"].push_back(to_json(r));
    if (!comparison.empty()) {
        j["improvement_over_random_percent"] = nlohmann::json::array();
        for (const auto& c : comparison)
            j["improvement_over_random_percent"].push_back({{"policy", std::string(to_string(c.summary.policy))},
                                                            {"gospa", c.gospa_improvement},
                                                            {"missed", c.missed_improvement},
                                                            {"false", c.false_improvement}});
    }
    return j.dump(2) + "\n";
}

/// YAML snapshot of the track set and undiscovered intensity per step.
inline std::string checkpoint_yaml(const RunResult& run) {
    YAML::Emitter out;
    out << YAML::BeginMap << YAML::Key << "run" << YAML::Value << run.run << YAML::Key << "policy" << YAML::Value
        << std::string(to_string(run.policy)) << YAML::Key << "steps" << YAML::Value << YAML::BeginSeq;
    for (const auto& cp : run.checkpoints) {
        out << YAML::BeginMap << YAML::Key << "step" << YAML::Value << cp.step;
        out << YAML::Key << "lambda" << YAML::Value << YAML::Flow << cp.lambda;
        out << YAML::Key << "tracks" << YAML::Value << YAML::BeginSeq;
        for (const auto& t : cp.tracks.tracks) {
            out << YAML::BeginMap << YAML::Key << "label" << YAML::Value << YAML::Flow << YAML::BeginSeq
                << t.label.birth_step << t.label.index << YAML::EndSeq;
            out << YAML::Key << "existence" << YAML::Value << t.existence;
            out << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
            for (const auto& c : t.density.components()) {
                std::vector<double> mean(c.mean.data(), c.mean.data() + c.mean.size());
                std::vector<double> cov(c.cov.data(), c.cov.data() + c.cov.size());
                out << YAML::BeginMap << YAML::Key << "weight" << YAML::Value << c.weight << YAML::Key << "mean"
                    << YAML::Value << YAML::Flow << mean << YAML::Key << "cov" << YAML::Value << YAML::Flow << cov
                    << YAML::EndMap;
            }
            out << YAML::EndSeq << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

} // namespace cellmb
