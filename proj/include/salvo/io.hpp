#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "salvo/harness.hpp"
#include "salvo/nces.hpp"

namespace salvo {

using json = nlohmann::json;

namespace detail {

inline void write_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes;
    for (int i = 0; i < 8; ++i)
        bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes.data(), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
    std::array<char, 8> bytes;
    in.read(bytes.data(), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[static_cast<std::size_t>(i)]))
             << (8 * i);
    return v;
}

inline void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

}  // namespace detail

struct Checkpoint {
    Ecosystem ecosystem;
    PolicyLayout policy;
    double nominal_impact_angle = 0.0;  // Xi_d1
};

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'L', 'V', 'O', 'C', 'K', '1'};

/// Binary checkpoint: generation counter, learning-rate state, sigma, the
/// selected nominal impact angle, and all parameter vectors as little-endian
/// 64-bit reals. Resumable.
inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    out.write(kCheckpointMagic, 8);
    detail::write_u64(out, ckpt.ecosystem.generation);
    detail::write_f64(out, ckpt.ecosystem.sigma);
    detail::write_f64(out, ckpt.ecosystem.eta_alpha);
    detail::write_f64(out, ckpt.ecosystem.eta_alpha_min);
    detail::write_f64(out, ckpt.ecosystem.eta_alpha_max);
    detail::write_f64(out, ckpt.nominal_impact_angle);
    detail::write_u64(out, static_cast<std::uint64_t>(ckpt.policy.q1));
    detail::write_u64(out, static_cast<std::uint64_t>(ckpt.policy.q2));
    detail::write_u64(out, static_cast<std::uint64_t>(ckpt.ecosystem.params.size()));
    detail::write_u64(out, static_cast<std::uint64_t>(ckpt.ecosystem.dim()));
    for (const auto& p : ckpt.ecosystem.params)
        for (Eigen::Index d = 0; d < p.size(); ++d)
            detail::write_f64(out, p[d]);
    if (!out)
        throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());

    Checkpoint ckpt;
    ckpt.ecosystem.generation = detail::read_u64(in);
    ckpt.ecosystem.sigma = detail::read_f64(in);
    ckpt.ecosystem.eta_alpha = detail::read_f64(in);
    ckpt.ecosystem.eta_alpha_min = detail::read_f64(in);
    ckpt.ecosystem.eta_alpha_max = detail::read_f64(in);
    ckpt.nominal_impact_angle = detail::read_f64(in);
    ckpt.policy.q1 = static_cast<int>(detail::read_u64(in));
    ckpt.policy.q2 = static_cast<int>(detail::read_u64(in));
    const auto n = detail::read_u64(in);
    const auto dim = detail::read_u64(in);
    ckpt.ecosystem.params.assign(n, ParamVector(static_cast<Eigen::Index>(dim)));
    for (auto& p : ckpt.ecosystem.params)
        for (Eigen::Index d = 0; d < p.size(); ++d)
            p[d] = detail::read_f64(in);
    if (!in)
        throw std::runtime_error("load_checkpoint: truncated file " + path.string());
    return ckpt;
}

/// Minimal RFC-4180 writer: CRLF record separators, quoting only when needed.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_)
            throw std::runtime_error("CsvWriter: cannot open " + path.string());
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0)
                out_ << ',';
            out_ << escape(fields[i]);
        }
        out_ << "\r\n";
    }

    static std::string field(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static std::string field(std::uint64_t v) { return std::to_string(v); }
    static std::string field(int v) { return std::to_string(v); }

private:
    static std::string escape(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos)
            return s;
        std::string quoted = "\"";
        for (char c : s) {
            if (c == '"')
                quoted += '"';
            quoted += c;
        }
        quoted += '"';
        return quoted;
    }

    std::ofstream out_;
};

// --- JSON (de)serialization of configuration ---------------------------------
// Angles are degrees in files, radians in memory.

inline json to_json(const Scenario& s) {
    json j;
    j["tau"] = s.tau;
    j["frameskip"] = s.frameskip;
    j["time_limit"] = s.time_limit;
    j["t_go_saturation"] = s.t_go_saturation;
    j["seed"] = s.seed;
    for (const auto& m : s.missiles)
        j["missiles"].push_back({{"position", {m.position.x(), m.position.y()}},
                                 {"velocity", m.velocity},
                                 {"flight_path_angle_deg", rad_to_deg(m.flight_path_angle)}});
    for (const auto& b : s.missile_boxes)
        j["missile_boxes"].push_back({{"x", {b.x_min, b.x_max}},
                                      {"y", {b.y_min, b.y_max}},
                                      {"velocity", b.velocity},
                                      {"flight_path_angle_deg", rad_to_deg(b.flight_path_angle)}});
    j["target"] = {{"position", {s.target.position.x(), s.target.position.y()}},
                   {"velocity", s.target.velocity},
                   {"flight_path_angle_deg", rad_to_deg(s.target.flight_path_angle)},
                   {"maneuver",
                    {{"amplitude", s.target.maneuver.amplitude},
                     {"omega", s.target.maneuver.omega},
                     {"phase", s.target.maneuver.phase}}}};
    j["topology"] = {{"nodes", s.topology.size()}, {"edges", json::array()}};
    for (auto [a, b] : s.topology.edges())
        j["topology"]["edges"].push_back({a, b});
    j["impact_angles"] = {{"nominal_deg", rad_to_deg(s.impact_angles.nominal)},
                          {"relative_deg", json::array()}};
    for (double d : s.impact_angles.relative)
        j["impact_angles"]["relative_deg"].push_back(rad_to_deg(d));
    j["constraints"] = {{"a_lmax", s.constraints.a_lmax},
                        {"a_vmax", s.constraints.a_vmax},
                        {"v_max", s.constraints.v_max},
                        {"v_min", s.constraints.v_min}};
    j["reward"] = {{"gamma_a", s.reward.gamma_a}, {"gamma_t", s.reward.gamma_t},
                   {"xi_a", s.reward.xi_a},       {"xi_t", s.reward.xi_t},
                   {"k_a", s.reward.k_a},         {"k_t", s.reward.k_t},
                   {"beta_a", s.reward.beta_a},   {"beta_t", s.reward.beta_t}};
    j["guidance"] = {{"nav_constant", s.guidance.nav_constant}, {"gain", s.guidance.gain}};
    j["policy"] = {{"q1", s.policy.q1}, {"q2", s.policy.q2}};
    j["termination"] = {{"hit_threshold", s.termination.hit_threshold},
                        {"near_miss_window", s.termination.near_miss_window}};
    return j;
}

inline Scenario scenario_from_json(const json& j) {
    Scenario s;
    s.tau = j.value("tau", s.tau);
    s.frameskip = j.value("frameskip", s.frameskip);
    s.time_limit = j.value("time_limit", s.time_limit);
    s.t_go_saturation = j.value("t_go_saturation", s.t_go_saturation);
    s.seed = j.value("seed", s.seed);
    if (j.contains("missiles"))
        for (const auto& m : j.at("missiles"))
            s.missiles.push_back({Vec2{m.at("position").at(0).get<double>(),
                                       m.at("position").at(1).get<double>()},
                                  m.at("velocity").get<double>(),
                                  deg_to_rad(m.at("flight_path_angle_deg").get<double>())});
    if (j.contains("missile_boxes"))
        for (const auto& b : j.at("missile_boxes"))
            s.missile_boxes.push_back({b.at("x").at(0).get<double>(), b.at("x").at(1).get<double>(),
                                       b.at("y").at(0).get<double>(), b.at("y").at(1).get<double>(),
                                       b.at("velocity").get<double>(),
                                       deg_to_rad(b.at("flight_path_angle_deg").get<double>())});
    if (j.contains("target")) {
        const auto& t = j.at("target");
        s.target.position = Vec2{t.at("position").at(0).get<double>(), t.at("position").at(1).get<double>()};
        s.target.velocity = t.value("velocity", 0.0);
        s.target.flight_path_angle = deg_to_rad(t.value("flight_path_angle_deg", 0.0));
        if (t.contains("maneuver")) {
            const auto& mv = t.at("maneuver");
            s.target.maneuver = {mv.value("amplitude", 0.0), mv.value("omega", 0.0),
                                 mv.value("phase", 0.0)};
        }
    }
    if (j.contains("topology")) {
        std::vector<std::pair<int, int>> edges;
        for (const auto& e : j.at("topology").at("edges"))
            edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        s.topology = Topology(j.at("topology").at("nodes").get<int>(), edges);
    } else {
        s.topology = Topology::chain(s.missile_count());
    }
    if (j.contains("impact_angles")) {
        const auto& ia = j.at("impact_angles");
        s.impact_angles.nominal = deg_to_rad(ia.value("nominal_deg", 0.0));
        if (ia.contains("relative_deg"))
            for (const auto& d : ia.at("relative_deg"))
                s.impact_angles.relative.push_back(deg_to_rad(d.get<double>()));
    }
    if (j.contains("constraints")) {
        const auto& c = j.at("constraints");
        s.constraints.a_lmax = c.value("a_lmax", s.constraints.a_lmax);
        s.constraints.a_vmax = c.value("a_vmax", s.constraints.a_vmax);
        s.constraints.v_max = c.value("v_max", s.constraints.v_max);
        s.constraints.v_min = c.value("v_min", s.constraints.v_min);
    }
    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        s.reward.gamma_a = r.value("gamma_a", s.reward.gamma_a);
        s.reward.gamma_t = r.value("gamma_t", s.reward.gamma_t);
        s.reward.xi_a = r.value("xi_a", s.reward.xi_a);
        s.reward.xi_t = r.value("xi_t", s.reward.xi_t);
        s.reward.k_a = r.value("k_a", s.reward.k_a);
        s.reward.k_t = r.value("k_t", s.reward.k_t);
        s.reward.beta_a = r.value("beta_a", s.reward.beta_a);
        s.reward.beta_t = r.value("beta_t", s.reward.beta_t);
    }
    if (j.contains("guidance")) {
        s.guidance.nav_constant = j.at("guidance").value("nav_constant", s.guidance.nav_constant);
        s.guidance.gain = j.at("guidance").value("gain", s.guidance.gain);
    }
    if (j.contains("policy")) {
        s.policy.q1 = j.at("policy").value("q1", s.policy.q1);
        s.policy.q2 = j.at("policy").value("q2", s.policy.q2);
    }
    if (j.contains("termination")) {
        s.termination.hit_threshold =
            j.at("termination").value("hit_threshold", s.termination.hit_threshold);
        s.termination.near_miss_window =
            j.at("termination").value("near_miss_window", s.termination.near_miss_window);
    }
    return s;
}

inline json to_json(const TrainConfig& c) {
    return {{"generations", c.generations},
            {"population", c.population},
            {"workers", c.workers},
            {"sigma", c.sigma},
            {"eta_alpha", c.eta_alpha},
            {"eta_alpha_min", c.eta_alpha_min},
            {"eta_alpha_max", c.eta_alpha_max},
            {"adapt_every", c.adapt_every},
            {"adapt_l", c.adapt_l},
            {"bootstrap_samples", c.bootstrap_samples},
            {"plateau_patience", c.plateau_patience},
            {"plateau_epsilon", c.plateau_epsilon},
            {"mode", c.mode == GradientMode::rescaled ? "rescaled" : "plain"},
            {"seed", c.seed}};
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.generations = j.value("generations", c.generations);
    c.population = j.value("population", c.population);
    c.workers = j.value("workers", c.workers);
    c.sigma = j.value("sigma", c.sigma);
    c.eta_alpha = j.value("eta_alpha", c.eta_alpha);
    c.eta_alpha_min = j.value("eta_alpha_min", c.eta_alpha_min);
    c.eta_alpha_max = j.value("eta_alpha_max", c.eta_alpha_max);
    c.adapt_every = j.value("adapt_every", c.adapt_every);
    c.adapt_l = j.value("adapt_l", c.adapt_l);
    c.bootstrap_samples = j.value("bootstrap_samples", c.bootstrap_samples);
    c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
    c.plateau_epsilon = j.value("plateau_epsilon", c.plateau_epsilon);
    if (j.value("mode", "rescaled") == std::string("plain"))
        c.mode = GradientMode::plain;
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace salvo
