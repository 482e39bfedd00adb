#include "ktlab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ktlab {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

} // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "system") c.system = val;
            else if (key == "n") c.n = std::stoi(val);
            else if (key == "mu") c.mu = std::stod(val);
            else if (key == "eps") c.eps = std::stod(val);
            else if (key == "profile.width_x") c.profile_width_x = std::stod(val);
            else if (key == "profile.width_v") c.profile_width_v = std::stod(val);
            else if (key == "profile.center_x") c.profile_center_x = parse_list(val);
            else if (key == "profile.center_v") c.profile_center_v = parse_list(val);
            else if (key == "grid.nx") c.grid_nx = std::stoi(val);
            else if (key == "grid.nv") c.grid_nv = std::stoi(val);
            else if (key == "grid.x_extent") c.grid_x_extent = std::stod(val);
            else if (key == "grid.v_extent") c.grid_v_extent = std::stod(val);
            else if (key == "grid.frame") c.grid_frame = val;
            else if (key == "grid.macro_n") c.macro_n = std::stoi(val);
            else if (key == "grid.macro_margin") c.macro_margin = std::stod(val);
            else if (key == "particles.count") c.particles_count = std::stoll(val);
            else if (key == "particles.grid_n") c.particles_grid_n = std::stoi(val);
            else if (key == "dt.safety") c.dt_safety = std::stod(val);
            else if (key == "dt.max") c.dt_max = std::stod(val);
            else if (key == "t_end") c.t_end = std::stod(val);
            else if (key == "observers.series_every") c.series_every = std::stod(val);
            else if (key == "observers.energy_every") c.energy_every = std::stod(val);
            else if (key == "observers.energy_nmax") c.energy_nmax = std::stoi(val);
            else if (key == "observers.snapshots") c.snapshot_times = parse_list(val);
            else if (key == "force.enabled") c.force_enabled = parse_bool(val);
            else if (key == "modified.enabled") c.modified_enabled = parse_bool(val);
            else if (key == "seed") c.seed = std::stoull(val);
            else if (key == "out_dir") c.out_dir = val;
            else
                throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + " (" + key +
                                        "): " + e.what());
        }
    }
    return c;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::serialize() const {
    std::string s;
    auto kv = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
    kv("system", system);
    kv("n", std::to_string(n));
    kv("mu", fmt(mu));
    kv("eps", fmt(eps));
    kv("profile.width_x", fmt(profile_width_x));
    kv("profile.width_v", fmt(profile_width_v));
    if (!profile_center_x.empty()) kv("profile.center_x", fmt_list(profile_center_x));
    if (!profile_center_v.empty()) kv("profile.center_v", fmt_list(profile_center_v));
    kv("grid.nx", std::to_string(grid_nx));
    kv("grid.nv", std::to_string(grid_nv));
    kv("grid.x_extent", fmt(grid_x_extent));
    kv("grid.v_extent", fmt(grid_v_extent));
    kv("grid.frame", grid_frame);
    kv("grid.macro_n", std::to_string(macro_n));
    kv("grid.macro_margin", fmt(macro_margin));
    kv("particles.count", std::to_string(particles_count));
    kv("particles.grid_n", std::to_string(particles_grid_n));
    kv("dt.safety", fmt(dt_safety));
    kv("dt.max", fmt(dt_max));
    kv("t_end", fmt(t_end));
    kv("observers.series_every", fmt(series_every));
    kv("observers.energy_every", fmt(energy_every));
    kv("observers.energy_nmax", std::to_string(energy_nmax));
    if (!snapshot_times.empty()) kv("observers.snapshots", fmt_list(snapshot_times));
    kv("force.enabled", force_enabled ? "true" : "false");
    kv("modified.enabled", modified_enabled ? "true" : "false");
    kv("seed", std::to_string(seed));
    if (!out_dir.empty()) kv("out_dir", out_dir);
    return s;
}

void ExperimentConfig::validate() const {
    if (system != "vp" && system != "vy")
        throw std::invalid_argument("config: system must be vp or vy");
    if (eps <= 0.0) throw std::invalid_argument("config: eps must be positive");
    if (system == "vp" && n != 3)
        throw std::invalid_argument("config: the vp system runs numerically at n = 3 only");
    if (system == "vy" && n != 2 && n != 3)
        throw std::invalid_argument("config: the vy system supports n in {2,3}");
    if (particles_count > 0 && n != 3)
        throw std::invalid_argument("config: the particle solver is n = 3 only");
    if (particles_count == 0 && n != 2)
        throw std::invalid_argument("config: grid runs are n = 2 only; use particles for n = 3");
    if (grid_frame != "lab" && grid_frame != "comoving")
        throw std::invalid_argument("config: grid.frame must be lab or comoving");
    if (mu != 1.0 && mu != -1.0) throw std::invalid_argument("config: mu must be +1 or -1");
    if (t_end < 0.0) throw std::invalid_argument("config: t_end must be >= 0");
    if (!profile_center_x.empty() && static_cast<int>(profile_center_x.size()) != n)
        throw std::invalid_argument("config: profile.center_x needs n entries");
    if (!profile_center_v.empty() && static_cast<int>(profile_center_v.size()) != n)
        throw std::invalid_argument("config: profile.center_v needs n entries");
}

SolverConfig ExperimentConfig::solver_config() const {
    SolverConfig s;
    s.mu = mu;
    s.kernel.kind = system == "vp" ? KernelKind::Poisson : KernelKind::Yukawa;
    s.kernel.n = n;
    s.cfl_safety = dt_safety;
    s.dt_max = dt_max;
    s.t_end = t_end;
    s.force_enabled = force_enabled;
    s.frame = grid_frame == "lab" ? Frame::Lab : Frame::Comoving;
    s.macro_n = particles_count > 0 ? particles_grid_n : macro_n;
    s.macro_margin = macro_margin;
    s.series_every = series_every;
    s.snapshot_times = snapshot_times;
    return s;
}

GridSpec ExperimentConfig::grid_spec() const {
    GridSpec g;
    g.n = n;
    g.x_extent = grid_x_extent;
    g.v_extent = grid_v_extent;
    g.Nx = grid_nx;
    g.Nv = grid_nv;
    return g;
}

std::function<double(const double*, const double*)> ExperimentConfig::initial_profile() const {
    double wx = profile_width_x, wv = profile_width_v, e = eps;
    int nn = n;
    std::vector<double> cx = profile_center_x, cv = profile_center_v;
    cx.resize(static_cast<std::size_t>(nn), 0.0);
    cv.resize(static_cast<std::size_t>(nn), 0.0);
    return [=](const double* x, const double* v) {
        double s = 0.0;
        for (int a = 0; a < nn; ++a) {
            double dx = (x[a] - cx[static_cast<std::size_t>(a)]) / wx;
            double dv = (v[a] - cv[static_cast<std::size_t>(a)]) / wv;
            s += dx * dx + dv * dv;
        }
        return e * std::exp(-s);
    };
}

} // namespace ktlab
