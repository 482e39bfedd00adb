#pragma once

#include <string>
#include <vector>

#include "ktlab/transport.hpp"

namespace ktlab {

// Flat key = value experiment description (one key per line, dotted keys,
// '#' comments). parse -> serialize -> parse is the identity.
struct ExperimentConfig {
    std::string system = "vy"; // vp | vy
    int n = 2;
    double mu = 1.0;
    double eps = 1e-3;
    double profile_width_x = 1.0;
    double profile_width_v = 1.0;
    std::vector<double> profile_center_x; // size n (zeros when empty)
    std::vector<double> profile_center_v;

    int grid_nx = 64;
    int grid_nv = 64;
    double grid_x_extent = 6.0;
    double grid_v_extent = 6.0;
    std::string grid_frame = "comoving"; // lab | comoving
    int macro_n = 256;
    double macro_margin = 2.0;

    long long particles_count = 0; // > 0 switches to the particle solver
    int particles_grid_n = 64;

    double dt_safety = 0.9;
    double dt_max = 0.25;
    double t_end = 10.0;
    double series_every = 0.5;
    double energy_every = 0.0; // 0 disables energy observers
    int energy_nmax = 2;
    bool force_enabled = true;
    bool modified_enabled = false;
    unsigned long long seed = 1234;
    std::vector<double> snapshot_times;
    std::string out_dir;

    // throws std::invalid_argument with a message naming the bad key/line
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig parse_file(const std::string& path);
    std::string serialize() const;

    // system/dimension gating and parameter sanity
    void validate() const;

    SolverConfig solver_config() const;
    GridSpec grid_spec() const;
    // eps * exp(-|x/wx|^2 - |v/wv|^2) around the configured centers
    std::function<double(const double*, const double*)> initial_profile() const;
};

} // namespace ktlab
