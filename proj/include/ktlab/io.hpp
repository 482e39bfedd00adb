#pragma once

#include <cstdint>
#include <string>

#include "ktlab/config.hpp"
#include "ktlab/transport.hpp"

namespace ktlab {

// Flat little-endian snapshot layout (byte-exact, see FORMATS.md):
// int64 n, Nx, Nv; f64 x_extent, v_extent, time_tag; int64 frame;
// then Nx^n * Nv^n f64 values row-major (x axes outer, v axes inner).
void write_phase_snapshot(const std::string& path, const PhaseDensity& f);
PhaseDensity read_phase_snapshot(const std::string& path);

// int64 n, N, components; f64 extent, time_tag; then values per component
void write_spatial_field(const std::string& path, const SpatialField& f);
SpatialField read_spatial_field(const std::string& path);

// two-column CSV "t,value"
void write_series_csv(const std::string& path, const Series& s);
Series read_series_csv(const std::string& path);

std::uint64_t fnv1a_file(const std::string& path);

// RunRecord directory: manifest.json + series/*.csv + snapshots/*.bin
void write_run_record(const std::string& dir, const RunRecord& rec, const ExperimentConfig& cfg);

} // namespace ktlab
