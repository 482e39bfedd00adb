#include "ktlab/io.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ktlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_i64(std::ofstream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ofstream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
std::int64_t get_i64(std::ifstream& in) {
    std::int64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
double get_f64(std::ifstream& in) {
    double v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

} // namespace

void write_phase_snapshot(const std::string& path, const PhaseDensity& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const auto& s = f.spec();
    put_i64(out, s.n);
    put_i64(out, s.Nx);
    put_i64(out, s.Nv);
    put_f64(out, s.x_extent);
    put_f64(out, s.v_extent);
    put_f64(out, f.time_tag());
    put_i64(out, f.frame() == Frame::Lab ? 0 : 1);
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * 8));
}

PhaseDensity read_phase_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    GridSpec s;
    s.n = static_cast<int>(get_i64(in));
    s.Nx = static_cast<int>(get_i64(in));
    s.Nv = static_cast<int>(get_i64(in));
    s.x_extent = get_f64(in);
    s.v_extent = get_f64(in);
    double t = get_f64(in);
    Frame frame = get_i64(in) == 0 ? Frame::Lab : Frame::Comoving;
    PhaseDensity f(s, frame, t);
    in.read(reinterpret_cast<char*>(f.values().data()),
            static_cast<std::streamsize>(f.values().size() * 8));
    if (!in) throw std::runtime_error("truncated snapshot " + path);
    return f;
}

void write_spatial_field(const std::string& path, const SpatialField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    put_i64(out, f.dim());
    put_i64(out, f.size());
    put_i64(out, f.components());
    put_f64(out, f.extent());
    put_f64(out, f.time_tag());
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * 8));
}

SpatialField read_spatial_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    int n = static_cast<int>(get_i64(in));
    int N = static_cast<int>(get_i64(in));
    int comps = static_cast<int>(get_i64(in));
    double extent = get_f64(in);
    double t = get_f64(in);
    SpatialField f(n, extent, N, comps, t);
    in.read(reinterpret_cast<char*>(f.values().data()),
            static_cast<std::streamsize>(f.values().size() * 8));
    if (!in) throw std::runtime_error("truncated field " + path);
    return f;
}

void write_series_csv(const std::string& path, const Series& s) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,value\n";
    char buf[96];
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.t[i], s.v[i]);
        out << buf;
    }
}

Series read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    Series s;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("bad csv line in " + path);
        s.t.push_back(std::stod(line.substr(0, comma)));
        s.v.push_back(std::stod(line.substr(comma + 1)));
    }
    return s;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

void write_run_record(const std::string& dir, const RunRecord& rec, const ExperimentConfig& cfg) {
    fs::create_directories(fs::path(dir) / "series");
    if (!rec.snapshots.empty()) fs::create_directories(fs::path(dir) / "snapshots");

    json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = cfg.serialize();
    manifest["aborted"] = rec.aborted;
    if (rec.aborted) manifest["abort_reason"] = rec.abort_reason;

    json series = json::array();
    for (const auto& [name, s] : rec.series) {
        std::string rel = "series/" + name + ".csv";
        std::string path = (fs::path(dir) / rel).string();
        write_series_csv(path, s);
        series.push_back({{"name", name}, {"file", rel}, {"fnv1a", fnv1a_file(path)}, {"rows", s.t.size()}});
    }
    manifest["series"] = series;

    json snaps = json::array();
    for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshots/f_%05zu.bin", i);
        std::string path = (fs::path(dir) / name).string();
        write_phase_snapshot(path, rec.snapshots[i]);
        json entry{{"time", rec.snapshot_times[i]}, {"file", name}, {"fnv1a", fnv1a_file(path)}};
        if (i < rec.field_snapshots.size()) {
            char fname[64];
            std::snprintf(fname, sizeof fname, "snapshots/phi_%05zu.bin", i);
            std::string fpath = (fs::path(dir) / fname).string();
            write_spatial_field(fpath, rec.field_snapshots[i].phi);
            entry["phi_file"] = fname;
            entry["phi_fnv1a"] = fnv1a_file(fpath);
        }
        snaps.push_back(entry);
    }
    manifest["snapshots"] = snaps;
    manifest["content_hash"] = rec.content_hash();

    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

} // namespace ktlab
