#pragma once

#include "ots/geometry.hpp"
#include "ots/surrogate.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ots {

struct GridConfig {
    int nx = 128;
    int ny = 128;
    /// Box half-width padding, as a fraction of the geometry extent.
    double margin = 0.2;
};

struct GeometryConfig {
    int count = 4;
    StarDomainConfig star;
    double steepness = 50.0;
    /// CSV polygon files; when non-empty they replace the random star domains.
    std::vector<std::string> polygons;
};

struct HeatConfig {
    double kappa = 0.015;
    double t_final = 1.0;
    int steps = 50;
    int snapshots = 30;
    std::array<double, 2> theta_bounds{0.05 * 3.141592653589793, 0.45 * 3.141592653589793};
    std::array<double, 2> lambda_bounds{0.05, 0.6};
    int bc_distance_power = 2;
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    int workers = 4;
    std::string cors_origin = "*";
};

struct BenchConfig {
    int start = 20;
    int stop = 120;
    int step = 20;
    int particles = 60;
    double sigma = 0.05;
    /// Raster edge for the benchmark snapshots.
    int grid = 64;
    /// Fixed generation count (the stall criterion is disabled).
    int generations = 40;
};

struct RunConfig {
    std::uint64_t seed = 42;
    GridConfig grid;
    GeometryConfig geometry;
    HeatConfig heat;
    SurrogateSettings surrogate;
    ServiceConfig service;
    BenchConfig bench;
};

/// Parses JSON over the defaults; missing keys keep their default, unknown
/// keys and out-of-range values throw Config.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON with every key present.
std::string dump_config(const RunConfig& config);

void validate_config(const RunConfig& config);

/// Surrogate settings with the master seed applied.
SurrogateSettings surrogate_settings(const RunConfig& config);

}  // namespace ots
