#pragma once

#include "ots/heat.hpp"
#include "ots/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ots {

namespace fs = std::filesystem;

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

// Particle clouds: "n <N>", "sigma <s>", then N lines "x y".
void write_cloud(std::ostream& out, const ParticleCloud& cloud);
ParticleCloud read_cloud(std::istream& in);
void save_cloud(const fs::path& path, const ParticleCloud& cloud);
ParticleCloud load_cloud(const fs::path& path);

// Rasters (.otr): text header up to "end\n", then nx*ny little-endian
// float64 values (row j = 0 first), then nx*ny mask bytes when "mask 1".
void write_raster(std::ostream& out, const FieldSample& field);
FieldSample read_raster(std::istream& in);
void save_raster(const fs::path& path, const FieldSample& field);
FieldSample load_raster(const fs::path& path);

// Polygons and polylines: CSV with header "x,y".
void save_polygon(const fs::path& path, const Polygon& poly);
Polygon load_polygon(const fs::path& path);

// DoE plans: CSV with header "theta,lambda".
void save_doe(const fs::path& path, const Eigen::MatrixX2d& samples);
Eigen::MatrixX2d load_doe(const fs::path& path);

// Model container: "OTSM", u16 version, then length-prefixed sections.
inline constexpr std::uint16_t kContainerVersion = 1;
std::vector<std::uint8_t> serialize_model(const ModelContainer& model, const std::string& config_json);
ModelContainer deserialize_model(const std::vector<std::uint8_t>& bytes, std::string* config_json = nullptr);
void save_model(const fs::path& path, const ModelContainer& model, const std::string& config_json);
ModelContainer load_model(const fs::path& path, std::string* config_json = nullptr);

std::vector<std::uint8_t> read_bytes(const fs::path& path);
void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_file(const fs::path& path);

}  // namespace ots
