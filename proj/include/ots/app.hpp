#pragma once

#include "ots/config.hpp"
#include "ots/error.hpp"
#include "ots/heat.hpp"
#include "ots/surrogate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace ots {

namespace fs = std::filesystem;

// Dataset directory layout:
//   manifest.json
//   geometry_<k>/polygon.csv, geometry_<k>/doe.csv, geometry_<k>/snapshot_<p>.otr

/// Star domains from the seed, or the configured polygon files.
std::vector<Polygon> make_polygons(const RunConfig& config);
Grid make_box(const RunConfig& config, const std::vector<Polygon>& polygons);
HeatProblem make_problem(const RunConfig& config, const GeometryDomain& domain, double theta, double lambda);

struct GenerateReport {
    int geometries = 0;
    int snapshots = 0;
    double seconds = 0.0;
    std::string manifest_sha256;
};

GenerateReport generate_dataset(const RunConfig& config, const fs::path& dir);

struct Dataset {
    /// Configuration recorded at generation time.
    RunConfig config;
    TrainingSet training;
};

/// Loads a dataset and checks every file against the manifest hashes.
Dataset load_dataset(const fs::path& dir);

/// Stage timings laid out as the offline-cost table (SSM rows, SGM rows, total).
std::string stage_table(const TrainResult& result);

/// Surrogate plus the configuration it was trained with.
struct LoadedModel {
    Surrogate surrogate;
    RunConfig config;
};

LoadedModel load_surrogate(const fs::path& path);

/// One query against the model; a single weight entry selects that geometry.
Inference run_query(const Surrogate& model, double theta, double lambda, const std::vector<double>& weights);

/// Reference heat solve on training geometry k, or on the blended domain when
/// the weights are not one-hot.
FieldSample reference_solve(const LoadedModel& model, double theta, double lambda, const std::vector<double>& weights);

struct BenchRow {
    int snapshots = 0;
    double seconds = 0.0;
    double cost = 0.0;
};

/// Multimarginal matching cost for growing snapshot counts at fixed GA settings.
std::vector<BenchRow> bench_matching(const RunConfig& config);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Exit code for an error: 2 for invalid input, 1 otherwise.
int exit_code_for(const Error& error);

}  // namespace ots
