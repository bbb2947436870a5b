#include "ots/app.hpp"

#include "ots/error.hpp"
#include "ots/io.hpp"
#include "ots/seed.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <sstream>

namespace ots {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Seed streams for data generation; model training uses 1-4.
enum Stream : std::uint64_t { kStarDomain = 10, kDoE = 11, kBenchDoE = 12, kBenchSplat = 13, kBenchMatch = 14 };

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::array<double, 2> doe_lower(const RunConfig& c)
{
    return {c.heat.theta_bounds[0], c.heat.lambda_bounds[0]};
}

std::array<double, 2> doe_upper(const RunConfig& c)
{
    return {c.heat.theta_bounds[1], c.heat.lambda_bounds[1]};
}

std::string geometry_dir(int k)
{
    return "geometry_" + std::to_string(k);
}

std::string snapshot_name(int p)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%03d.otr", p);
    return buf;
}

}  // namespace

std::vector<Polygon> make_polygons(const RunConfig& config)
{
    std::vector<Polygon> polys;
    if (!config.geometry.polygons.empty()) {
        for (const auto& path : config.geometry.polygons) polys.push_back(load_polygon(path));
        return polys;
    }
    for (int k = 0; k < config.geometry.count; ++k)
        polys.push_back(random_star_polygon(derive_seed(config.seed, kStarDomain, static_cast<std::uint64_t>(k)),
                                            config.geometry.star));
    return polys;
}

Grid make_box(const RunConfig& config, const std::vector<Polygon>& polygons)
{
    Vec2 lo, hi;
    reference_box(polygons, config.grid.margin, lo, hi);
    return Grid::over_box(lo, hi, config.grid.nx, config.grid.ny);
}

HeatProblem make_problem(const RunConfig& config, const GeometryDomain& domain, double theta, double lambda)
{
    HeatProblem hp;
    hp.domain = domain;
    hp.kappa = config.heat.kappa;
    hp.tf = config.heat.t_final;
    hp.n_steps = config.heat.steps;
    hp.bc_distance_power = config.heat.bc_distance_power;
    hp.theta = theta;
    hp.lambda = lambda;
    return hp;
}

GenerateReport generate_dataset(const RunConfig& config, const fs::path& dir)
{
    validate_config(config);
    const auto t0 = Clock::now();
    fs::create_directories(dir);
    const auto polys = make_polygons(config);
    const Grid box = make_box(config, polys);

    json manifest;
    manifest["format"] = "ots-dataset";
    manifest["version"] = 1;
    manifest["config"] = json::parse(dump_config(config));
    manifest["grid"] = {{"nx", box.nx()},
                        {"ny", box.ny()},
                        {"origin", {box.origin().x(), box.origin().y()}},
                        {"spacing", {box.spacing().x(), box.spacing().y()}}};
    manifest["steepness"] = config.geometry.steepness;
    json geometries = json::array();
    json hashes = json::object();
    const auto record = [&](const std::string& rel) { hashes[rel] = sha256_file(dir / rel); };

    GenerateReport report;
    for (int k = 0; k < static_cast<int>(polys.size()); ++k) {
        const GeometryDomain dom(polys[k], box, config.geometry.steepness);
        const DoEPlan plan = lhs_sample(doe_lower(config), doe_upper(config), config.heat.snapshots,
                                        derive_seed(config.seed, kDoE, static_cast<std::uint64_t>(k)));
        const std::string gdir = geometry_dir(k);
        json entry;
        entry["polygon"] = gdir + "/polygon.csv";
        entry["doe"] = gdir + "/doe.csv";
        save_polygon(dir / gdir / "polygon.csv", dom.boundary());
        save_doe(dir / gdir / "doe.csv", plan.samples);
        record(gdir + "/polygon.csv");
        record(gdir + "/doe.csv");
        json snaps = json::array();
        for (int p = 0; p < plan.size(); ++p) {
            const FieldSample t = solve(make_problem(config, dom, plan.samples(p, 0), plan.samples(p, 1)));
            const std::string rel = gdir + "/" + snapshot_name(p);
            save_raster(dir / rel, t);
            record(rel);
            snaps.push_back(rel);
            ++report.snapshots;
        }
        entry["snapshots"] = std::move(snaps);
        geometries.push_back(std::move(entry));
        spdlog::info("geometry {}: {} snapshots", k, plan.size());
    }
    manifest["geometries"] = std::move(geometries);
    manifest["sha256"] = std::move(hashes);

    const std::string text = manifest.dump(2) + "\n";
    write_bytes(dir / "manifest.json", std::vector<std::uint8_t>(text.begin(), text.end()));
    report.geometries = static_cast<int>(polys.size());
    report.seconds = seconds_since(t0);
    report.manifest_sha256 = sha256_file(dir / "manifest.json");
    return report;
}

Dataset load_dataset(const fs::path& dir)
{
    const auto bytes = read_bytes(dir / "manifest.json");
    json manifest;
    try {
        manifest = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("manifest.json is not valid JSON: ") + e.what());
    }
    Dataset out;
    try {
        if (manifest.at("format") != "ots-dataset" || manifest.at("version") != 1)
            throw Error(ErrorCode::Format, "unsupported dataset format");
        out.config = parse_config(manifest.at("config").dump());
        const auto& hashes = manifest.at("sha256");
        const auto checked = [&](const std::string& rel) {
            const auto it = hashes.find(rel);
            if (it == hashes.end()) throw Error(ErrorCode::Format, "no hash recorded for " + rel);
            if (sha256_file(dir / rel) != it->get<std::string>())
                throw Error(ErrorCode::Format, "hash mismatch for " + rel);
            return dir / rel;
        };
        const auto& g = manifest.at("grid");
        TrainingSet& ts = out.training;
        ts.box = Grid(Vec2(g.at("origin")[0].get<double>(), g.at("origin")[1].get<double>()),
                      Vec2(g.at("spacing")[0].get<double>(), g.at("spacing")[1].get<double>()), g.at("nx").get<int>(),
                      g.at("ny").get<int>());
        ts.steepness = manifest.at("steepness").get<double>();
        for (const auto& entry : manifest.at("geometries")) {
            ts.polygons.push_back(load_polygon(checked(entry.at("polygon").get<std::string>())));
            const Eigen::MatrixX2d doe = load_doe(checked(entry.at("doe").get<std::string>()));
            ts.params.emplace_back(doe);
            std::vector<FieldSample> snaps;
            for (const auto& rel : entry.at("snapshots")) snaps.push_back(load_raster(checked(rel.get<std::string>())));
            if (static_cast<Eigen::Index>(snaps.size()) != doe.rows())
                throw Error(ErrorCode::Format, "snapshot count differs from the DoE rows");
            ts.snapshots.push_back(std::move(snaps));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Format, std::string("malformed manifest: ") + e.what());
    }
    return out;
}

std::string stage_table(const TrainResult& result)
{
    const auto seconds = [&](const std::string& name) {
        for (const auto& s : result.stages)
            if (s.name == name) return s.seconds;
        return 0.0;
    };
    std::ostringstream out;
    char line[128];
    const auto row = [&](const char* label, double v) {
        std::snprintf(line, sizeof line, "  %-32s %10.2f\n", label, v);
        out << line;
    };
    std::snprintf(line, sizeof line, "%-34s %10s\n", "Offline stage", "Time (s)");
    out << line << "SSM Offline Stage\n";
    for (const char* n : {"SSM Particle Decomposition", "P-Dimensional Matching", "SSM Training"}) row(n, seconds(n));
    out << "SGM Offline Stage\n";
    for (const char* n : {"SGM Particle Decomposition", "K-Dimensional Matching"}) row(n, seconds(n));
    std::snprintf(line, sizeof line, "%-34s %10.2f\n", "Total", result.total_seconds());
    out << line;
    return out.str();
}

LoadedModel load_surrogate(const fs::path& path)
{
    std::string conf;
    ModelContainer m = load_model(path, &conf);
    RunConfig config = parse_config(conf);
    return LoadedModel{Surrogate(std::move(m)), std::move(config)};
}

Inference run_query(const Surrogate& model, double theta, double lambda, const std::vector<double>& weights)
{
    const Eigen::Vector2d th(theta, lambda);
    return infer_cross_geometry(model, th, BarycentricWeights(weights));
}

FieldSample reference_solve(const LoadedModel& model, double theta, double lambda, const std::vector<double>& weights)
{
    const Surrogate& s = model.surrogate;
    const BarycentricWeights w(weights);
    if (w.size() != s.geometries()) throw Error(ErrorCode::BadWeights, "expected one weight per training geometry");
    if (const auto k = w.vertex()) return solve(make_problem(model.config, s.domain(*k), theta, lambda));
    const Inference inf = run_query(s, theta, lambda, weights);
    const GeometryDomain dom = domain_from_levelset(inf.levelset, s.model().box, s.model().steepness);
    return solve(make_problem(model.config, dom, theta, lambda));
}

std::vector<BenchRow> bench_matching(const RunConfig& config)
{
    validate_config(config);
    const auto& b = config.bench;
    RunConfig local = config;
    local.geometry.count = 1;
    local.geometry.polygons.resize(std::min<std::size_t>(local.geometry.polygons.size(), 1));
    local.grid.nx = local.grid.ny = b.grid;
    const auto polys = make_polygons(local);
    const Grid box = make_box(local, polys);
    const GeometryDomain dom(polys.front(), box, config.geometry.steepness);
    const DoEPlan plan =
        lhs_sample(doe_lower(config), doe_upper(config), b.stop, derive_seed(config.seed, kBenchDoE, 0));

    std::vector<ParticleCloud> clouds;
    for (int p = 0; p < plan.size(); ++p) {
        const FieldSample rho = normalize_field(solve(make_problem(local, dom, plan.samples(p, 0), plan.samples(p, 1))));
        DecomposeOptions opts = config.surrogate.solution_decompose;
        opts.seed = derive_seed(config.seed, kBenchSplat, static_cast<std::uint64_t>(p));
        opts.free_scale = true;
        clouds.push_back(decompose(rho, b.particles, b.sigma, opts).cloud);
    }

    MatchOptions mopts = config.surrogate.solution_match;
    mopts.max_generations = b.generations;
    mopts.stall_generations = b.generations + 1;
    mopts.absolute_threshold = 0.0;
    mopts.relative_threshold = 0.0;
    mopts.seed = derive_seed(config.seed, kBenchMatch, 0);
    std::vector<BenchRow> rows;
    for (int count = b.start; count <= b.stop; count += b.step) {
        const std::vector<ParticleCloud> subset(clouds.begin(), clouds.begin() + count);
        const auto t0 = Clock::now();
        const MatchedEnsemble m = match_multi(subset, mopts);
        rows.push_back({count, seconds_since(t0), m.total_cost});
        spdlog::info("bench {} snapshots: {:.3f} s, cost {}", count, rows.back().seconds, m.total_cost);
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows)
{
    std::string out = "total_snapshots,wall_seconds,final_cost\n";
    for (const auto& r : rows)
        out += std::to_string(r.snapshots) + "," + format_double(r.seconds) + "," + format_double(r.cost) + "\n";
    return out;
}

int exit_code_for(const Error& error)
{
    switch (error.code()) {
    case ErrorCode::SingularSystem:
    case ErrorCode::RayMiss:
    case ErrorCode::EmptyInterior:
        return 1;
    default:
        return 2;
    }
}

}  // namespace ots
