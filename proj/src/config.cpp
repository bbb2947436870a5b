#include "ots/config.hpp"

#include "ots/error.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ots {

using json = nlohmann::json;

namespace {

// Reads keys of one JSON object into fields, rejecting keys it was not asked about.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) fail(path_, "must be an object");
    }

    ~Section() noexcept(false)
    {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(path_ + "." + key, "unknown key");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            fail(path_ + "." + key, e.what());
        }
    }

    Section sub(const char* key)
    {
        seen_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
    }

    static void fail(const std::string& where, const std::string& what)
    {
        throw Error(ErrorCode::Config, "config " + where + ": " + what);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_decompose(Section s, int& particles, double& sigma, DecomposeOptions& o)
{
    s.get("particles", particles);
    s.get("sigma", sigma);
    s.get("max_iterations", o.max_iterations);
    s.get("tolerance", o.tolerance);
    s.get("memory", o.memory);
}

json write_decompose(int particles, double sigma, const DecomposeOptions& o)
{
    return {{"particles", particles},
            {"sigma", sigma},
            {"max_iterations", o.max_iterations},
            {"tolerance", o.tolerance},
            {"memory", o.memory}};
}

void require(bool ok, const std::string& where, const std::string& what)
{
    if (!ok) Section::fail(where, what);
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig c;
    {
        Section root(j, "$");
        root.get("seed", c.seed);
        {
            auto s = root.sub("grid");
            s.get("nx", c.grid.nx);
            s.get("ny", c.grid.ny);
            s.get("margin", c.grid.margin);
        }
        {
            auto s = root.sub("geometry");
            s.get("count", c.geometry.count);
            s.get("mean_radius", c.geometry.star.mean_radius);
            s.get("harmonics", c.geometry.star.harmonics);
            s.get("amplitude", c.geometry.star.amplitude);
            s.get("vertices", c.geometry.star.vertices);
            s.get("steepness", c.geometry.steepness);
            s.get("polygons", c.geometry.polygons);
        }
        {
            auto s = root.sub("heat");
            s.get("kappa", c.heat.kappa);
            s.get("t_final", c.heat.t_final);
            s.get("steps", c.heat.steps);
            s.get("snapshots", c.heat.snapshots);
            s.get("theta_bounds", c.heat.theta_bounds);
            s.get("lambda_bounds", c.heat.lambda_bounds);
            s.get("bc_distance_power", c.heat.bc_distance_power);
        }
        auto& sg = c.surrogate;
        read_decompose(root.sub("solution_splat"), sg.n_s, sg.sigma_s, sg.solution_decompose);
        read_decompose(root.sub("geometry_splat"), sg.n_g, sg.sigma_g, sg.geometry_decompose);
        {
            auto s = root.sub("matching");
            auto& m = sg.solution_match;
            s.get("population", m.population);
            s.get("tournament", m.tournament);
            s.get("elitism", m.elitism);
            s.get("mutation_scale", m.mutation_scale);
            s.get("max_generations", m.max_generations);
            s.get("absolute_threshold", m.absolute_threshold);
            s.get("relative_threshold", m.relative_threshold);
            s.get("stall_generations", m.stall_generations);
            s.get("refinement_sweeps", m.refinement_sweeps);
            sg.geometry_match = m;
        }
        {
            auto s = root.sub("regression");
            s.get("max_degree", sg.poly.max_degree);
            s.get("tolerance", sg.poly.tolerance);
            s.get("max_terms", sg.poly.max_terms);
            s.get("als_sweeps", sg.poly.als_sweeps);
            s.get("refine_sweeps", sg.poly.refine_sweeps);
            s.get("ridge", sg.poly.ridge);
            s.get("energy_threshold", sg.energy_threshold);
        }
        {
            auto s = root.sub("service");
            s.get("host", c.service.host);
            s.get("port", c.service.port);
            s.get("workers", c.service.workers);
            s.get("cors_origin", c.service.cors_origin);
        }
        {
            auto s = root.sub("bench");
            s.get("start", c.bench.start);
            s.get("stop", c.bench.stop);
            s.get("step", c.bench.step);
            s.get("particles", c.bench.particles);
            s.get("sigma", c.bench.sigma);
            s.get("grid", c.bench.grid);
            s.get("generations", c.bench.generations);
        }
    }
    validate_config(c);
    return c;
}

void validate_config(const RunConfig& c)
{
    require(c.grid.nx >= 8 && c.grid.ny >= 8, "grid", "nx and ny must be at least 8");
    require(c.grid.margin >= 0.0, "grid.margin", "must be non-negative");
    require(c.geometry.count >= 1 || !c.geometry.polygons.empty(), "geometry.count", "must be at least 1");
    require(c.geometry.star.mean_radius > 0.0, "geometry.mean_radius", "must be positive");
    require(c.geometry.star.harmonics >= 0, "geometry.harmonics", "must be non-negative");
    require(c.geometry.star.amplitude >= 0.0, "geometry.amplitude", "must be non-negative");
    require(c.geometry.star.vertices >= 3, "geometry.vertices", "must be at least 3");
    require(c.geometry.steepness > 0.0, "geometry.steepness", "must be positive");
    require(c.heat.kappa > 0.0, "heat.kappa", "must be positive");
    require(c.heat.t_final > 0.0, "heat.t_final", "must be positive");
    require(c.heat.steps >= 1, "heat.steps", "must be at least 1");
    require(c.heat.snapshots >= 1, "heat.snapshots", "must be at least 1");
    require(c.heat.theta_bounds[0] < c.heat.theta_bounds[1], "heat.theta_bounds", "lower must be below upper");
    require(c.heat.lambda_bounds[0] > 0.0 && c.heat.lambda_bounds[0] < c.heat.lambda_bounds[1],
            "heat.lambda_bounds", "must be positive and increasing");
    require(c.heat.bc_distance_power == 1 || c.heat.bc_distance_power == 2, "heat.bc_distance_power",
            "must be 1 or 2");
    const auto& s = c.surrogate;
    require(s.n_s >= 1 && s.sigma_s > 0.0, "solution_splat", "particles >= 1 and sigma > 0 required");
    require(s.n_g >= 1 && s.sigma_g > 0.0, "geometry_splat", "particles >= 1 and sigma > 0 required");
    for (const auto* d : {&s.solution_decompose, &s.geometry_decompose})
        require(d->max_iterations >= 1 && d->tolerance > 0.0 && d->memory >= 1, "splat",
                "max_iterations, tolerance and memory must be positive");
    const auto& m = s.solution_match;
    require(m.population >= 2, "matching.population", "must be at least 2");
    require(m.tournament >= 1 && m.tournament <= m.population, "matching.tournament",
            "must be within [1, population]");
    require(m.elitism >= 0 && m.elitism < m.population, "matching.elitism", "must be within [0, population)");
    require(m.mutation_scale >= 0.0, "matching.mutation_scale", "must be non-negative");
    require(m.max_generations >= 0 && m.stall_generations >= 1, "matching", "generation counts out of range");
    require(m.refinement_sweeps >= 0, "matching.refinement_sweeps", "must be non-negative");
    require(s.poly.max_degree >= 0 && s.poly.max_degree <= 12, "regression.max_degree", "must be within [0, 12]");
    require(s.poly.max_terms >= 1 && s.poly.als_sweeps >= 1, "regression", "max_terms and als_sweeps must be positive");
    require(s.poly.refine_sweeps >= 0, "regression", "refine_sweeps must be non-negative");
    require(s.poly.tolerance >= 0.0 && s.poly.ridge >= 0.0, "regression", "tolerance and ridge must be non-negative");
    require(s.energy_threshold > 0.0 && s.energy_threshold <= 1.0, "regression.energy_threshold",
            "must be within (0, 1]");
    require(c.service.port >= 0 && c.service.port <= 65535, "service.port", "must be within [0, 65535]");
    require(c.service.workers >= 1, "service.workers", "must be at least 1");
    require(c.bench.start >= 2 && c.bench.step >= 1 && c.bench.stop >= c.bench.start, "bench",
            "need 2 <= start <= stop and step >= 1");
    require(c.bench.particles >= 1 && c.bench.sigma > 0.0, "bench", "particles >= 1 and sigma > 0 required");
    require(c.bench.grid >= 8 && c.bench.generations >= 1, "bench", "grid >= 8 and generations >= 1 required");
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c)
{
    const auto& s = c.surrogate;
    const auto& m = s.solution_match;
    json j = {
        {"seed", c.seed},
        {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"margin", c.grid.margin}}},
        {"geometry",
         {{"count", c.geometry.count},
          {"mean_radius", c.geometry.star.mean_radius},
          {"harmonics", c.geometry.star.harmonics},
          {"amplitude", c.geometry.star.amplitude},
          {"vertices", c.geometry.star.vertices},
          {"steepness", c.geometry.steepness},
          {"polygons", c.geometry.polygons}}},
        {"heat",
         {{"kappa", c.heat.kappa},
          {"t_final", c.heat.t_final},
          {"steps", c.heat.steps},
          {"snapshots", c.heat.snapshots},
          {"theta_bounds", c.heat.theta_bounds},
          {"lambda_bounds", c.heat.lambda_bounds},
          {"bc_distance_power", c.heat.bc_distance_power}}},
        {"solution_splat", write_decompose(s.n_s, s.sigma_s, s.solution_decompose)},
        {"geometry_splat", write_decompose(s.n_g, s.sigma_g, s.geometry_decompose)},
        {"matching",
         {{"population", m.population},
          {"tournament", m.tournament},
          {"elitism", m.elitism},
          {"mutation_scale", m.mutation_scale},
          {"max_generations", m.max_generations},
          {"absolute_threshold", m.absolute_threshold},
          {"relative_threshold", m.relative_threshold},
          {"stall_generations", m.stall_generations},
          {"refinement_sweeps", m.refinement_sweeps}}},
        {"regression",
         {{"max_degree", s.poly.max_degree},
          {"tolerance", s.poly.tolerance},
          {"max_terms", s.poly.max_terms},
          {"als_sweeps", s.poly.als_sweeps},
          {"refine_sweeps", s.poly.refine_sweeps},
          {"ridge", s.poly.ridge},
          {"energy_threshold", s.energy_threshold}}},
        {"service",
         {{"host", c.service.host},
          {"port", c.service.port},
          {"workers", c.service.workers},
          {"cors_origin", c.service.cors_origin}}},
        {"bench",
         {{"start", c.bench.start},
          {"stop", c.bench.stop},
          {"step", c.bench.step},
          {"particles", c.bench.particles},
          {"sigma", c.bench.sigma},
          {"grid", c.bench.grid},
          {"generations", c.bench.generations}}},
    };
    return j.dump(2) + "\n";
}

SurrogateSettings surrogate_settings(const RunConfig& config)
{
    SurrogateSettings s = config.surrogate;
    s.seed = config.seed;
    return s;
}

}  // namespace ots
