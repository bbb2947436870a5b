#include "ots/app.hpp"
#include "ots/io.hpp"
#include "ots/service.hpp"
#include "ots/version.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

using namespace ots;

namespace {

using Clock = std::chrono::steady_clock;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string log_level;
};

void setup_logging(const std::string& flag)
{
    auto logger = spdlog::stderr_color_mt("ots");
    spdlog::set_default_logger(logger);
    std::string level = flag;
    if (level.empty())
        if (const char* env = std::getenv("OTS_LOG")) level = env;
    spdlog::set_level(level.empty() ? spdlog::level::warn : spdlog::level::from_str(level));
}

RunConfig resolve_config(const Globals& g, const RunConfig& base)
{
    RunConfig c = g.config_path.empty() ? base : load_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    validate_config(c);
    return c;
}

std::vector<double> parse_weights(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
            throw Error(ErrorCode::BadWeights, "weights must be a comma-separated list of numbers");
        }
    }
    return out;
}

struct Query {
    std::string model;
    double theta = 0.0;
    double lambda = 0.0;
    std::string weights;
    int geometry = -1;
    std::string out;
    std::string levelset_out;
};

std::vector<double> query_weights(const Query& q, int k_count)
{
    if (!q.weights.empty() && q.geometry >= 0)
        throw Error(ErrorCode::InvalidArgument, "give either --weights or --geometry, not both");
    if (q.geometry >= 0) {
        if (q.geometry >= k_count) throw Error(ErrorCode::InvalidArgument, "--geometry is out of range");
        return BarycentricWeights::one_hot(q.geometry, k_count).values();
    }
    if (q.weights.empty()) throw Error(ErrorCode::InvalidArgument, "one of --weights or --geometry is required");
    return parse_weights(q.weights);
}

void add_query_options(CLI::App* cmd, Query& q)
{
    cmd->add_option("--model", q.model, "Model file")->required();
    cmd->add_option("--theta", q.theta, "Heated-point angle")->required();
    cmd->add_option("--lambda", q.lambda, "Heated-zone extent")->required();
    cmd->add_option("--weights", q.weights, "Barycentric weights, comma separated, one per geometry");
    cmd->add_option("--geometry", q.geometry, "Training geometry index (one-hot weights)");
    cmd->add_option("--out", q.out, "Output raster (.otr)")->required();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Optimal-transport surrogate toolkit: generate heat datasets, train, infer and serve."};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON configuration file (defaults are used for missing keys)");
    app.add_option("--seed", g.seed, "Master seed, overrides the configuration");
    app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off (default from OTS_LOG)");

    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration");

    std::string data_dir;
    auto* gen = app.add_subcommand("generate", "Generate star domains, an LHS design and heat snapshots");
    gen->add_option("--out", data_dir, "Dataset directory")->required();

    std::string model_path;
    auto* train_cmd = app.add_subcommand("train", "Run the offline pipeline and write a model file");
    train_cmd->add_option("--data", data_dir, "Dataset directory")->required();
    train_cmd->add_option("--out", model_path, "Model file")->required();

    Query q;
    auto* infer_cmd = app.add_subcommand("infer", "Infer a field for (theta, lambda) and geometry weights");
    add_query_options(infer_cmd, q);
    infer_cmd->add_option("--levelset-out", q.levelset_out, "Also write the level-set raster");

    auto* solve_cmd = app.add_subcommand("solve", "Reference heat solve on a training or blended geometry");
    add_query_options(solve_cmd, q);

    std::string bench_out;
    auto* bench_cmd = app.add_subcommand("bench", "Time multimarginal matching against the snapshot count");
    bench_cmd->add_option("--out", bench_out, "CSV file (stdout when omitted)");

    ServiceConfig svc;
    std::optional<int> port, workers;
    std::optional<std::string> host;
    auto* serve_cmd = app.add_subcommand("serve", "HTTP inference service (/health, /meta, /infer)");
    serve_cmd->add_option("--model", model_path, "Model file")->required();
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port");
    serve_cmd->add_option("--workers", workers, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        setup_logging(g.log_level);
        if (*config_cmd) {
            std::cout << dump_config(resolve_config(g, RunConfig{}));
        } else if (*gen) {
            const RunConfig c = resolve_config(g, RunConfig{});
            const GenerateReport r = generate_dataset(c, data_dir);
            std::printf("generated %d geometries, %d snapshots in %.2f s\nmanifest sha256 %s\n", r.geometries,
                        r.snapshots, r.seconds, r.manifest_sha256.c_str());
        } else if (*train_cmd) {
            Dataset d = load_dataset(data_dir);
            const RunConfig c = resolve_config(g, d.config);
            const TrainResult r = train(d.training, surrogate_settings(c));
            save_model(model_path, r.model, dump_config(c));
            std::cout << stage_table(r);
            if (r.did_not_converge > 0)
                std::printf("warning: %d decompositions hit the iteration limit\n", r.did_not_converge);
            std::printf("model sha256 %s\n", sha256_file(model_path).c_str());
        } else if (*infer_cmd) {
            const LoadedModel m = load_surrogate(q.model);
            const auto weights = query_weights(q, m.surrogate.geometries());
            const auto t0 = Clock::now();
            const Inference inf = run_query(m.surrogate, q.theta, q.lambda, weights);
            const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            save_raster(q.out, inf.field);
            if (!q.levelset_out.empty()) save_raster(q.levelset_out, inf.levelset);
            if (inf.extrapolated) std::printf("warning: parameters outside the training bounds\n");
            if (inf.integral_clamped) std::printf("warning: negative predicted integral clamped to 0\n");
            std::printf("integral %.6g leaked_mass %.3g\nwall_ms %.3f\n", inf.integral, inf.leaked_mass, ms);
        } else if (*solve_cmd) {
            const LoadedModel m = load_surrogate(q.model);
            const auto weights = query_weights(q, m.surrogate.geometries());
            const auto t0 = Clock::now();
            const FieldSample t = reference_solve(m, q.theta, q.lambda, weights);
            const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            save_raster(q.out, t);
            std::printf("wall_ms %.3f\n", ms);
        } else if (*bench_cmd) {
            const RunConfig c = resolve_config(g, RunConfig{});
            const std::string csv = bench_csv(bench_matching(c));
            if (bench_out.empty())
                std::cout << csv;
            else
                write_bytes(bench_out, std::vector<std::uint8_t>(csv.begin(), csv.end()));
        } else if (*serve_cmd) {
            svc = resolve_config(g, RunConfig{}).service;
            if (host) svc.host = *host;
            if (port) svc.port = *port;
            if (workers) svc.workers = *workers;
            if (svc.workers < 1) throw Error(ErrorCode::Config, "--workers must be at least 1");
            serve(model_path, svc);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", std::string(error_code_name(e.code())).c_str(), e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 0;
}
