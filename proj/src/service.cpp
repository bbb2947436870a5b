#include "ots/service.hpp"

#include "ots/error.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace ots {

using json = nlohmann::json;

namespace {

constexpr int kMaxRaster = 1024;

HttpReply json_reply(int status, const json& j)
{
    return {status, j.dump()};
}

HttpReply error_reply(int status, const std::string& code, const std::string& message)
{
    return {status, error_body(code, message)};
}

HttpReply loading_reply()
{
    return json_reply(503, {{"status", "loading"}});
}

double number_field(const json& body, const char* key)
{
    if (!body.contains(key) || !body.at(key).is_number())
        throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be a number");
    const double v = body.at(key).get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be finite");
    return v;
}

// Field and level-set on a different raster over the same box: the cloud is
// evaluated exactly, the level-set bilinearly, and the field masked to it.
void resample(const Inference& inf, const Grid& box, int width, int height, FieldSample& field, FieldSample& levelset)
{
    const Grid g = Grid::over_box(box.origin(), box.upper(), width, height);
    levelset = FieldSample::zeros(g);
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i) levelset.values[g.index(i, j)] = interpolate(inf.levelset, g.node(i, j));
    field = evaluate_cloud(inf.cloud, g);
    for (std::size_t k = 0; k < field.values.size(); ++k)
        field.values[k] = levelset.values[k] >= 0.5 ? inf.integral * field.values[k] : 0.0;
}

}  // namespace

std::string error_body(const std::string& code, const std::string& message)
{
    return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

void InferenceService::set_model(std::shared_ptr<const LoadedModel> model)
{
    std::lock_guard lock(mutex_);
    model_ = std::move(model);
}

std::shared_ptr<const LoadedModel> InferenceService::model() const
{
    std::lock_guard lock(mutex_);
    return model_;
}

HttpReply InferenceService::health() const
{
    if (!model()) return loading_reply();
    return json_reply(200, {{"status", "ok"}});
}

HttpReply InferenceService::meta() const
{
    const auto m = model();
    if (!m) return loading_reply();
    const ModelContainer& c = m->surrogate.model();
    double lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    double hi[2] = {-lo[0], -lo[1]};
    for (const auto& ssm : c.ssms)
        for (int d = 0; d < 2; ++d) {
            lo[d] = std::min(lo[d], ssm.regressor.lower()[d]);
            hi[d] = std::max(hi[d], ssm.regressor.upper()[d]);
        }
    json geoms = json::array();
    for (int k = 0; k < m->surrogate.geometries(); ++k) {
        json contour = json::array();
        for (const auto& v : c.sgm.polygons[k].vertices) contour.push_back({v.x(), v.y()});
        geoms.push_back({{"id", k}, {"area", m->surrogate.domain(k).area()}, {"contour", std::move(contour)}});
    }
    json j = {
        {"K", m->surrogate.geometries()},
        {"version", c.version},
        {"theta_bounds", {lo[0], hi[0]}},
        {"lambda_bounds", {lo[1], hi[1]}},
        {"grid",
         {{"width", c.box.nx()},
          {"height", c.box.ny()},
          {"origin", {c.box.origin().x(), c.box.origin().y()}},
          {"spacing", {c.box.spacing().x(), c.box.spacing().y()}}}},
        {"particles", c.settings.n_s},
        {"interpolating", c.sgm.interpolating()},
        {"geometries", std::move(geoms)},
    };
    return json_reply(200, j);
}

HttpReply InferenceService::infer(const std::string& text) const
{
    const auto m = model();
    if (!m) return loading_reply();
    const auto t0 = std::chrono::steady_clock::now();
    json body;
    try {
        body = json::parse(text);
    } catch (const json::exception&) {
        return error_reply(400, "invalid_json", "request body is not valid JSON");
    }
    if (!body.is_object()) return error_reply(400, "invalid_argument", "request body must be an object");
    try {
        const double theta = number_field(body, "theta");
        const double lambda = number_field(body, "lambda");
        if (!body.contains("weights") || !body.at("weights").is_array())
            throw Error(ErrorCode::BadWeights, "'weights' must be an array with one entry per geometry");
        std::vector<double> weights;
        for (const auto& w : body.at("weights")) {
            if (!w.is_number()) throw Error(ErrorCode::BadWeights, "weights must be numbers");
            weights.push_back(w.get<double>());
        }
        const Inference inf = run_query(m->surrogate, theta, lambda, weights);
        const Grid& box = m->surrogate.model().box;

        FieldSample field = inf.field;
        FieldSample levelset = inf.levelset;
        if (body.contains("grid") && !body.at("grid").is_null()) {
            const auto& g = body.at("grid");
            if (!g.is_object() || !g.contains("width") || !g.contains("height") || !g.at("width").is_number_integer() ||
                !g.at("height").is_number_integer())
                throw Error(ErrorCode::InvalidArgument, "'grid' must hold integer width and height");
            const int w = g.at("width").get<int>(), h = g.at("height").get<int>();
            if (w < 2 || h < 2 || w > kMaxRaster || h > kMaxRaster)
                throw Error(ErrorCode::InvalidArgument, "grid width and height must be within [2, 1024]");
            if (w != box.nx() || h != box.ny()) resample(inf, box, w, h, field, levelset);
        }
        const Grid& g = field.grid;
        const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        json j = {
            {"width", g.nx()},
            {"height", g.ny()},
            {"origin", {g.origin().x(), g.origin().y()}},
            {"spacing", {g.spacing().x(), g.spacing().y()}},
            {"values", field.values},
            {"levelset", levelset.values},
            {"integral", inf.integral},
            {"integral_clamped", inf.integral_clamped},
            {"extrapolated", inf.extrapolated},
            {"leaked_mass", inf.leaked_mass},
            {"wall_ms", wall_ms},
        };
        return json_reply(200, j);
    } catch (const Error& e) {
        return error_reply(400, std::string(error_code_name(e.code())), e.what());
    }
}

void install_routes(httplib::Server& server, InferenceService& service, const ServiceConfig& config)
{
    const int workers = config.workers;
    server.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(workers)); };
    server.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    const auto send = [](httplib::Response& res, const HttpReply& r) {
        res.status = r.status;
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.health());
    });
    server.Get("/meta", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.meta());
    });
    server.Post("/infer", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.infer(req.body));
    });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

void serve(const fs::path& model_path, const ServiceConfig& config)
{
    InferenceService service;
    httplib::Server server;
    install_routes(server, service, config);
    if (!server.bind_to_port(config.host, config.port))
        throw Error(ErrorCode::Io, "cannot listen on " + config.host + ":" + std::to_string(config.port));
    bool load_failed = false;
    std::thread loader([&] {
        try {
            service.set_model(std::make_shared<const LoadedModel>(load_surrogate(model_path)));
            spdlog::info("model {} loaded", model_path.string());
        } catch (const std::exception& e) {
            spdlog::error("cannot load model: {}", e.what());
            load_failed = true;
            server.wait_until_ready();
            server.stop();
        }
    });
    spdlog::info("listening on {}:{}", config.host, config.port);
    server.listen_after_bind();
    loader.join();
    if (load_failed) throw Error(ErrorCode::Io, "service stopped: model could not be loaded");
}

}  // namespace ots
