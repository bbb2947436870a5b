#pragma once

#include "ots/app.hpp"

#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace ots {

struct HttpReply {
    int status = 200;
    std::string body;
};

/// Request handling for the inference service, independent of the transport.
/// Replies 503 until a model is installed.
class InferenceService {
public:
    void set_model(std::shared_ptr<const LoadedModel> model);
    std::shared_ptr<const LoadedModel> model() const;

    HttpReply health() const;
    HttpReply meta() const;
    /// Body: {"theta", "lambda", "weights": [K], "grid"?: {"width", "height"}}.
    HttpReply infer(const std::string& body) const;

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const LoadedModel> model_;
};

/// Error payload {"error": {"code", "message"}}.
std::string error_body(const std::string& code, const std::string& message);

/// Routes /health, /meta and /infer plus CORS preflight, with a worker pool
/// of config.workers threads.
void install_routes(httplib::Server& server, InferenceService& service, const ServiceConfig& config);

/// Blocks serving HTTP until the process is stopped. The model is loaded on a
/// background thread so /health answers 503 while it loads.
void serve(const fs::path& model_path, const ServiceConfig& config);

}  // namespace ots
