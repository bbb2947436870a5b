#include "ots/io.hpp"
#include "ots/service.hpp"
#include "toy.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace ots;
using json = nlohmann::json;

namespace {

std::shared_ptr<const LoadedModel> toy_loaded()
{
    static const auto m = std::make_shared<const LoadedModel>(LoadedModel{Surrogate(toy::trained().model), toy::config()});
    return m;
}

std::string query(double theta, double lambda, const std::vector<double>& w)
{
    return json{{"theta", theta}, {"lambda", lambda}, {"weights", w}}.dump();
}

}  // namespace

TEST(Service, HealthBeforeAndAfterLoad)
{
    InferenceService s;
    EXPECT_EQ(s.health().status, 503);
    EXPECT_EQ(json::parse(s.health().body)["status"], "loading");
    EXPECT_EQ(s.meta().status, 503);
    EXPECT_EQ(s.infer(query(0.7, 0.3, {0.5, 0.5})).status, 503);
    s.set_model(toy_loaded());
    EXPECT_EQ(s.health().status, 200);
    EXPECT_EQ(json::parse(s.health().body)["status"], "ok");
}

TEST(Service, MetaDescribesModel)
{
    InferenceService s;
    s.set_model(toy_loaded());
    const HttpReply r = s.meta();
    ASSERT_EQ(r.status, 200);
    const json m = json::parse(r.body);
    EXPECT_EQ(m["K"], 2);
    EXPECT_TRUE(m["interpolating"].get<bool>());
    EXPECT_EQ(m["grid"]["width"], 40);
    EXPECT_EQ(m["grid"]["height"], 40);
    ASSERT_EQ(m["geometries"].size(), 2u);
    EXPECT_GT(m["geometries"][0]["area"].get<double>(), 0.0);
    EXPECT_GE(m["geometries"][1]["contour"].size(), 3u);
    const auto tb = m["theta_bounds"].get<std::vector<double>>();
    ASSERT_EQ(tb.size(), 2u);
    EXPECT_LT(tb[0], tb[1]);
    EXPECT_EQ(m["lambda_bounds"].size(), 2u);
}

TEST(Service, InferMatchesLibrary)
{
    InferenceService s;
    s.set_model(toy_loaded());
    const HttpReply r = s.infer(query(0.7, 0.3, {0.4, 0.6}));
    ASSERT_EQ(r.status, 200) << r.body;
    const json j = json::parse(r.body);
    const Inference ref = run_query(toy_loaded()->surrogate, 0.7, 0.3, {0.4, 0.6});
    EXPECT_EQ(j["width"], 40);
    EXPECT_EQ(j["values"].get<std::vector<double>>(), ref.field.values);
    EXPECT_EQ(j["levelset"].get<std::vector<double>>(), ref.levelset.values);
    EXPECT_EQ(j["integral"].get<double>(), ref.integral);
    EXPECT_FALSE(j["extrapolated"].get<bool>());
    EXPECT_GE(j["wall_ms"].get<double>(), 0.0);
}

TEST(Service, InferOnRequestedRaster)
{
    InferenceService s;
    s.set_model(toy_loaded());
    json body = json::parse(query(0.7, 0.3, {0.5, 0.5}));
    body["grid"] = {{"width", 17}, {"height", 9}};
    const HttpReply r = s.infer(body.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    const json j = json::parse(r.body);
    EXPECT_EQ(j["width"], 17);
    EXPECT_EQ(j["height"], 9);
    const auto v = j["values"].get<std::vector<double>>();
    ASSERT_EQ(v.size(), 17u * 9u);
    for (double x : v) EXPECT_GE(x, 0.0);
}

TEST(Service, InvalidRequests)
{
    InferenceService s;
    s.set_model(toy_loaded());
    const auto code = [&](const std::string& body) {
        const HttpReply r = s.infer(body);
        EXPECT_EQ(r.status, 400) << body;
        return json::parse(r.body)["error"]["code"].get<std::string>();
    };
    EXPECT_EQ(code("{not json"), "invalid_json");
    EXPECT_EQ(code(query(0.7, 0.3, {0.5, 0.4})), "bad_weights");
    EXPECT_EQ(code(query(0.7, 0.3, {0.2, 0.3, 0.5})), "bad_weights");
    EXPECT_EQ(code(R"({"lambda": 0.3, "weights": [0.5, 0.5]})"), "invalid_argument");
    EXPECT_EQ(code(R"({"theta": "a", "lambda": 0.3, "weights": [0.5, 0.5]})"), "invalid_argument");
    json big = json::parse(query(0.7, 0.3, {0.5, 0.5}));
    big["grid"] = {{"width", 5000}, {"height", 10}};
    EXPECT_EQ(code(big.dump()), "invalid_argument");
}

TEST(Service, HttpRoundTripAndConcurrentQueries)
{
    InferenceService service;
    ServiceConfig sc;
    sc.workers = 2;
    httplib::Server server;
    install_routes(server, service, sc);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto h = cli.Get("/health");
    ASSERT_TRUE(h);
    EXPECT_EQ(h->status, 503);

    service.set_model(toy_loaded());
    h = cli.Get("/health");
    ASSERT_TRUE(h);
    EXPECT_EQ(h->status, 200);
    EXPECT_EQ(h->get_header_value("Access-Control-Allow-Origin"), "*");

    auto m = cli.Get("/meta");
    ASSERT_TRUE(m);
    EXPECT_EQ(m->status, 200);
    EXPECT_EQ(json::parse(m->body)["K"], 2);

    auto pre = cli.Options("/infer");
    ASSERT_TRUE(pre);
    EXPECT_EQ(pre->status, 204);

    const auto before = serialize_model(toy_loaded()->surrogate.model(), "{}");
    const std::string expected = json::parse(service.infer(query(0.9, 0.2, {0.3, 0.7})).body)["values"].dump();
    std::vector<std::thread> clients;
    std::atomic<int> ok{0};
    for (int c = 0; c < 4; ++c)
        clients.emplace_back([&] {
            httplib::Client local("127.0.0.1", port);
            for (int i = 0; i < 5; ++i) {
                auto r = local.Post("/infer", query(0.9, 0.2, {0.3, 0.7}), "application/json");
                if (r && r->status == 200 && json::parse(r->body)["values"].dump() == expected) ++ok;
            }
        });
    for (auto& c : clients) c.join();
    EXPECT_EQ(ok.load(), 20);
    EXPECT_EQ(serialize_model(toy_loaded()->surrogate.model(), "{}"), before);

    auto bad = cli.Post("/infer", "{", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    server.stop();
    t.join();
}
