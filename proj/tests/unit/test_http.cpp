#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "dawn/demo.hpp"
#include "dawn/http_services.hpp"
#include "httplib.h"
#include "test_support.hpp"

namespace dawn::http {
namespace {

using testing::make_gateway;
using testing::text_manifest;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io_error;
}

httplib::Client raw_client(const Service& s) {
  httplib::Client c("127.0.0.1", s.port());
  c.set_read_timeout(std::chrono::seconds(10));
  return c;
}

TEST(Status, ErrorCodesMapToHttpStatuses) {
  EXPECT_EQ(status_for(ErrorCode::unauthenticated), 401);
  EXPECT_EQ(status_for(ErrorCode::bad_token), 401);
  EXPECT_EQ(status_for(ErrorCode::unknown_workflow), 404);
  EXPECT_EQ(status_for(ErrorCode::no_such_gate), 404);
  EXPECT_EQ(status_for(ErrorCode::decision_conflict), 409);
  EXPECT_EQ(status_for(ErrorCode::duplicate_id), 409);
  EXPECT_EQ(status_for(ErrorCode::queue_full), 429);
  EXPECT_EQ(status_for(ErrorCode::parse_error), 400);
  EXPECT_EQ(status_for(ErrorCode::schema_violation), 400);
  EXPECT_EQ(status_for(ErrorCode::upstream_error), 502);
  EXPECT_EQ(status_for(ErrorCode::deadline_exceeded), 504);
  EXPECT_EQ(status_for(ErrorCode::io_error), 500);
  EXPECT_EQ(bearer_token("Bearer abc"), "abc");
  EXPECT_EQ(bearer_token("Basic abc"), "");
  EXPECT_EQ(bearer_token(""), "");
}

// ---------------------------------------------------------------------------
// Gateway endpoints

TEST(GatewayHttp, HealthIsPublicAndOtherRoutesNeedAToken) {
  auto t = make_gateway("gw-h", {text_manifest("r.jd", "write a job description")});
  GatewayServer server(t.gw);
  server.start();
  auto c = raw_client(server);
  auto health = c.Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(parse_json(health->body).at("resources"), 1);
  for (const auto& path : {"/v1/resources", "/v1/trace?workflow=x"}) {
    auto r = c.Get(path);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 401) << path;
    EXPECT_EQ(parse_json(r->body).at("error"), "unauthenticated");
  }
  auto connect = c.Post("/v1/connect", "", "application/json");
  EXPECT_EQ(connect->status, 401);

  ApiClient api(server.base_url(), t.token);
  auto id = decode_as<GatewayIdentity>(api.post("/v1/connect", Json::object()).dump());
  EXPECT_EQ(id.gateway_id, "gw-h");
  EXPECT_TRUE(id.auth_token.empty());
}

TEST(GatewayHttp, SearchExecuteAndErrors) {
  auto t = make_gateway("gw-h", {text_manifest("r.jd", "write a job description")});
  GatewayServer server(t.gw);
  server.start();
  auto c = raw_client(server);
  c.set_bearer_token_auth(t.token);

  ResourceQuery q{"q1", {{"jd", "write a job description", {}}}, "", 5};
  auto res = c.Post("/v1/search", encode(q), "application/json");
  ASSERT_EQ(res->status, 200);
  auto offer = decode_as<ResourceOffer>(res->body);
  EXPECT_EQ(offer.per_task.at("jd").at(0).manifest.resource_id, "r.jd");

  ExecutionCommand cmd{"wf/jd/1", "r.jd", "local://r.jd", {{"text", std::string("x")}}, 1000};
  res = c.Post("/v1/execute", encode(cmd), "application/json");
  ASSERT_EQ(res->status, 200);
  auto result = decode_as<ExecutionResult>(res->body);
  EXPECT_EQ(std::get<std::string>(result.payload->at("text")), "r.jd:x");

  res = c.Post("/v1/search", "{\"type\":\"resource_query\"", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(parse_json(res->body).at("error"), "parse_error");

  // Execution failures travel as error results, not HTTP errors.
  cmd.resource_id = "r.none";
  res = c.Post("/v1/execute", encode(cmd), "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(error_code_of(decode_as<ExecutionResult>(res->body)), "unknown_resource");

  cmd.resource_id = "r.jd";
  cmd.inputs = {{"text", std::int64_t{1}}};
  res = c.Post("/v1/execute", encode(cmd), "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(error_code_of(decode_as<ExecutionResult>(res->body)), "schema_violation");

  res = c.Post("/v1/execute", "{}", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(parse_json(res->body).at("error"), "parse_error");

  httplib::Client anon("127.0.0.1", server.port());
  res = anon.Post("/v1/search", encode(q), "application/json");
  EXPECT_EQ(res->status, 401);
}

TEST(GatewayHttp, DrainingQueuesSearches) {
  auto t = make_gateway("gw-h", {text_manifest("r.jd", "write a job description")});
  GatewayServer server(t.gw);
  server.start();
  t.gw->set_draining(true);
  auto c = raw_client(server);
  c.set_bearer_token_auth(t.token);
  ResourceQuery q{"q1", {{"jd", "write a job description", {}}}, "", 5};
  auto res = c.Post("/v1/search", encode(q), "application/json");
  ASSERT_EQ(res->status, 202);
  EXPECT_EQ(parse_json(res->body).at("queued"), "q1");
  EXPECT_EQ(parse_json(c.Get("/v1/health")->body).at("status"), "draining");
}

TEST(GatewayHttp, ResourceRegistrationAndValidation) {
  auto t = make_gateway("gw-h", {});
  GatewayServer server(t.gw);
  server.start();
  ApiClient api(server.base_url(), t.token);
  auto m = text_manifest("r.new", "translate text");
  m.owner_gateway = "gw-h";
  t.local->bind(m.endpoint, testing::text_handler(m.resource_id));
  auto created = api.post("/v1/resources", parse_json(encode(m)));
  EXPECT_EQ(created.at("validation"), "unvalidated");
  EXPECT_EQ(code_of([&] { api.post("/v1/resources", parse_json(encode(m))); }), ErrorCode::duplicate_id);
  auto report = api.post("/v1/resources/r.new/validate", Json::object());
  EXPECT_EQ(report.at("overall"), true);
  auto list = api.get("/v1/resources");
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0].at("validation"), "passed");
  EXPECT_EQ(list[0].at("manifest").at("status"), "active");
  EXPECT_EQ(code_of([&] { api.post("/v1/resources/r.nope/validate", Json::object()); }), ErrorCode::unknown_resource);
}

TEST(AgentHttp, InvokeAndHealth) {
  auto stub = agents::make_stub("echo", nullptr);
  AgentServer server(stub);
  server.start();
  auto c = raw_client(server);
  ExecutionCommand cmd{"wf/t/1", "builtin.echo", "x", {{"text", std::string("hi")}}, 1000};
  auto res = c.Post("/invoke", encode(cmd), "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(std::get<std::string>(decode_as<ExecutionResult>(res->body).payload->at("text")), "hi");
  EXPECT_EQ(parse_json(c.Get("/health")->body).at("calls"), 1);
}

// ---------------------------------------------------------------------------
// Principal endpoints (HR cluster on localhost)

Json copilot_intent() {
  return {{"intent_id", ""}, {"text", std::string(demo::kHrIntent)}, {"user_id", ""},
          {"tenant_id", ""}, {"mode", "copilot"},                   {"preferences", Json::object()}};
}

TEST(PrincipalHttp, UnauthenticatedCallsAreRejected) {
  demo::HrCluster cluster;
  ApiClient bad(cluster.principal_url(), "wrong");
  EXPECT_EQ(code_of([&] { bad.gateways(); }), ErrorCode::unauthenticated);
  EXPECT_EQ(code_of([&] { bad.submit_intent(copilot_intent()); }), ErrorCode::unauthenticated);
  httplib::Client c("127.0.0.1", std::stoi(cluster.principal_url().substr(cluster.principal_url().rfind(':') + 1)));
  auto res = c.Get("/v1/events");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 401);
}

TEST(PrincipalHttp, CopilotLifecycleOverHttp) {
  demo::HrCluster cluster;
  auto api = cluster.client();
  auto gws = api.gateways();
  ASSERT_EQ(gws.size(), 2u);
  for (const auto& g : gws) EXPECT_EQ(g.at("connected"), true);

  auto sub = api.submit_intent(copilot_intent());
  std::string wf = sub.at("workflow_id");
  EXPECT_EQ(sub.at("status"), "composing");
  auto status = api.status(wf);
  EXPECT_EQ(status.at("graph").at("nodes").size(), 6u);

  EXPECT_EQ(code_of([&] { api.gate(wf, "jd_write", {{"action", "approve"}}); }), ErrorCode::no_such_gate);
  api.approve(wf);
  auto r = cluster.principal().wait_idle(wf, 10000);
  ASSERT_EQ(r.pending_gates, std::vector<std::string>{"jd_write"});

  EXPECT_EQ(code_of([&] { api.gate(wf, "jd_write", {{"action", "maybe"}}); }), ErrorCode::parse_error);
  api.gate(wf, "jd_write", {{"action", "approve"}, {"note", "ok"}});
  EXPECT_EQ(code_of([&] { api.gate(wf, "jd_write", {{"action", "approve"}}); }), ErrorCode::decision_conflict);

  auto paused = api.pause(wf);
  EXPECT_EQ(paused.at("paused"), true);
  api.resume(wf);
  while (true) {
    r = cluster.principal().wait_idle(wf, 10000);
    if (r.terminal() || r.pending_gates.empty()) break;
    for (const auto& g : r.pending_gates) api.gate(wf, g, {{"action", "approve"}});
  }
  EXPECT_EQ(api.status(wf).at("status"), "completed");
  auto trace = api.trace(wf);
  EXPECT_EQ(trace.at("status"), "completed");
  EXPECT_FALSE(trace.at("events").empty());

  EXPECT_EQ(code_of([&] { api.status("wf-999999"); }), ErrorCode::unknown_workflow);
  ApiClient other(cluster.principal_url(), "wrong");
  EXPECT_EQ(code_of([&] { other.status(wf); }), ErrorCode::unauthenticated);
}

TEST(PrincipalHttp, AuthoredNoLlmGraphRunsWithBuiltins) {
  demo::HrCluster cluster;
  auto api = cluster.client();
  TaskGraph g;
  g.graph_id = "g1";
  g.mode = OperationalMode::no_llm;
  GraphNode n;
  n.task = {"sum", "add two numbers", {}, NodeKind::no_llm};
  n.assignment = "builtin.calculator";
  n.gateway_id = "local";
  g.nodes.push_back(n);
  Json manifests = {{"sum", body_to_json(agents::builtin_manifest("calculator"))}};
  auto sub = api.submit_graph({{"graph", to_json(g)}, {"manifests", manifests}});
  std::string wf = sub.at("workflow_id");
  auto r = cluster.principal().wait_idle(wf, 10000);
  EXPECT_EQ(r.status, orchestrator::WorkflowStatus::completed);
  EXPECT_EQ(std::get<std::int64_t>(r.node_outputs.at("sum").payload->at("result")), 5);
  EXPECT_EQ(code_of([&] { api.submit_graph({{"graph", "nope"}}); }), ErrorCode::parse_error);
}

TEST(PrincipalHttp, GatewayConnectRequestsCheckTheToken) {
  demo::HrCluster cluster;
  GatewayIdentity proposal;
  proposal.gateway_id = "gw-rogue";
  proposal.display_name = "rogue";
  proposal.base_url = "http://127.0.0.1:9";
  proposal.auth_token = "guess";
  EXPECT_EQ(code_of([&] { request_connection(cluster.principal_url(), proposal); }), ErrorCode::bad_token);
  EXPECT_EQ(cluster.client().gateways().size(), 2u);
}

// Server-push stream: a snapshot frame, then one status frame per audit
// event, ending with the workflow's completion.
TEST(PrincipalHttp, EventStreamDeliversStatusTransitions) {
  demo::HrCluster cluster;
  auto api = cluster.client();
  Json intent = copilot_intent();
  intent["mode"] = "llm_agent";
  std::string wf = api.submit_intent(intent).at("workflow_id");

  auto url = cluster.principal_url();
  int port = std::stoi(url.substr(url.rfind(':') + 1));
  std::string stream;
  std::mutex mu;
  std::atomic<bool> done{false};
  std::thread reader([&] {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(std::chrono::seconds(15));
    c.set_bearer_token_auth(std::string(demo::kDemoUserToken));
    c.Get("/v1/events?workflow=" + wf, [&](const char* data, std::size_t n) {
      std::lock_guard lk(mu);
      stream.append(data, n);
      if (stream.find("\"to\":\"completed\"") != std::string::npos) {
        done = true;
        return false;
      }
      return true;
    });
    done = true;
  });
  // Wait for the snapshot so that no transition is missed.
  for (int i = 0; i < 500; ++i) {
    {
      std::lock_guard lk(mu);
      if (stream.find("event: snapshot") != std::string::npos) break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  api.approve(wf);
  reader.join();

  std::vector<Json> frames;
  std::istringstream in(stream);
  std::string line;
  std::string event;
  while (std::getline(in, line)) {
    if (line.starts_with("event: ")) event = line.substr(7);
    if (line.starts_with("data: ")) {
      auto j = parse_json(line.substr(6));
      j["event"] = event;
      frames.push_back(j);
    }
  }
  ASSERT_GE(frames.size(), 2u);
  EXPECT_EQ(frames.front().at("event"), "snapshot");
  EXPECT_EQ(frames.front().at("status"), "composing");
  int node_succeeded = 0;
  std::int64_t last_seq = -1;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].at("event"), "status");
    EXPECT_EQ(frames[i].at("workflow_id"), wf);
    auto seq = frames[i].at("seq").get<std::int64_t>();
    EXPECT_GT(seq, last_seq);
    last_seq = seq;
    if (frames[i].at("kind") == "node" && frames[i].at("to") == "succeeded") ++node_succeeded;
  }
  EXPECT_EQ(node_succeeded, 6);
  EXPECT_EQ(frames.back().at("kind"), "workflow");
  EXPECT_EQ(frames.back().at("to"), "completed");
}

TEST(PrincipalHttp, HrDemoCompletesOverHttp) {
  demo::HrCluster cluster;
  auto result = demo::run_hr_demo(cluster);
  ASSERT_EQ(result.record.at("status"), "completed");
  for (const auto& n : result.record.at("graph").at("nodes")) EXPECT_EQ(n.at("status"), "succeeded");
  bool saw_gateway_guard = false;
  for (const auto& e : result.trace.at("events")) {
    if (e.at("source") == "guard" && e.at("component") != "principal") saw_gateway_guard = true;
  }
  EXPECT_TRUE(saw_gateway_guard);
  for (const auto& name : agents::kHrAgents) EXPECT_EQ(cluster.agent(name).calls(), 2u) << name;
}

}  // namespace
}  // namespace dawn::http
