#include "dawn/http_services.hpp"

#include <chrono>

#include "dawn/codec.hpp"
#include "dawn/log.hpp"
#include "httplib.h"

namespace dawn::http {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unauthenticated:
    case ErrorCode::bad_token:
      return 401;
    case ErrorCode::unknown_workflow:
    case ErrorCode::unknown_resource:
    case ErrorCode::unknown_gateway:
    case ErrorCode::no_such_gate:
      return 404;
    case ErrorCode::duplicate_id:
    case ErrorCode::decision_conflict:
    case ErrorCode::not_approved:
    case ErrorCode::invalid_mode_transition:
      return 409;
    case ErrorCode::queue_full:
      return 429;
    case ErrorCode::parse_error:
    case ErrorCode::malformed_query:
    case ErrorCode::invalid_manifest:
    case ErrorCode::schema_violation:
    case ErrorCode::invalid_graph:
    case ErrorCode::empty_plan:
    case ErrorCode::invalid_plan:
    case ErrorCode::unassigned_node:
    case ErrorCode::reinstate_without_validation:
      return 400;
    case ErrorCode::probe_failed:
    case ErrorCode::upstream_error:
    case ErrorCode::transport_error:
    case ErrorCode::no_gateways_and_no_local_match:
      return 502;
    case ErrorCode::deadline_exceeded:
      return 504;
    default:
      return 500;
  }
}

std::string bearer_token(std::string_view authorization) {
  constexpr std::string_view prefix = "Bearer ";
  if (authorization.substr(0, prefix.size()) != prefix) return {};
  return std::string(authorization.substr(prefix.size()));
}

namespace {

void send_json(httplib::Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = status_for(code);
  if (code == ErrorCode::queue_full) res.set_header("Retry-After", "1");
  res.set_content(Json{{"error", to_string(code)}, {"message", message}}.dump(), "application/json");
}

// Runs a handler, mapping exceptions to error responses.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::io_error, e.what());
    }
  };
}

std::string token_of(const httplib::Request& req) { return bearer_token(req.get_header_value("Authorization")); }

}  // namespace

// ---------------------------------------------------------------------------
// Service

Service::Service() : server_(std::make_unique<httplib::Server>()) {}

Service::~Service() { Service::stop(); }

int Service::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(ErrorCode::io_error, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void Service::serve(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error(ErrorCode::io_error, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string Service::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

// ---------------------------------------------------------------------------
// Gateway

GatewayServer::GatewayServer(std::shared_ptr<gateway::Gateway> gw) : gateway_(std::move(gw)) {
  auto g = gateway_;
  auto require_auth = [g](const httplib::Request& req) {
    if (!g->authenticate(token_of(req))) throw Error(ErrorCode::unauthenticated, "bad or missing bearer token");
  };

  server_->Post("/v1/connect", guarded([g, require_auth](const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    auto id = g->identity();
    id.auth_token.clear();
    res.set_content(encode(id), "application/json");
  }));

  server_->Post("/v1/search", guarded([g](const httplib::Request& req, httplib::Response& res) {
    auto q = decode_as<ResourceQuery>(req.body);
    auto offer = g->submit_search(token_of(req), q);
    if (!offer) {
      send_json(res, {{"queued", q.query_id}, {"position", g->queue().size()}}, 202);
      return;
    }
    res.set_content(encode(*offer), "application/json");
  }));

  server_->Post("/v1/execute", guarded([g](const httplib::Request& req, httplib::Response& res) {
    auto c = decode_as<ExecutionCommand>(req.body);
    res.set_content(encode(g->handle_execute(token_of(req), c)), "application/json");
  }));

  server_->Get("/v1/health", guarded([g](const httplib::Request&, httplib::Response& res) { send_json(res, g->health()); }));

  server_->Get("/v1/trace", guarded([g, require_auth](const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    Json out = Json::array();
    for (const auto& e : g->trace(req.get_param_value("workflow"))) out.push_back(guard::to_json(e));
    send_json(res, out);
  }));

  server_->Get("/v1/resources", guarded([g, require_auth](const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    Json out = Json::array();
    for (const auto& e : g->registry().list()) out.push_back(registry::to_json(e));
    send_json(res, out);
  }));

  server_->Post("/v1/resources", guarded([g, require_auth](const httplib::Request& req, httplib::Response& res) {
    require_auth(req);
    auto m = decode_as<ResourceManifest>(req.body);
    send_json(res, registry::to_json(g->registry().register_resource(std::move(m))), 201);
  }));

  server_->Post(R"(/v1/resources/([^/]+)/validate)",
                guarded([g, require_auth](const httplib::Request& req, httplib::Response& res) {
                  require_auth(req);
                  std::string id = req.matches[1];
                  send_json(res, registry::to_json(g->registry().validate(id, g->invoker())));
                }));
}

// ---------------------------------------------------------------------------
// Principal

namespace {

orchestrator::GateDecision decision_from_json(const Json& j, const std::string& wf, const std::string& task) {
  JsonReader r(j, "$");
  orchestrator::GateDecision d;
  d.workflow_id = wf;
  d.task_id = task;
  auto action = orchestrator::gate_action_from_string(r.string("action"));
  if (!action) throw_at(r.child_path("action"), "unknown gate action");
  d.action = *action;
  if (r.has("inputs")) d.inputs = value_map_from_json(r.raw("inputs"), r.child_path("inputs"));
  d.note = r.opt_string("note").value_or("");
  d.actor = r.opt_string("actor").value_or("");
  r.finish();
  return d;
}

}  // namespace

PrincipalServer::PrincipalServer(principal::Principal& p, std::int64_t link_timeout_ms)
    : principal_(p), link_timeout_ms_(link_timeout_ms) {
  auto* pp = &principal_;
  auto caller_of = [pp](const httplib::Request& req) {
    auto c = pp->authenticate(token_of(req));
    if (!c) throw Error(ErrorCode::unauthenticated, "bad or missing bearer token");
    return *c;
  };

  server_->Post("/v1/intents", guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
    auto caller = caller_of(req);
    auto intent = planner::intent_from_json(parse_json(req.body), "$");
    auto wf = pp->submit_intent(caller, std::move(intent));
    auto r = pp->get_status(caller, wf);
    send_json(res, {{"workflow_id", wf}, {"status", to_string(r.status)}}, 202);
  }));

  // Hand-authored no-LLM graph: {"intent": ..., "graph": ..., "manifests": [...]}.
  server_->Post("/v1/workflows", guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
    auto caller = caller_of(req);
    auto j = parse_json(req.body);
    JsonReader r(j, "$");
    planner::Intent intent;
    if (r.has("intent")) intent = planner::intent_from_json(r.raw("intent"), r.child_path("intent"));
    auto graph = graph_from_json(r.raw("graph"), r.child_path("graph"));
    std::map<std::string, ResourceManifest> manifests;
    if (r.has("manifests")) {
      const auto& m = r.object("manifests");
      for (const auto& [task, mj] : m.items()) {
        manifests[task] = manifest_from_json(mj, r.child_path("manifests") + "." + task);
      }
    }
    r.finish();
    auto wf = pp->submit_graph(caller, std::move(intent), std::move(graph), std::move(manifests));
    send_json(res, {{"workflow_id", wf}, {"status", to_string(pp->get_status(caller, wf).status)}}, 202);
  }));

  server_->Get(R"(/v1/workflows/([^/]+))", guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
    send_json(res, orchestrator::to_json(pp->get_status(caller_of(req), req.matches[1])));
  }));

  server_->Post(R"(/v1/workflows/([^/]+)/approve)",
                guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, orchestrator::to_json(pp->approve_graph(caller_of(req), req.matches[1])));
                }));

  server_->Post(R"(/v1/workflows/([^/]+)/gates/([^/]+))",
                guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
                  auto caller = caller_of(req);
                  auto d = decision_from_json(parse_json(req.body.empty() ? "{}" : req.body), req.matches[1],
                                              req.matches[2]);
                  send_json(res, orchestrator::to_json(pp->decide_gate(caller, d)));
                }));

  server_->Post(R"(/v1/workflows/([^/]+)/pause)",
                guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, orchestrator::to_json(pp->pause(caller_of(req), req.matches[1])));
                }));

  server_->Post(R"(/v1/workflows/([^/]+)/resume)",
                guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, orchestrator::to_json(pp->resume(caller_of(req), req.matches[1])));
                }));

  server_->Get(R"(/v1/workflows/([^/]+)/trace)",
               guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, pp->trace(caller_of(req), req.matches[1]));
               }));

  server_->Get("/v1/gateways", guarded([pp, caller_of](const httplib::Request& req, httplib::Response& res) {
    caller_of(req);
    Json out = Json::array();
    for (const auto& e : pp->roster().entries()) {
      out.push_back({{"gateway_id", e.identity.gateway_id},
                     {"display_name", e.identity.display_name},
                     {"base_url", e.identity.base_url},
                     {"rating", e.rating},
                     {"connected", e.connected},
                     {"last_seen", e.last_seen},
                     {"joined_epoch", e.joined_epoch}});
    }
    send_json(res, out);
  }));

  server_->Post("/v1/gateways/connect-requests",
                guarded([pp, timeout = link_timeout_ms_](const httplib::Request& req, httplib::Response& res) {
                  auto proposal = decode_as<GatewayIdentity>(req.body);
                  auto link = std::make_shared<gateway::HttpLink>(proposal, timeout);
                  res.set_content(encode(pp->connect(proposal, link)), "application/json");
                }));

  server_->Get("/v1/events", [pp, caller_of](const httplib::Request& req, httplib::Response& res) {
    principal::Caller caller;
    std::string wf = req.get_param_value("workflow");
    try {
      caller = caller_of(req);
      if (!wf.empty()) pp->get_status(caller, wf);
    } catch (const Error& e) {
      send_error(res, e.code(), e.detail());
      return;
    }
    auto sub = pp->events().subscribe(caller.tenant_id, wf);
    std::string initial;
    if (!wf.empty()) {
      auto r = pp->orchestrator().get(wf);
      initial = Json{{"workflow_id", wf}, {"kind", "snapshot"}, {"status", to_string(r.status)}}.dump();
    }
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, initial](std::size_t, httplib::DataSink& sink) mutable {
          if (!initial.empty()) {
            auto frame = "event: snapshot\ndata: " + initial + "\n\n";
            initial.clear();
            if (!sink.write(frame.data(), frame.size())) return false;
          }
          std::unique_lock lk(sub->mu);
          sub->cv.wait_for(lk, std::chrono::milliseconds(500), [&] { return sub->closed || !sub->queue.empty(); });
          if (sub->queue.empty()) {
            lk.unlock();
            if (sub->closed) {
              sink.done();
              return true;
            }
            static constexpr std::string_view keepalive = ": keepalive\n\n";
            return sink.write(keepalive.data(), keepalive.size());
          }
          std::string frames;
          while (!sub->queue.empty()) {
            frames += "event: status\ndata: " + sub->queue.front() + "\n\n";
            sub->queue.pop_front();
          }
          lk.unlock();
          return sink.write(frames.data(), frames.size());
        },
        [pp, sub](bool) { pp->events().unsubscribe(sub); });
  });
}

void PrincipalServer::stop() {
  principal_.events().close_all();
  Service::stop();
}

// ---------------------------------------------------------------------------
// Agent

AgentServer::AgentServer(std::shared_ptr<agents::Stub> stub) : stub_(std::move(stub)) {
  auto s = stub_;
  server_->Post("/invoke", guarded([s](const httplib::Request& req, httplib::Response& res) {
    auto cmd = decode_as<ExecutionCommand>(req.body);
    res.set_content(encode((*s)(cmd)), "application/json");
  }));
  server_->Get("/health", guarded([s](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"agent", s->name()}, {"calls", s->calls()}});
  }));
}

// ---------------------------------------------------------------------------
// Clients

namespace {

httplib::Client client_for(const std::string& base_url, std::int64_t timeout_ms) {
  auto url = parse_url(base_url);
  if (url.scheme != "http") throw TransportError("unsupported scheme: " + url.scheme);
  httplib::Client client(url.host, url.port);
  auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::milliseconds(timeout_ms));
  client.set_connection_timeout(t);
  client.set_read_timeout(t);
  client.set_write_timeout(t);
  return client;
}

// Decodes a response body, rethrowing error bodies as Error.
Json answer(const std::string& what, const httplib::Result& res) {
  if (!res) throw TransportError(what + ": " + httplib::to_string(res.error()));
  if (res->status >= 200 && res->status < 300) return parse_json(res->body);
  std::optional<ErrorCode> code;
  std::string message = "HTTP " + std::to_string(res->status);
  try {
    auto j = parse_json(res->body);
    code = error_code_from_string(j.value("error", std::string{}));
    message = j.value("message", message);
  } catch (const ParseError&) {
  }
  throw Error(code.value_or(ErrorCode::transport_error), message);
}

std::string escape(const std::string& s) { return httplib::detail::encode_url(s); }

}  // namespace

ApiClient::ApiClient(std::string base_url, std::string token, std::int64_t timeout_ms)
    : base_url_(std::move(base_url)), token_(std::move(token)), timeout_ms_(timeout_ms) {}

Json ApiClient::get(const std::string& path) {
  auto client = client_for(base_url_, timeout_ms_);
  client.set_bearer_token_auth(token_);
  return answer("GET " + path, client.Get(path));
}

Json ApiClient::post(const std::string& path, const Json& body) {
  auto client = client_for(base_url_, timeout_ms_);
  client.set_bearer_token_auth(token_);
  return answer("POST " + path, client.Post(path, body.dump(), "application/json"));
}

Json ApiClient::submit_intent(const Json& intent) { return post("/v1/intents", intent); }
Json ApiClient::submit_graph(const Json& body) { return post("/v1/workflows", body); }
Json ApiClient::status(const std::string& wf) { return get("/v1/workflows/" + escape(wf)); }
Json ApiClient::approve(const std::string& wf) { return post("/v1/workflows/" + escape(wf) + "/approve", Json::object()); }
Json ApiClient::gate(const std::string& wf, const std::string& task, const Json& decision) {
  return post("/v1/workflows/" + escape(wf) + "/gates/" + escape(task), decision);
}
Json ApiClient::pause(const std::string& wf) { return post("/v1/workflows/" + escape(wf) + "/pause", Json::object()); }
Json ApiClient::resume(const std::string& wf) { return post("/v1/workflows/" + escape(wf) + "/resume", Json::object()); }
Json ApiClient::trace(const std::string& wf) { return get("/v1/workflows/" + escape(wf) + "/trace"); }
Json ApiClient::gateways() { return get("/v1/gateways"); }

GatewayIdentity request_connection(const std::string& principal_url, const GatewayIdentity& identity,
                                   std::int64_t timeout_ms) {
  auto client = client_for(principal_url, timeout_ms);
  auto res = client.Post("/v1/gateways/connect-requests", encode(identity), "application/json");
  answer("connect request", res);
  return decode_as<GatewayIdentity>(res->body);
}

}  // namespace dawn::http
