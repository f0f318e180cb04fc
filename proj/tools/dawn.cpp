// dawn: operator command line for the principal, gateways, agents, the HR
// demo and the evaluation harness.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "cli_config.hpp"
#include "dawn/demo.hpp"
#include "dawn/eval.hpp"
#include "dawn/http_services.hpp"
#include "dawn/log.hpp"
#include "dawn/registry.hpp"

namespace {

using namespace dawn;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;
constexpr int kExitInternal = 4;

constexpr const char* kExitCodes =
    "Exit codes: 0 success; 1 workflow failed or evaluation threshold missed; 2 usage error;\n"
    "3 operation error (printed as 'error: <code>: <message>'); 4 internal error.\n"
    "The config file is taken from --config or the DAWN_CONFIG environment variable.";

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

void write_text(const std::string& file, const std::string& text) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + file);
  out << text;
}

guard::GuardPolicy policy_or_default(const std::optional<std::filesystem::path>& file) {
  return file ? guard::load_policy(*file) : guard::default_policy();
}

std::optional<planner::Strategy> strategy_from_string(const std::string& s) {
  if (s == "react") return planner::Strategy::react;
  if (s == "rewoo") return planner::Strategy::rewoo;
  if (s == "tot") return planner::Strategy::tot;
  return std::nullopt;
}

// "k=v" pairs.
ValueMap parse_assignments(const std::vector<std::string>& items) {
  ValueMap out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::parse_error, "expected key=value, got " + item);
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Services

int principal_serve(const cli::CliConfig& cfg, const std::string& listen_override) {
  const auto& s = cfg.principal;
  principal::Config pc;
  pc.principal_id = s.principal_id;
  for (const auto& u : s.users) pc.user_tokens[u.token] = {u.tenant, u.user};
  pc.gateway_allow_list = {s.gateway_tokens.begin(), s.gateway_tokens.end()};
  pc.state_dir = s.state_dir;
  pc.pool_capacity = s.pool_capacity;
  pc.alpha = s.alpha;
  pc.fanout_timeout_ms = s.fanout_timeout_ms;
  pc.node_deadline_ms = s.node_deadline_ms;
  pc.join = s.join;
  pc.strategy = s.strategy;
  pc.gate_policy = s.gate_policy;
  pc.no_llm_bindings = s.no_llm_bindings;
  pc.policy = policy_or_default(s.policy_file);
  auto provider = std::make_shared<planner::ScriptedProvider>(
      s.provider_file ? planner::ScriptedProvider::from_file(*s.provider_file) : planner::default_scripted_provider());
  principal::Principal p(pc, provider);
  http::PrincipalServer server(p);
  auto [host, port] = cli::split_listen(listen_override.empty() ? s.listen : listen_override);
  server.start(host, port);
  std::cout << "principal " << s.principal_id << " listening on " << server.base_url() << std::endl;
  wait_for_signal();
  server.stop();
  return kExitOk;
}

int gateway_serve(const cli::CliConfig& cfg, const std::string& listen_override) {
  const auto& s = cfg.gateway;
  auto [host, port] = cli::split_listen(listen_override.empty() ? s.listen : listen_override);
  gateway::Config gc;
  gc.gateway_id = s.gateway_id;
  gc.display_name = s.display_name.empty() ? s.gateway_id : s.display_name;
  gc.tokens = {s.tokens.begin(), s.tokens.end()};
  gc.snapshot_path = s.snapshot_path;
  gc.policy = policy_or_default(s.policy_file);
  auto invoker = std::make_shared<RoutingInvoker>(std::make_shared<LocalInvoker>(), std::make_shared<HttpInvoker>());
  auto gw = std::make_shared<gateway::Gateway>(gc, invoker);
  if (s.manifests) {
    for (auto& m : registry::load_manifests(*s.manifests)) {
      auto id = m.resource_id;
      if (!gw->registry().get(id)) gw->registry().register_resource(std::move(m));
      auto report = gw->registry().validate(id, *invoker);
      std::cout << "validated " << id << ": " << (report.overall ? "pass" : "fail") << std::endl;
    }
  }
  http::GatewayServer server(gw);
  server.start(host, port);
  std::cout << "gateway " << s.gateway_id << " listening on " << server.base_url() << std::endl;
  if (!s.principal_url.empty()) {
    GatewayIdentity proposal;
    proposal.gateway_id = s.gateway_id;
    proposal.display_name = gc.display_name;
    proposal.base_url = s.public_url.empty() ? server.base_url() : s.public_url;
    proposal.auth_token = s.tokens.empty() ? "" : s.tokens.front();
    proposal.capabilities = {ResourceKind::tool, ResourceKind::agent, ResourceKind::agentic_application};
    http::request_connection(s.principal_url, proposal);
    std::cout << "connected to " << s.principal_url << std::endl;
  }
  wait_for_signal();
  server.stop();
  return kExitOk;
}

int agent_serve(const std::string& name, const std::string& listen, const std::string& failure_mode,
                std::int64_t latency_ms) {
  agents::StubBehavior behavior;
  behavior.latency_ms = latency_ms;
  auto mode = agents::failure_mode_from_string(failure_mode);
  if (!mode) throw Error(ErrorCode::parse_error, "unknown failure mode " + failure_mode);
  behavior.failure_mode = *mode;
  bool builtin = std::find(agents::kBuiltins.begin(), agents::kBuiltins.end(), name) != agents::kBuiltins.end();
  std::shared_ptr<const agents::HrData> data;
  if (!builtin) data = std::make_shared<const agents::HrData>(agents::load_hr_data(agents::default_hr_dir()));
  http::AgentServer server(agents::make_stub(name, data, behavior));
  auto [host, port] = cli::split_listen(listen);
  server.start(host, port);
  std::cout << "agent " << name << " listening on " << server.base_url() << "/invoke" << std::endl;
  wait_for_signal();
  server.stop();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Demo

int demo_hr(const std::string& mode_name, std::int64_t timeout_ms, int port, bool json) {
  auto mode = mode_from_string(mode_name);
  if (!mode || *mode == OperationalMode::no_llm) throw Error(ErrorCode::parse_error, "mode must be copilot or llm_agent");
  demo::ClusterOptions co;
  co.principal_port = *mode == OperationalMode::copilot ? port : 0;
  demo::HrCluster cluster(co);
  demo::DemoOptions dopt;
  dopt.mode = *mode;
  dopt.timeout_ms = timeout_ms;
  auto result = demo::run_hr_demo(cluster, dopt);

  if (*mode == OperationalMode::copilot) {
    std::cout << "workflow " << result.workflow_id << " is waiting at its gates.\n"
              << "principal " << cluster.principal_url() << " (token " << demo::kDemoUserToken << ")\n"
              << "decide with: dawn workflow gate " << result.workflow_id << " <task> --approve --url "
              << cluster.principal_url() << " --token " << demo::kDemoUserToken << std::endl;
    auto client = cluster.client();
    std::string last;
    while (!g_stop) {
      auto record = client.status(result.workflow_id);
      auto status = record.at("status").get<std::string>();
      auto gates = record.at("pending_gates").dump();
      if (status + gates != last) {
        std::cout << "status " << status << " pending_gates " << gates << std::endl;
        last = status + gates;
      }
      if (status == "completed" || status == "failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    result.record = client.status(result.workflow_id);
    result.trace = client.trace(result.workflow_id);
  }

  if (json) {
    print_json({{"workflow_id", result.workflow_id}, {"wall_ms", result.wall_ms}, {"record", result.record}});
  } else {
    std::cout << demo::format_audit(result.record);
    std::cout << "workflow " << result.workflow_id << " " << result.record.at("status").get<std::string>() << " with "
              << result.record.at("node_outputs").size() << " node outputs in " << static_cast<long>(result.wall_ms)
              << " ms" << std::endl;
  }
  return result.record.at("status") == "completed" ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------
// Evaluation

int eval_planner(std::uint64_t seed, int repeats, const std::string& provider_name, double noise,
                 const std::string& strategy_name, const std::string& json_file) {
  auto strategy = strategy_from_string(strategy_name);
  if (!strategy) throw Error(ErrorCode::parse_error, "unknown strategy " + strategy_name);
  double p = 0.0;
  if (provider_name == "perfect") p = 0.0;
  else if (provider_name == "drop-one") p = 1.0;
  else if (provider_name == "noisy") p = noise;
  else throw Error(ErrorCode::parse_error, "unknown provider " + provider_name);

  auto cases = eval::generate_cases(seed);
  eval::CaseProvider provider(cases, p, seed);
  auto report = eval::run_planner_eval(provider, cases, repeats, *strategy, seed);
  std::cout << eval::format_table(report);
  if (!json_file.empty()) write_text(json_file, eval::to_json(report).dump(2) + "\n");

  double expected = eval::expected_case_provider_rate(seed, p, cases, repeats);
  bool ok = provider_name == "noisy" ? std::abs(report.success_rate - expected) <= 0.1
                                     : report.success_rate == expected;
  std::cout << "expected " << expected << (ok ? " ok" : " MISSED") << std::endl;
  return ok ? kExitOk : kExitFailed;
}

int eval_ir(std::uint64_t seed, bool full, const std::string& reranker_name, bool serial, const std::string& json_file,
            const std::string& corpus_out) {
  auto corpus = eval::generate_ir_corpus(seed, full);
  if (!corpus_out.empty()) eval::write_ir_corpus(corpus, corpus_out);
  std::unique_ptr<retrieval::RerankProvider> reranker;
  if (reranker_name == "identity") reranker = std::make_unique<retrieval::IdentityReranker>();
  else if (reranker_name == "lexical") reranker = std::make_unique<retrieval::LexicalOverlapReranker>();
  else if (reranker_name == "oracle") reranker = std::make_unique<eval::OracleReranker>(corpus);
  else throw Error(ErrorCode::parse_error, "unknown reranker " + reranker_name);

  auto report = eval::run_ir_eval(corpus, *reranker, serial ? retrieval::Execution::serial : retrieval::Execution::parallel);
  std::cout << eval::format_table(report);
  if (!json_file.empty()) write_text(json_file, eval::to_json(report).dump(2) + "\n");

  bool ok = corpus.problems().empty() && report.fallbacks == 0 && report.stage2.ndcg1 >= report.stage1.ndcg1;
  if (!ok) std::cout << "threshold MISSED: stage-2 NDCG@1 below stage 1 or reranker fell back" << std::endl;
  return ok ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dawn: distributed agent workflow network", "dawn"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  std::string config_file;
  int verbosity = 0;
  bool quiet = false;
  app.add_option("--config", config_file, "Config file (JSON)")->envname("DAWN_CONFIG");
  app.add_flag("-v,--verbose", verbosity, "More logging (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  auto load = [&]() -> cli::CliConfig {
    if (config_file.empty()) return {};
    return cli::load_config(config_file);
  };

  std::function<int()> action;

  // principal serve
  auto* principal = app.add_subcommand("principal", "Principal service")->require_subcommand(1);
  std::string p_listen;
  auto* p_serve = principal->add_subcommand("serve", "Serve the principal HTTP API");
  p_serve->add_option("--listen", p_listen, "host:port (overrides config)");
  p_serve->callback([&] { action = [&] { return principal_serve(load(), p_listen); }; });

  // gateway serve
  auto* gateway = app.add_subcommand("gateway", "Gateway service")->require_subcommand(1);
  std::string g_listen;
  auto* g_serve = gateway->add_subcommand("serve", "Serve a gateway and connect it to a principal");
  g_serve->add_option("--listen", g_listen, "host:port (overrides config)");
  g_serve->callback([&] { action = [&] { return gateway_serve(load(), g_listen); }; });

  // agent serve <name>
  auto* agent = app.add_subcommand("agent", "Stand-alone demo agents")->require_subcommand(1);
  std::string a_name, a_listen = "127.0.0.1:8720", a_failure = "none";
  std::int64_t a_latency = 0;
  auto* a_serve = agent->add_subcommand("serve", "Serve one agent on POST /invoke");
  a_serve->add_option("name", a_name, "Agent name (HR agent or builtin)")->required();
  a_serve->add_option("--listen", a_listen, "host:port");
  a_serve->add_option("--failure-mode", a_failure, "none|error_once|always_error|slow|poisoned_output");
  a_serve->add_option("--latency-ms", a_latency, "Added latency per call")->check(CLI::NonNegativeNumber);
  a_serve->callback([&] { action = [&] { return agent_serve(a_name, a_listen, a_failure, a_latency); }; });

  // demo hr
  auto* demo_cmd = app.add_subcommand("demo", "Demonstrations")->require_subcommand(1);
  std::string d_mode = "llm_agent";
  std::int64_t d_timeout = 10000;
  int d_port = 8700;
  bool d_json = false;
  auto* d_hr = demo_cmd->add_subcommand("hr", "HR hiring pipeline: 1 principal, 2 gateways, 6 agents");
  d_hr->add_option("--mode", d_mode, "copilot|llm_agent")->check(CLI::IsMember({"copilot", "llm_agent"}));
  d_hr->add_option("--timeout-ms", d_timeout, "Give up after this long (llm_agent)");
  d_hr->add_option("--port", d_port, "Principal port in copilot mode");
  d_hr->add_flag("--json", d_json, "Print the final record as JSON");
  d_hr->callback([&] { action = [&] { return demo_hr(d_mode, d_timeout, d_port, d_json); }; });

  // workflow ...
  auto* wf = app.add_subcommand("workflow", "Workflow API client")->require_subcommand(1);
  std::string w_url, w_token;
  wf->add_option("--url", w_url, "Principal base URL (default from config)");
  wf->add_option("--token", w_token, "Bearer token (default from config)");
  auto client = [&] {
    auto cfg = load();
    return http::ApiClient(w_url.empty() ? cfg.client.principal_url : w_url, w_token.empty() ? cfg.client.token : w_token);
  };
  auto add_client_opts = [&](CLI::App* sub) {
    sub->add_option("--url", w_url, "Principal base URL");
    sub->add_option("--token", w_token, "Bearer token");
  };

  std::string w_text, w_mode = "copilot", w_graph;
  std::vector<std::string> w_prefs;
  auto* w_submit = wf->add_subcommand("submit", "Submit an intent, or an authored graph with --graph");
  add_client_opts(w_submit);
  w_submit->add_option("--text", w_text, "Intent text");
  w_submit->add_option("--mode", w_mode, "copilot|llm_agent")->check(CLI::IsMember({"copilot", "llm_agent"}));
  w_submit->add_option("--pref", w_prefs, "Preference key=value (repeatable)");
  w_submit->add_option("--graph", w_graph, "Authored no-LLM workflow file")->check(CLI::ExistingFile);
  w_submit->callback([&] {
    action = [&] {
      auto c = client();
      if (!w_graph.empty()) {
        print_json(c.submit_graph(parse_json(registry::read_file(w_graph))));
        return kExitOk;
      }
      if (w_text.empty()) throw Error(ErrorCode::parse_error, "--text or --graph is required");
      Json prefs = Json::object();
      for (const auto& [k, v] : parse_assignments(w_prefs)) prefs[k] = std::get<std::string>(v);
      print_json(c.submit_intent({{"text", w_text}, {"mode", w_mode}, {"preferences", prefs}}));
      return kExitOk;
    };
  });

  std::string w_id;
  auto simple = [&](const char* name, const char* help, std::function<Json(http::ApiClient&, const std::string&)> f) {
    auto* sub = wf->add_subcommand(name, help);
    add_client_opts(sub);
    sub->add_option("workflow_id", w_id, "Workflow id")->required();
    sub->callback([&, f] {
      action = [&, f] {
        auto c = client();
        print_json(f(c, w_id));
        return kExitOk;
      };
    });
  };
  simple("status", "Show a workflow record", [](http::ApiClient& c, const std::string& id) { return c.status(id); });
  simple("approve", "Approve the composed graph and start", [](http::ApiClient& c, const std::string& id) { return c.approve(id); });
  simple("pause", "Pause dispatching", [](http::ApiClient& c, const std::string& id) { return c.pause(id); });
  simple("resume", "Resume a paused or persisted workflow", [](http::ApiClient& c, const std::string& id) { return c.resume(id); });
  simple("trace", "Merged audit and guard timeline", [](http::ApiClient& c, const std::string& id) { return c.trace(id); });

  std::string w_task, w_note;
  bool w_approve = false, w_reject = false, w_edit = false;
  std::vector<std::string> w_inputs;
  auto* w_gate = wf->add_subcommand("gate", "Decide a pending gate");
  add_client_opts(w_gate);
  w_gate->add_option("workflow_id", w_id, "Workflow id")->required();
  w_gate->add_option("task_id", w_task, "Gated task")->required();
  auto* f_approve = w_gate->add_flag("--approve", w_approve, "Approve the node");
  auto* f_reject = w_gate->add_flag("--reject", w_reject, "Reject the node (fails the workflow)");
  auto* f_edit = w_gate->add_flag("--edit", w_edit, "Override inputs, then approve");
  f_approve->excludes(f_reject)->excludes(f_edit);
  f_reject->excludes(f_edit);
  w_gate->add_option("--input", w_inputs, "Input override key=value (with --edit)");
  w_gate->add_option("--note", w_note, "Free-text note");
  w_gate->callback([&] {
    action = [&] {
      if (!w_approve && !w_reject && !w_edit) throw Error(ErrorCode::parse_error, "one of --approve, --reject, --edit");
      Json body = {{"action", w_approve ? "approve" : (w_reject ? "reject" : "edit")}};
      if (!w_note.empty()) body["note"] = w_note;
      if (!w_inputs.empty()) body["inputs"] = to_json(parse_assignments(w_inputs));
      auto c = client();
      print_json(c.gate(w_id, w_task, body));
      return kExitOk;
    };
  });

  // eval ...
  auto* ev = app.add_subcommand("eval", "Evaluation harness")->require_subcommand(1);
  std::uint64_t e_seed = 7;
  int e_repeats = eval::kDefaultRepeats;
  std::string e_provider = "perfect", e_strategy = "react", e_json, e_reranker = "lexical", e_corpus_out;
  double e_noise = 0.25;
  bool e_full = false, e_serial = false;
  auto* e_planner = ev->add_subcommand("planner", "Planner success-rate protocol");
  e_planner->add_option("--seed", e_seed, "Seed");
  e_planner->add_option("--repeats", e_repeats, "Trials per case")->check(CLI::PositiveNumber);
  e_planner->add_option("--provider", e_provider, "perfect|drop-one|noisy")
      ->check(CLI::IsMember({"perfect", "drop-one", "noisy"}));
  e_planner->add_option("--noise", e_noise, "Drop probability for the noisy provider")->check(CLI::Range(0.0, 1.0));
  e_planner->add_option("--strategy", e_strategy, "react|rewoo|tot")->check(CLI::IsMember({"react", "rewoo", "tot"}));
  e_planner->add_option("--json", e_json, "Write the report as JSON");
  e_planner->callback([&] {
    action = [&] { return eval_planner(e_seed, e_repeats, e_provider, e_noise, e_strategy, e_json); };
  });
  auto* e_ir = ev->add_subcommand("ir", "Two-stage retrieval benchmark");
  e_ir->add_option("--seed", e_seed, "Corpus seed");
  e_ir->add_flag("--full", e_full, "20000 queries instead of 1000");
  e_ir->add_option("--reranker", e_reranker, "identity|lexical|oracle")
      ->check(CLI::IsMember({"identity", "lexical", "oracle"}));
  e_ir->add_flag("--serial", e_serial, "Score queries on one thread");
  e_ir->add_option("--json", e_json, "Write the report as JSON");
  e_ir->add_option("--corpus-out", e_corpus_out, "Also write the corpus to this directory");
  e_ir->callback([&] { action = [&] { return eval_ir(e_seed, e_full, e_reranker, e_serial, e_json, e_corpus_out); }; });

  // registry ...
  auto* reg = app.add_subcommand("registry", "Gateway registry client")->require_subcommand(1);
  std::string r_url, r_token, r_file, r_id;
  auto gateway_client = [&] {
    auto cfg = load();
    return http::ApiClient(r_url.empty() ? cfg.client.gateway_url : r_url,
                           r_token.empty() ? cfg.client.gateway_token : r_token);
  };
  auto add_reg_opts = [&](CLI::App* sub) {
    sub->add_option("--url", r_url, "Gateway base URL (default from config)");
    sub->add_option("--token", r_token, "Gateway bearer token (default from config)");
  };
  auto* r_register = reg->add_subcommand("register", "Register a manifest file");
  add_reg_opts(r_register);
  r_register->add_option("manifest", r_file, "Manifest JSON file")->required()->check(CLI::ExistingFile);
  r_register->callback([&] {
    action = [&] {
      auto m = decode_as<ResourceManifest>(registry::read_file(r_file));
      print_json(gateway_client().post("/v1/resources", parse_json(encode(m))));
      return kExitOk;
    };
  });
  auto* r_validate = reg->add_subcommand("validate", "Validate a registered resource");
  add_reg_opts(r_validate);
  r_validate->add_option("resource_id", r_id, "Resource id")->required();
  r_validate->callback([&] {
    action = [&] {
      auto report = gateway_client().post("/v1/resources/" + r_id + "/validate", Json::object());
      print_json(report);
      return report.value("overall", false) ? kExitOk : kExitFailed;
    };
  });
  auto* r_list = reg->add_subcommand("list", "List registry entries");
  add_reg_opts(r_list);
  r_list->callback([&] {
    action = [&] {
      print_json(gateway_client().get("/v1/resources"));
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  log::set_level(quiet ? log::Level::error : (verbosity >= 2 ? log::Level::debug : (verbosity == 1 ? log::Level::info : log::Level::warn)));
  try {
    return action ? action() : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.detail() << std::endl;
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return kExitInternal;
  }
}
