#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "engine.hpp"

namespace distb {

struct ApiRequest {
  std::string method;  // GET | POST
  std::string path;
  std::string body;
  std::map<std::string, std::string> headers;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

inline nlohmann::json block_to_json(const Block& b) {
  nlohmann::json j;
  j["index"] = b.index;
  j["version"] = b.header.version;
  j["timestamp"] = b.header.timestamp;
  j["difficulty"] = b.header.difficulty;
  j["nonce"] = b.header.nonce;
  j["prev_hash"] = to_hex(b.header.prev_hash);
  j["payload_hash"] = to_hex(b.header.payload_digest);
  j["hash"] = to_hex(b.block_hash);
  j["payload"] = b.payload;
  try {
    j["kind"] = payload_kind(b.decoded());
  } catch (const std::exception&) {
    j["kind"] = "undecodable";
  }
  return j;
}

// Inverse of block_to_json; lets clients rebuild and validate a chain.
inline Block block_from_json(const nlohmann::json& j) {
  Block b;
  b.index = j.at("index").get<std::uint64_t>();
  b.header.version = j.at("version").get<std::uint32_t>();
  b.header.timestamp = j.at("timestamp").get<std::uint32_t>();
  b.header.difficulty = j.at("difficulty").get<std::uint32_t>();
  b.header.nonce = j.at("nonce").get<std::uint32_t>();
  b.header.prev_hash = digest_from_hex(j.at("prev_hash").get<std::string>());
  b.header.payload_digest = digest_from_hex(j.at("payload_hash").get<std::string>());
  b.block_hash = digest_from_hex(j.at("hash").get<std::string>());
  b.payload = j.at("payload").get<std::string>();
  return b;
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
  nlohmann::json j;
  j["verdict"] = v.consistent() ? "consistent" : "inconsistent";
  if (v.observed_digest) j["observed"] = to_hex(*v.observed_digest);
  if (v.expected_digest) j["expected"] = to_hex(*v.expected_digest);
  if (!v.detail.empty()) j["detail"] = v.detail;
  return j;
}

// REST front end over a live World. Requests are applied one at a time at
// the world's current simulated time.
class Gateway {
 public:
  explicit Gateway(World& world) : world_(world) {}

  ApiResponse handle(const ApiRequest& req) {
    std::lock_guard<std::mutex> lock(mu_);
    try {
      return route(req);
    } catch (const std::exception& e) {
      return error(500, e.what());
    }
  }

  // Blocks until stop() is called.
  bool serve(const std::string& host, int port) {
    install_routes();
    return server_.listen(host, port);
  }
  // Binds an ephemeral port and returns it; follow with listen().
  int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen() {
    install_routes();
    return server_.listen_after_bind();
  }
  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }

 private:
  void install_routes() {
    auto forward = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ApiRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      req.body = hreq.body;
      for (const auto& [k, v] : hreq.headers) req.headers[lower(k)] = v;
      const ApiResponse res = handle(req);
      hres.status = res.status;
      hres.set_content(res.body.dump(), "application/json");
    };
    server_.Get(".*", forward);
    server_.Post(".*", forward);
  }

  static std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  }

  static ApiResponse error(int status, const std::string& msg, const std::string& path = "") {
    nlohmann::json j;
    j["error"] = msg;
    if (!path.empty()) j["path"] = path;
    return {status, j};
  }

  // "/prefix/<id>" -> id
  static std::optional<SwitchId> id_after(const std::string& path, const std::string& prefix) {
    if (path.rfind(prefix, 0) != 0) return std::nullopt;
    const auto rest = path.substr(prefix.size());
    if (rest.empty() || rest.size() > 9 || rest.find_first_not_of("0123456789") != std::string::npos)
      return std::nullopt;
    return static_cast<SwitchId>(std::stoul(rest));
  }

  // "Authorization: Bearer <principal>:<token>"
  bool authorized(const ApiRequest& req) {
    AccessRequest ar;
    if (auto it = req.headers.find("authorization"); it != req.headers.end()) {
      const std::string prefix = "Bearer ";
      if (it->second.rfind(prefix, 0) == 0) {
        const auto cred = it->second.substr(prefix.size());
        const auto colon = cred.find(':');
        ar.principal = cred.substr(0, colon);
        if (colon != std::string::npos) ar.signature_token = cred.substr(colon + 1);
      }
    }
    return world_.access().decide(ar, world_.now()) == AccessDecision::Granted;
  }

  ApiResponse chain_json(const Chain& c) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : c.blocks()) arr.push_back(block_to_json(b));
    return {200, arr};
  }

  // Lets deferred broadcasts land before answering.
  void settle() { world_.run_until(world_.now() + 2 * world_.config().hop_delay_s); }

  ApiResponse route(const ApiRequest& req) {
    auto& cluster = world_.cluster();
    if (req.method == "GET") {
      if (req.path == "/chain") return chain_json(cluster.control_chain());
      if (req.path == "/chain/data") return chain_json(cluster.data_chain());
      if (auto id = id_after(req.path, "/stats/desc/")) {
        auto it = world_.switches().find(*id);
        if (it == world_.switches().end()) return error(404, "unknown switch " + std::to_string(*id));
        const Switch& sw = it->second;
        nlohmann::json j;
        j["dpid"] = sw.id();
        j["table_size"] = sw.table().size();
        j["table_hash"] = to_hex(flow_table_hash(sw));
        j["isolated"] = sw.isolated();
        j["master_controller"] = cluster.master_of(sw.id());
        j["counters"] = {{"matched", sw.counters().matched},
                         {"forwarded", sw.counters().forwarded},
                         {"dropped", sw.counters().dropped},
                         {"to_controller", sw.counters().to_controller}};
        j["time"] = world_.now();
        return {200, j};
      }
      if (auto id = id_after(req.path, "/stats/flow/")) {
        auto it = world_.switches().find(*id);
        if (it == world_.switches().end()) return error(404, "unknown switch " + std::to_string(*id));
        nlohmann::json j;
        j["dpid"] = *id;
        j["flows"] = it->second.table().to_json();
        j["dump"] = dump_flows(it->second);
        return {200, j};
      }
      return error(404, "no such endpoint: GET " + req.path);
    }
    if (req.method == "POST") {
      const bool rules = req.path == "/rules";
      const auto verify_id = id_after(req.path, "/verify/");
      if (!rules && !verify_id) return error(404, "no such endpoint: POST " + req.path);
      if (!authorized(req)) return error(403, "access denied");
      if (rules) {
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded()) return error(400, "body is not valid JSON", "/");
        RuleSet set;
        try {
          set = RuleSet::from_json(j);
        } catch (const ConfigError& e) {
          return error(400, e.what(), e.path());
        }
        for (const auto& [k, r] : set)
          if (!world_.switches().count(r.dpid)) return error(400, "unknown dpid " + std::to_string(r.dpid), "/");
        const Block& b = cluster.submit_rule_update(set, world_.now());
        nlohmann::json out;
        out["index"] = b.index;
        out["hash"] = to_hex(b.block_hash);
        out["kind"] = "rule_update";
        settle();
        return {200, out};
      }
      auto it = world_.switches().find(*verify_id);
      if (it == world_.switches().end()) return error(404, "unknown switch " + std::to_string(*verify_id));
      if (it->second.isolated()) return error(409, "switch " + std::to_string(*verify_id) + " is isolated");
      return {200, verdict_to_json(verify_switch(it->second, cluster.expected_digest(*verify_id)))};
    }
    return error(404, "unsupported method " + req.method);
  }

  World& world_;
  std::mutex mu_;
  httplib::Server server_;
};

}  // namespace distb
