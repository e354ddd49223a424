#pragma once

#include <cstdlib>
#include <string>
#include <vector>

#include <httplib.h>

#include "ideagraph/gateway.hpp"

namespace ideagraph {

// Chat-completion style HTTP backend. POST {base}/chat/completions and
// {base}/embeddings with a bearer token taken from the environment.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.kind != BackendKind::live) throw PreconditionError("LiveBackend needs a live config");
    const char* tok = std::getenv(cfg_.auth_token_env.c_str());
    if (!tok || !*tok)
      throw PreconditionError("environment variable " + cfg_.auth_token_env + " is not set");
    token_ = tok;
    split_url(cfg_.base_url, origin_, prefix_);
  }

  std::string chat(const ChatRequest& req) override {
    json body = {{"model", cfg_.model},
                 {"temperature", req.temperature},
                 {"seed", req.seed},
                 {"response_format", {{"type", "json_object"}}},
                 {"messages", json::array({{{"role", "user"}, {"content", req.prompt_text}}})}};
    auto res = post("/chat/completions", body);
    try {
      return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("unexpected chat response shape: ") + e.what());
    }
  }

  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override {
    json body = {{"model", cfg_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    auto res = post("/embeddings", body);
    std::vector<std::vector<double>> out(texts.size());
    try {
      const auto& data = res.at("data");
      if (data.size() != texts.size()) throw BackendError("embedding count mismatch");
      for (std::size_t i = 0; i < data.size(); ++i) {
        auto idx = data[i].value("index", i);
        if (idx >= out.size()) throw BackendError("embedding index out of range");
        out[idx] = data[i].at("embedding").get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw BackendError(std::string("unexpected embedding response shape: ") + e.what());
    }
    return out;
  }

  static void split_url(const std::string& url, std::string& origin, std::string& prefix) {
    auto scheme = url.find("://");
    auto path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    origin = url.substr(0, path);
    prefix = path == std::string::npos ? std::string() : url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }

 private:
  json post(const std::string& route, const json& body) {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(30);
    cli.set_read_timeout(300);
    cli.set_bearer_token_auth(token_);
    auto res = cli.Post(prefix_ + route, body.dump(), "application/json");
    if (!res) throw BackendError("POST " + route + " failed: " + httplib::to_string(res.error()));
    if (res->status / 100 != 2)
      throw BackendError("POST " + route + " returned HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw BackendError(std::string("response is not JSON: ") + e.what());
    }
  }

  BackendConfig cfg_;
  std::string token_;
  std::string origin_;
  std::string prefix_;
};

}  // namespace ideagraph
