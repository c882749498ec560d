#include "pact/completion.hpp"

#include "httplib.h"
#include "json.hpp"
#include "pact/error.hpp"

namespace pact {

namespace {

class HttpCompletionClient final : public CompletionClient {
 public:
  HttpCompletionClient(std::string base, std::string path)
      : client_(std::move(base)), path_(std::move(path)) {
    client_.set_read_timeout(120, 0);
  }

  CompletionResponse complete(const CompletionRequest& request) override {
    const nlohmann::json body = {{"prompt", request.prompt}, {"max_tokens", request.maxTokens}};
    auto res = client_.Post(path_, body.dump(), "application/json");
    if (!res) {
      throw Error(ErrorKind::Io, "completion request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorKind::Io, "completion endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
      return {nlohmann::json::parse(res->body).at("text").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ParseError, std::string("completion response: ") + e.what());
    }
  }

 private:
  httplib::Client client_;
  std::string path_;
};

}  // namespace

std::unique_ptr<CompletionClient> makeHttpCompletionClient(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorKind::InvalidConfig, "completion url needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  const std::string base = slash == std::string::npos ? url : url.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : url.substr(slash);
  return std::make_unique<HttpCompletionClient>(base, path);
}

}  // namespace pact
