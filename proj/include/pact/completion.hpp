#pragma once

#include <memory>
#include <string>

namespace pact {

struct CompletionRequest {
  std::string prompt;
  int maxTokens = 256;
};

struct CompletionResponse {
  std::string text;
};

// Text-completion backend used by the remote ranker and the remote agent
// policy.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// POSTs {"prompt","max_tokens"} as JSON to `url` and reads {"text"} back.
// `url` looks like http://host:port/path.
std::unique_ptr<CompletionClient> makeHttpCompletionClient(const std::string& url);

}  // namespace pact
