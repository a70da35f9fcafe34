#pragma once

#include <memory>
#include <set>
#include <string>

#include "app/pipeline.hpp"
#include "data/manifest.hpp"

namespace httplib {
class Server;
}

namespace wgv {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Try-on endpoints over one read-only checkpoint set and a catalog dataset.
class TryOnService {
 public:
  TryOnService(const PipelineModels& models, DatasetManifest catalog);
  ~TryOnService();
  TryOnService(const TryOnService&) = delete;
  TryOnService& operator=(const TryOnService&) = delete;

  HttpReply healthz() const;
  HttpReply catalog() const;
  HttpReply default_mask(const std::string& model_id) const;
  HttpReply tryon(const std::string& request_body) const;

  // Returns the bound port (a free one when `port` is 0). Throws IoError.
  int bind(const std::string& host, int port);
  // Serves until stop().
  void run();
  void stop();

 private:
  const PipelineModels& models_;
  DatasetManifest catalog_;
  std::set<std::string> tops_;
  std::set<std::string> bottoms_;
  std::unique_ptr<httplib::Server> server_;
};

// Maps an error to its HTTP status: 400 for invalid requests and masks, 404
// for unknown ids, 500 otherwise.
int http_status(ErrorCode code);

}  // namespace wgv
