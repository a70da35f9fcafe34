#include "app/service.hpp"

#include <chrono>

#include <httplib.h>

#include "common/error.hpp"
#include "common/png_io.hpp"
#include "data/loader.hpp"

namespace wgv {
namespace {

using nlohmann::json;

HttpReply error_reply(const Error& e) {
  return {http_status(e.code()), json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump()};
}

std::string png_base64(const std::vector<std::uint8_t>& bytes) {
  return httplib::detail::base64_encode(std::string(bytes.begin(), bytes.end()));
}

std::string id_field(const json& req, const char* key) {
  if (!req.contains(key) || !req[key].is_string())
    fail(ErrorCode::InvalidArgument, std::string("request field '") + key + "' must be a string");
  return req[key].get<std::string>();
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionError:
    case ErrorCode::NonBinaryError:
    case ErrorCode::InvalidArgument: return 400;
    case ErrorCode::UnknownId: return 404;
    default: return 500;
  }
}

TryOnService::TryOnService(const PipelineModels& models, DatasetManifest catalog)
    : models_(models), catalog_(std::move(catalog)) {
  if (catalog_.resolution != models_.resolution)
    fail(ErrorCode::SchemaMismatch, "catalog resolution " + catalog_.resolution.to_string() +
                                        " differs from the checkpoints' " + models_.resolution.to_string());
  for (const auto& e : catalog_.samples) {
    tops_.insert(e.top_id);
    if (e.bottom_id) bottoms_.insert(*e.bottom_id);
  }
}

TryOnService::~TryOnService() = default;

HttpReply TryOnService::healthz() const { return {200, json{{"status", "ok"}}.dump()}; }

HttpReply TryOnService::catalog() const {
  json models = json::array(), tops = json::array(), bottoms = json::array();
  for (const auto& e : catalog_.samples) {
    json m{{"id", e.id}, {"thumbnail", "models/" + e.id + ".png"}, {"top_id", e.top_id}, {"bottom_id", nullptr}};
    if (e.bottom_id) m["bottom_id"] = *e.bottom_id;
    models.push_back(m);
  }
  for (const auto& t : tops_) tops.push_back({{"id", t}, {"thumbnail", "tops/" + t + ".png"}});
  for (const auto& b : bottoms_) bottoms.push_back({{"id", b}, {"thumbnail", "bottoms/" + b + ".png"}});
  return {200, json{{"resolution", catalog_.resolution.to_string()},
                    {"models", models},
                    {"tops", tops},
                    {"bottoms", bottoms}}
                   .dump()};
}

HttpReply TryOnService::default_mask(const std::string& model_id) const {
  try {
    if (!catalog_.find(model_id)) fail(ErrorCode::UnknownId, "unknown model id '" + model_id + "'");
    return {200, encode_hem(build_wearing_guide(load_parsing(catalog_, model_id))).dump()};
  } catch (const Error& e) {
    return error_reply(e);
  }
}

HttpReply TryOnService::tryon(const std::string& request_body) const {
  const auto start = std::chrono::steady_clock::now();
  try {
    const json req = json::parse(request_body, nullptr, false);
    if (req.is_discarded() || !req.is_object()) fail(ErrorCode::InvalidArgument, "request body is not a JSON object");
    const std::string model_id = id_field(req, "model_id");
    const std::string top_id = id_field(req, "top_id");
    std::optional<std::string> bottom_id;
    if (req.contains("bottom_id") && !req["bottom_id"].is_null()) bottom_id = id_field(req, "bottom_id");
    const bool intermediates = req.value("want_intermediates", false);

    if (!catalog_.find(model_id)) fail(ErrorCode::UnknownId, "unknown model id '" + model_id + "'");
    if (!tops_.count(top_id)) fail(ErrorCode::UnknownId, "unknown top id '" + top_id + "'");
    if (bottom_id && !bottoms_.count(*bottom_id)) fail(ErrorCode::UnknownId, "unknown bottom id '" + *bottom_id + "'");

    const SampleRecord s = load_sample(catalog_, model_id);
    const WearingGuideMask mask = req.contains("mask") && !req["mask"].is_null()
                                      ? decode_mask(req["mask"], catalog_.resolution)
                                      : build_wearing_guide(s.parsing).expand();
    TryOnInputs in = TryOnInputs::from_sample(s, mask);
    in.top = load_garment(catalog_, top_id, GarmentKind::Top);
    in.bottom = bottom_id ? std::optional(load_garment(catalog_, *bottom_id, GarmentKind::Bottom)) : std::nullopt;
    const TryOnResult r = full_pipeline_infer(in, models_);

    const Resolution res = catalog_.resolution;
    json out{{"final", png_base64(png::encode_image(r.final_image))}};
    if (intermediates) {
      const png::Palette palette(LabelSchema::palette().begin(), LabelSchema::palette().end());
      out["parsing"] = png_base64(png::encode_indexed(res.width, res.height, r.parsing.labels(), palette));
      out["warped_top"] = png_base64(png::encode_image(r.warped_top));
      out["warped_bottom"] = png_base64(png::encode_image(r.warped_bottom));
    }
    out["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, out.dump()};
  } catch (const Error& e) {
    HttpReply reply = error_reply(e);
    json body = json::parse(reply.body);
    body["timing_ms"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    reply.body = body.dump();
    return reply;
  }
}

int TryOnService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
  server_->Get("/catalog", [this, send](const httplib::Request&, httplib::Response& res) { send(res, catalog()); });
  server_->Get("/mask/default", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, default_mask(req.get_param_value("model_id")));
  });
  server_->Post("/tryon", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, tryon(req.body));
  });
  server_->set_mount_point("/files", catalog_.root.string());
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void TryOnService::run() {
  if (!server_) fail(ErrorCode::InvalidArgument, "service is not bound");
  server_->listen_after_bind();
}

void TryOnService::stop() {
  if (server_) server_->stop();
}

}  // namespace wgv
