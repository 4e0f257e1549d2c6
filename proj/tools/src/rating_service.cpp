#include "rating_service.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "psgkit/errors.hpp"
#include "psgkit/ratings.hpp"

namespace psgkit::service {

namespace {

using json = nlohmann::ordered_json;

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, json{{"error", message}});
}

}  // namespace

struct RatingService::Impl {
  ratings::Session session;
  std::filesystem::path session_dir;
  ratings::RatingStore store;
  json rubric;
  httplib::Server server;

  explicit Impl(const ServiceOptions& o)
      : session(ratings::load_session(o.session_path)),
        session_dir(o.session_path.parent_path()),
        store(o.store_path),
        rubric(json::parse(ratings::rubric_json())) {
    if (o.ui_dir && !server.set_mount_point("/", o.ui_dir->string())) {
      throw IoError("UI directory " + o.ui_dir->string() + " does not exist");
    }
    routes();
  }

  void routes() {
    server.Get("/api/session/next", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string rater = req.get_param_value("rater");
      if (rater.empty()) return error(res, 400, "rater query parameter is required");
      const auto snap = store.snapshot();
      std::size_t rated = 0;
      for (const auto& r : *snap) rated += r.rater == rater ? 1 : 0;
      const ratings::SessionSample* s = ratings::next_unrated(session, *snap, rater);
      json body;
      body["rated"] = rated;
      body["total"] = session.samples.size();
      if (!s) {
        body["complete"] = true;
        return reply(res, 200, body);
      }
      body["complete"] = false;
      body["sample_id"] = s->sample_id;
      body["subject_id"] = s->subject_id;
      body["epoch_index"] = s->epoch_index;
      json images = json::array();
      for (int k = 0; k < 3; ++k) images.push_back("/api/image/" + s->sample_id + "/" + std::to_string(k));
      body["images"] = images;
      body["stage"] = std::string(to_string(s->stage));
      json rules = json::array();
      for (RuleId r : s->rules) {
        rules.push_back({{"id", std::string(to_string(r))}, {"criterion", std::string(rule_criterion(r))}});
      }
      body["rules"] = rules;
      body["rationale"] = s->rationale;
      body["rubric"] = rubric;
      reply(res, 200, body);
    });

    server.Get(R"(/api/image/([^/]+)/([012]))", [this](const httplib::Request& req, httplib::Response& res) {
      const ratings::SessionSample* s = session.find(req.matches[1]);
      if (!s) return error(res, 404, "unknown sample");
      const auto path = session_dir / s->images[static_cast<std::size_t>(std::stoi(req.matches[2]))];
      std::ifstream is(path, std::ios::binary);
      if (!is) return error(res, 404, "image missing: " + path.filename().string());
      std::ostringstream ss;
      ss << is.rdbuf();
      res.set_content(ss.str(), "image/png");
    });

    server.Post("/api/rating", [this](const httplib::Request& req, httplib::Response& res) {
      const ratings::Submission sub = ratings::parse_submission(req.body, session);
      if (!sub.rating) return error(res, 422, sub.error);
      if (store.append(*sub.rating) == ratings::RatingStore::AppendResult::Duplicate) {
        return error(res, 409, "sample " + sub.rating->sample_id + " already rated by " + sub.rating->rater);
      }
      reply(res, 201, json::parse(ratings::rating_json(*sub.rating)));
    });

    server.Get("/api/summary", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(ratings::summary_json(ratings::summarize(session, *store.snapshot())), "application/json");
    });

    server.Get("/api/rubric", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, rubric);
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        error(res, 500, e.what());
      } catch (...) {
        error(res, 500, "internal error");
      }
    });
  }
};

RatingService::RatingService(const ServiceOptions& options) : impl_(std::make_unique<Impl>(options)) {}
RatingService::~RatingService() = default;

bool RatingService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int RatingService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool RatingService::serve() { return impl_->server.listen_after_bind(); }
void RatingService::stop() { impl_->server.stop(); }
bool RatingService::running() const { return impl_->server.is_running(); }

}  // namespace psgkit::service
