#include "hdb/server/listener.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

#include <thread>

#include <fmt/format.h>
#include <httplib.h>

namespace hdb::server {
namespace {

Request convert(const httplib::Request& hr) {
  Request req;
  req.method = hr.method;
  const auto q = hr.target.find('?');
  req.path = hr.target.substr(0, q);
  if (q != std::string::npos) req.query = hr.target.substr(q + 1);
  for (const auto& [k, v] : hr.headers) {
    std::string name = k;
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    req.headers[name] = v;
  }
  req.peer = hr.remote_addr;
  if (hr.is_multipart_form_data()) {
    FormData form;
    for (const auto& [name, part] : hr.files) {
      if (part.filename.empty() && part.content_type.empty()) {
        form.fields.insert_or_assign(name, part.content);
      } else {
        form.files.insert_or_assign(name,
                                    UploadedFile{part.filename, part.content_type, part.content});
      }
    }
    req.decoded_form = std::move(form);
  } else {
    req.body = hr.body;
  }
  return req;
}

void reply(const Response& res, httplib::Response& hres) {
  hres.status = res.status;
  for (const auto& [k, v] : res.headers) hres.set_header(k, v);
  hres.set_content(res.body, res.content_type);
}

}  // namespace

struct Listener::Impl {
  App& app;
  httplib::Server server;
  std::thread thread;

  explicit Impl(App& a) : app(a) {}
};

Listener::Listener(App& app, const std::string& host, unsigned port)
    : impl_(std::make_unique<Impl>(app)) {
  auto& srv = impl_->server;
  const auto handler = [this](const httplib::Request& hr, httplib::Response& hres) {
    reply(impl_->app.handle(convert(hr)), hres);
  };
  srv.Get(".*", handler);
  srv.Post(".*", handler);
  srv.set_read_timeout(app.config().request_timeout);
  srv.set_payload_max_length(static_cast<std::size_t>(app.config().upload_cap));
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& hres, std::exception_ptr) {
        hres.status = 500;
        hres.set_content("internal error", "text/plain");
      });
  if (port == 0) {
    const int p = srv.bind_to_any_port(host);
    if (p <= 0) throw Error(Errc::kPortInUse, fmt::format("{}:any", host));
    port_ = static_cast<unsigned>(p);
  } else {
    if (!srv.bind_to_port(host, static_cast<int>(port))) {
      throw Error(Errc::kPortInUse, fmt::format("{}:{}", host, port));
    }
    port_ = port;
  }
  app.set_port(port_);
}

Listener::~Listener() { stop(); }

void Listener::run() { impl_->server.listen_after_bind(); }

void Listener::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void Listener::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void serve_single_request(App& app, std::istream& in, std::ostream& out, std::string peer) {
  Response res;
  try {
    Request req = read_request(in, static_cast<std::size_t>(app.config().upload_cap));
    req.peer = std::move(peer);
    res = app.handle(req);
  } catch (const Error& e) {
    res.status = e.code() == Errc::kUploadTooLarge ? 413 : 400;
    res.content_type = "text/plain; charset=utf-8";
    res.body = std::string(status_text(res.status)) + "\n";
  }
  write_response(out, res);
}

std::string socket_peer(int fd) {
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  if (getpeername(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return "";
  char buf[INET6_ADDRSTRLEN] = {};
  if (addr.ss_family == AF_INET) {
    const auto* a = reinterpret_cast<const sockaddr_in*>(&addr);
    inet_ntop(AF_INET, &a->sin_addr, buf, sizeof(buf));
  } else if (addr.ss_family == AF_INET6) {
    const auto* a = reinterpret_cast<const sockaddr_in6*>(&addr);
    inet_ntop(AF_INET6, &a->sin6_addr, buf, sizeof(buf));
  }
  return buf;
}

}  // namespace hdb::server
