#include "hdb/server/http.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "hdb/common.hpp"

namespace hdb::server {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

[[noreturn]] void malformed(std::string_view what) {
  throw Error(Errc::kInvalidValue, fmt::format("malformed request: {}", what));
}

// Splits a header line "Name: value" into lowercased name and trimmed value.
std::optional<std::pair<std::string, std::string>> split_header(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  return std::make_pair(lower(trim(line.substr(0, colon))),
                        std::string(trim(line.substr(colon + 1))));
}

void add_field(FormData& form, std::string key, std::string value) {
  form.fields.insert_or_assign(std::move(key), std::move(value));
}

}  // namespace

const std::string* Request::header(std::string_view name) const {
  auto it = headers.find(lower(name));
  return it == headers.end() ? nullptr : &it->second;
}

std::optional<std::string> Request::cookie(std::string_view name) const {
  const auto* h = header("cookie");
  if (h == nullptr) return std::nullopt;
  std::string_view rest = *h;
  while (!rest.empty()) {
    const auto semi = rest.find(';');
    const auto item = trim(rest.substr(0, semi));
    const auto eq = item.find('=');
    if (eq != std::string_view::npos && trim(item.substr(0, eq)) == name) {
      return std::string(trim(item.substr(eq + 1)));
    }
    if (semi == std::string_view::npos) break;
    rest.remove_prefix(semi + 1);
  }
  return std::nullopt;
}

const std::string* Response::header(std::string_view name) const {
  const auto key = lower(name);
  for (const auto& [k, v] : headers) {
    if (lower(k) == key) return &v;
  }
  return nullptr;
}

std::string_view status_text(int status) {
  switch (status) {
    case 200: return "OK";
    case 302: return "Found";
    case 303: return "See Other";
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 409: return "Conflict";
    case 413: return "Payload Too Large";
    case 500: return "Internal Server Error";
    case 503: return "Service Unavailable";
    case 507: return "Insufficient Storage";
    default: return "Unknown";
  }
}

std::string url_encode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

std::string url_decode(std::string_view s, bool plus_as_space) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '%' && i + 2 < s.size()) {
      const int hi = hex_value(s[i + 1]);
      const int lo = hex_value(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += (plus_as_space && c == '+') ? ' ' : c;
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  while (!path.empty()) {
    const auto slash = path.find('/');
    const auto seg = path.substr(0, slash);
    if (!seg.empty()) out.push_back(url_decode(seg));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_urlencoded(std::string_view body) {
  std::vector<std::pair<std::string, std::string>> out;
  while (!body.empty()) {
    const auto amp = body.find('&');
    const auto item = body.substr(0, amp);
    if (!item.empty()) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        out.emplace_back(url_decode(item, true), "");
      } else {
        out.emplace_back(url_decode(item.substr(0, eq), true),
                         url_decode(item.substr(eq + 1), true));
      }
    }
    if (amp == std::string_view::npos) break;
    body.remove_prefix(amp + 1);
  }
  return out;
}

std::optional<std::string> header_param(std::string_view header, std::string_view key) {
  std::size_t i = header.find(';');
  while (i != std::string_view::npos && i < header.size()) {
    ++i;
    while (i < header.size() && (header[i] == ' ' || header[i] == '\t')) ++i;
    const auto eq = header.find('=', i);
    if (eq == std::string_view::npos) return std::nullopt;
    const auto name = trim(header.substr(i, eq - i));
    std::string value;
    std::size_t j = eq + 1;
    if (j < header.size() && header[j] == '"') {
      ++j;
      while (j < header.size() && header[j] != '"') {
        if (header[j] == '\\' && j + 1 < header.size()) ++j;
        value += header[j++];
      }
      ++j;
    } else {
      while (j < header.size() && header[j] != ';') value += header[j++];
      value = std::string(trim(value));
    }
    if (lower(name) == lower(key)) return value;
    i = header.find(';', j);
  }
  return std::nullopt;
}

FormData parse_multipart(std::string_view body, std::string_view boundary) {
  if (boundary.empty()) malformed("empty multipart boundary");
  const std::string delim = "--" + std::string(boundary);
  FormData form;

  auto pos = body.find(delim);
  if (pos == std::string_view::npos) malformed("multipart boundary not found");
  pos += delim.size();
  while (true) {
    if (body.substr(pos, 2) == "--") break;
    if (body.substr(pos, 2) != "\r\n") malformed("multipart delimiter line");
    pos += 2;
    const auto head_end = body.find("\r\n\r\n", pos);
    if (head_end == std::string_view::npos) malformed("multipart part headers");
    std::string_view head = body.substr(pos, head_end - pos);
    const auto content_start = head_end + 4;
    const auto next = body.find("\r\n" + delim, content_start);
    if (next == std::string_view::npos) malformed("unterminated multipart part");
    const auto content = body.substr(content_start, next - content_start);

    std::string disposition;
    std::string content_type;
    while (!head.empty()) {
      const auto eol = head.find("\r\n");
      if (auto h = split_header(head.substr(0, eol))) {
        if (h->first == "content-disposition") disposition = h->second;
        if (h->first == "content-type") content_type = h->second;
      }
      if (eol == std::string_view::npos) break;
      head.remove_prefix(eol + 2);
    }
    const auto name = header_param(disposition, "name");
    if (!name) malformed("multipart part without a name");
    if (const auto filename = header_param(disposition, "filename")) {
      form.files.insert_or_assign(*name,
                                  UploadedFile{*filename, content_type, std::string(content)});
    } else {
      add_field(form, *name, std::string(content));
    }
    pos = next + 2 + delim.size();
  }
  return form;
}

FormData parse_form(const Request& req) {
  FormData form;
  for (auto& [k, v] : parse_urlencoded(req.query)) add_field(form, std::move(k), std::move(v));
  if (req.decoded_form) {
    for (const auto& [k, v] : req.decoded_form->fields) add_field(form, k, v);
    for (const auto& [k, f] : req.decoded_form->files) form.files.insert_or_assign(k, f);
    return form;
  }
  const auto* ct = req.header("content-type");
  if (ct == nullptr || req.body.empty()) return form;
  const auto type = lower(trim(std::string_view(*ct).substr(0, ct->find(';'))));
  if (type == "application/x-www-form-urlencoded") {
    for (auto& [k, v] : parse_urlencoded(req.body)) add_field(form, std::move(k), std::move(v));
  } else if (type == "multipart/form-data") {
    const auto boundary = header_param(*ct, "boundary");
    if (!boundary) malformed("multipart without boundary");
    auto parts = parse_multipart(req.body, *boundary);
    for (auto& [k, v] : parts.fields) add_field(form, k, std::move(v));
    for (auto& [k, f] : parts.files) form.files.insert_or_assign(k, std::move(f));
  }
  return form;
}

Request read_request(std::istream& in, std::size_t max_body) {
  Request req;
  std::string line;
  if (!std::getline(in, line)) malformed("no request line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto sp1 = line.find(' ');
  const auto sp2 = line.find(' ', sp1 + 1);
  if (sp1 == std::string::npos || sp2 == std::string::npos) malformed("request line");
  req.method = line.substr(0, sp1);
  const std::string target = line.substr(sp1 + 1, sp2 - sp1 - 1);
  if (line.compare(sp2 + 1, 5, "HTTP/") != 0) malformed("protocol");
  const auto q = target.find('?');
  req.path = target.substr(0, q);
  if (q != std::string::npos) req.query = target.substr(q + 1);
  if (req.path.empty() || req.path.front() != '/') malformed("request target");

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) break;
    auto h = split_header(line);
    if (!h) malformed("header line");
    req.headers[h->first] = h->second;
  }

  if (const auto* te = req.header("transfer-encoding"); te != nullptr && lower(*te) != "identity") {
    malformed("transfer encodings are not supported");
  }
  if (const auto* cl = req.header("content-length")) {
    std::size_t n = 0;
    const auto [p, ec] = std::from_chars(cl->data(), cl->data() + cl->size(), n);
    if (ec != std::errc() || p != cl->data() + cl->size()) malformed("content-length");
    if (n > max_body) throw Error(Errc::kUploadTooLarge, fmt::format("{} bytes", n));
    req.body.resize(n);
    in.read(req.body.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) malformed("truncated body");
  }
  return req;
}

void write_response(std::ostream& out, const Response& res) {
  out << "HTTP/1.1 " << res.status << ' ' << status_text(res.status) << "\r\n";
  out << "Content-Type: " << res.content_type << "\r\n";
  out << "Content-Length: " << res.body.size() << "\r\n";
  for (const auto& [k, v] : res.headers) out << k << ": " << v << "\r\n";
  out << "Connection: close\r\n\r\n";
  out << res.body;
  out.flush();
}

std::string guess_content_type(std::string_view path) {
  const auto dot = path.rfind('.');
  const auto ext = dot == std::string_view::npos ? std::string() : lower(path.substr(dot + 1));
  if (ext == "css") return "text/css; charset=utf-8";
  if (ext == "js") return "text/javascript; charset=utf-8";
  if (ext == "html" || ext == "htm") return "text/html; charset=utf-8";
  if (ext == "txt" || ext == "csv") return "text/plain; charset=utf-8";
  if (ext == "png") return "image/png";
  if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
  if (ext == "svg") return "image/svg+xml";
  if (ext == "pdf") return "application/pdf";
  if (ext == "json") return "application/json";
  return "application/octet-stream";
}

}  // namespace hdb::server
