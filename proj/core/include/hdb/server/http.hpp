#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hdb/operation.hpp"

namespace hdb::server {

inline constexpr std::string_view kSessionCookie = "hdb_session";

struct Request {
  std::string method = "GET";
  /// Raw request target path, still percent-encoded.
  std::string path = "/";
  /// Raw query string without the '?'.
  std::string query;
  /// Header names lowercased.
  std::map<std::string, std::string> headers;
  std::string body;
  std::string peer;
  /// Set when the transport already decoded the body.
  std::optional<FormData> decoded_form;

  const std::string* header(std::string_view name) const;
  std::optional<std::string> cookie(std::string_view name) const;
};

struct Response {
  int status = 200;
  std::string content_type = "text/html; charset=utf-8";
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;

  const std::string* header(std::string_view name) const;
};

std::string_view status_text(int status);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view s);
/// Decodes %XX; `plus_as_space` for form bodies. Invalid escapes pass through.
std::string url_decode(std::string_view s, bool plus_as_space = false);

/// Path segments, percent-decoded; empty segments dropped.
std::vector<std::string> split_path(std::string_view path);

std::vector<std::pair<std::string, std::string>> parse_urlencoded(std::string_view body);

/// Value of a `key=value` parameter in a header such as Content-Type.
std::optional<std::string> header_param(std::string_view header, std::string_view key);

/// Throws InvalidValue on malformed input.
FormData parse_multipart(std::string_view body, std::string_view boundary);

/// Query parameters merged with the decoded body.
FormData parse_form(const Request& req);

/// Reads one HTTP/1.1 request. Throws InvalidValue on malformed input and
/// UploadTooLarge when the body exceeds `max_body`.
Request read_request(std::istream& in, std::size_t max_body);
void write_response(std::ostream& out, const Response& res);

std::string guess_content_type(std::string_view path);

}  // namespace hdb::server
