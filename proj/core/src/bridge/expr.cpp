#include "hdb/bridge/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "hdb/catalog.hpp"
#include "hdb/common.hpp"

namespace hdb::bridge {
namespace {

void check_name(const std::string& name) {
  if (!is_valid_name(name)) throw Error(Errc::kInvalidName, name);
}

void write_string(std::string_view s, std::string& out) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        // Remaining control characters would break the line protocol.
        if (c < 0x20 || c == 0x7f) {
          out += fmt::format("\\x{:02x}", static_cast<unsigned>(c));
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

void write_number(double v, std::string& out) {
  if (std::isnan(v)) {
    out += "NaN";
  } else if (std::isinf(v)) {
    out += v < 0 ? "-Inf" : "Inf";
  } else {
    out += catalog::format_double(v);
  }
}

void write_list(const std::vector<Expr>& items, std::string& out);

void write(const Expr& e, std::string& out) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Num>) {
          write_number(v.value, out);
        } else if constexpr (std::is_same_v<T, Str>) {
          write_string(v.value, out);
        } else if constexpr (std::is_same_v<T, Ident>) {
          check_name(v.name);
          out += v.name;
        } else if constexpr (std::is_same_v<T, Vec>) {
          out += "c(";
          write_list(v.elements, out);
          out += ')';
        } else if constexpr (std::is_same_v<T, Call>) {
          check_name(v.function);
          out += v.function;
          out += '(';
          write_list(v.args, out);
          out += ')';
        } else {
          check_name(v.target.name);
          out += v.target.name;
          out += " <- ";
          write(*v.value, out);
        }
      },
      e.get());
}

void write_list(const std::vector<Expr>& items, std::string& out) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    write(items[i], out);
  }
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

bool Num::operator==(const Num& o) const {
  if (std::isnan(value) && std::isnan(o.value)) return true;
  return value == o.value && std::signbit(value) == std::signbit(o.value);
}

bool is_valid_name(std::string_view name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '.' || c == '_';
  };
  if (!head(name.front())) return false;
  return std::all_of(name.begin() + 1, name.end(),
                     [&](char c) { return head(c) || (c >= '0' && c <= '9'); });
}

std::string serialize(const Expr& e) {
  std::string out;
  write(e, out);
  out += '\n';
  return out;
}

Expr substitute(const Expr& e, std::string_view from, std::string_view to) {
  return std::visit(
      [&](const auto& v) -> Expr {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Str>) {
          return Str{replace_all(v.value, from, to)};
        } else if constexpr (std::is_same_v<T, Vec>) {
          Vec out;
          for (const auto& x : v.elements) out.elements.push_back(substitute(x, from, to));
          return out;
        } else if constexpr (std::is_same_v<T, Call>) {
          Call out{v.function, {}};
          for (const auto& x : v.args) out.args.push_back(substitute(x, from, to));
          return out;
        } else if constexpr (std::is_same_v<T, Assign>) {
          return Assign{v.target, std::make_shared<const Expr>(substitute(*v.value, from, to))};
        } else {
          return v;
        }
      },
      e.get());
}

}  // namespace hdb::bridge
