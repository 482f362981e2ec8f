#pragma once

// Expressions written to a slave interpreter's input, in call syntax:
// `f(a,b)`, vectors as `c(x,y)`, strings double-quoted, assignments as
// `name <- value`.

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hdb::bridge {

class Expr;

struct Num {
  double value = 0;
  bool operator==(const Num& o) const;
};
struct Str {
  std::string value;
  bool operator==(const Str&) const = default;
};
struct Ident {
  std::string name;
  bool operator==(const Ident&) const = default;
};
struct Vec {
  std::vector<Expr> elements;
  bool operator==(const Vec&) const;
};
struct Call {
  std::string function;
  std::vector<Expr> args;
  bool operator==(const Call&) const;
};
struct Assign {
  Ident target;
  std::shared_ptr<const Expr> value;
  bool operator==(const Assign&) const;
};

class Expr {
 public:
  using Variant = std::variant<Num, Str, Ident, Vec, Call, Assign>;

  Expr(Num n) : v_(std::move(n)) {}
  Expr(Str s) : v_(std::move(s)) {}
  Expr(Ident i) : v_(std::move(i)) {}
  Expr(Vec v) : v_(std::move(v)) {}
  Expr(Call c) : v_(std::move(c)) {}
  Expr(Assign a) : v_(std::move(a)) {}

  const Variant& get() const { return v_; }
  bool operator==(const Expr& o) const { return v_ == o.v_; }

 private:
  Variant v_;
};

inline bool Vec::operator==(const Vec& o) const { return elements == o.elements; }
inline bool Call::operator==(const Call& o) const {
  return function == o.function && args == o.args;
}
inline bool Assign::operator==(const Assign& o) const {
  return target == o.target && *value == *o.value;
}

// Builders.
inline Expr num(double v) { return Num{v}; }
inline Expr str(std::string v) { return Str{std::move(v)}; }
inline Expr ident(std::string n) { return Ident{std::move(n)}; }
inline Expr vec(std::vector<Expr> e) { return Vec{std::move(e)}; }
inline Expr call(std::string f, std::vector<Expr> args = {}) {
  return Call{std::move(f), std::move(args)};
}
inline Expr assign(std::string target, Expr value) {
  return Assign{Ident{std::move(target)}, std::make_shared<const Expr>(std::move(value))};
}

bool is_valid_name(std::string_view name);

/// One line of input, newline terminated. Throws InvalidName.
std::string serialize(const Expr& e);

/// Returns a copy with every occurrence of `from` inside string literals
/// replaced by `to`.
Expr substitute(const Expr& e, std::string_view from, std::string_view to);

}  // namespace hdb::bridge
