#pragma once

// Structured HTML documents. Pages are built as trees and serialized in one
// place so that escaping is uniform: Text content and attribute values are
// always escaped, and only Raw nodes pass through verbatim.

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace hdb::doc {

struct Element;

struct Text {
  std::string content;
  bool operator==(const Text&) const = default;
};

/// Verbatim markup. Reserved for static asset references and pre-rendered
/// artifact snippets; user data goes through Text.
struct Raw {
  std::string content;
  bool operator==(const Raw&) const = default;
};

using Attribute = std::pair<std::string, std::string>;

class Node;

struct Element {
  std::string tag;
  std::vector<Attribute> attrs;
  std::vector<Node> children;

  bool operator==(const Element&) const;
};

class Node {
 public:
  using Variant = std::variant<Element, Text, Raw>;

  Node(Element e) : v_(std::move(e)) {}
  Node(Text t) : v_(std::move(t)) {}
  Node(Raw r) : v_(std::move(r)) {}

  const Variant& get() const { return v_; }
  Variant& get() { return v_; }

  const Element* element() const { return std::get_if<Element>(&v_); }
  Element* element() { return std::get_if<Element>(&v_); }
  const Text* text() const { return std::get_if<Text>(&v_); }
  const Raw* raw() const { return std::get_if<Raw>(&v_); }

  bool operator==(const Node&) const = default;

 private:
  Variant v_;
};

inline bool Element::operator==(const Element& o) const {
  return tag == o.tag && attrs == o.attrs && children == o.children;
}

struct Page {
  std::string title;
  std::vector<Node> head_extra;
  std::vector<Node> body;
};

std::string escape_text(std::string_view s);
std::string escape_attr(std::string_view s);

bool is_void_element(std::string_view tag);
bool is_valid_tag(std::string_view tag);
bool is_valid_attribute_name(std::string_view name);

/// Checks the structural invariants of a whole tree; throws Error on the
/// first violation (InvalidTag, VoidElementWithChildren, DuplicateAttribute).
void validate(const Node& node);

std::string render(const Node& node);
void render_to(const Node& node, std::string& out);

/// The <html> element the page renders as, without the doctype.
Node page_tree(const Page& page);
std::string render_page(const Page& page);

// Construction helpers used throughout the page builders.

inline Node text(std::string s) { return Text{std::move(s)}; }
inline Node raw(std::string s) { return Raw{std::move(s)}; }

inline Node el(std::string tag, std::vector<Attribute> attrs = {},
               std::vector<Node> children = {}) {
  return Element{std::move(tag), std::move(attrs), std::move(children)};
}

inline Node el(std::string tag, std::vector<Node> children) {
  return Element{std::move(tag), {}, std::move(children)};
}

/// Element holding a single text child.
inline Node el_text(std::string tag, std::string content,
                    std::vector<Attribute> attrs = {}) {
  std::vector<Node> children;
  children.push_back(text(std::move(content)));
  return Element{std::move(tag), std::move(attrs), std::move(children)};
}

inline Node link(std::string href, std::string label,
                 std::vector<Attribute> extra = {}) {
  extra.insert(extra.begin(), {"href", std::move(href)});
  return el_text("a", std::move(label), std::move(extra));
}

/// All text beneath `node`, concatenated; Raw content excluded.
std::string text_content(const Node& node);

}  // namespace hdb::doc
