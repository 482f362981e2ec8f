#include "hdb/doctree.hpp"

#include <algorithm>
#include <array>

#include "hdb/common.hpp"

namespace hdb::doc {
namespace {

constexpr std::array<std::string_view, 13> kVoidElements = {
    "area", "base", "br",   "col",   "embed", "hr",  "img",
    "input", "link", "meta", "source", "track", "wbr"};

bool ascii_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool ascii_digit(char c) { return c >= '0' && c <= '9'; }

char ascii_lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(),
                    [](char x, char y) { return ascii_lower(x) == ascii_lower(y); });
}

// The HTML parser drops one newline directly after these start tags.
bool drops_leading_newline(std::string_view tag) {
  return iequals(tag, "pre") || iequals(tag, "textarea") ||
         iequals(tag, "listing");
}

void validate_element(const Element& e) {
  if (!is_valid_tag(e.tag)) throw Error(Errc::kInvalidTag, e.tag);
  for (std::size_t i = 0; i < e.attrs.size(); ++i) {
    const auto& name = e.attrs[i].first;
    if (!is_valid_attribute_name(name)) {
      throw Error(Errc::kInvalidAttribute, name);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (iequals(e.attrs[j].first, name)) {
        throw Error(Errc::kDuplicateAttribute, e.tag + "@" + name);
      }
    }
  }
  if (is_void_element(e.tag) && !e.children.empty()) {
    throw Error(Errc::kVoidElementWithChildren, e.tag);
  }
}

void append_escaped(std::string& out, std::string_view s, bool attr) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attr) {
          out += "&quot;";
          break;
        }
        [[fallthrough]];
      default: out += c;
    }
  }
}

void render_node(const Node& node, std::string& out);

void render_element(const Element& e, std::string& out) {
  validate_element(e);
  out += '<';
  out += e.tag;
  for (const auto& [name, value] : e.attrs) {
    out += ' ';
    out += name;
    out += "=\"";
    append_escaped(out, value, true);
    out += '"';
  }
  out += '>';
  if (is_void_element(e.tag)) return;
  if (drops_leading_newline(e.tag) && !e.children.empty()) {
    const Text* first = e.children.front().text();
    if (first != nullptr && !first->content.empty() &&
        first->content.front() == '\n') {
      out += '\n';
    }
  }
  for (const auto& child : e.children) render_node(child, out);
  out += "</";
  out += e.tag;
  out += '>';
}

void render_node(const Node& node, std::string& out) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Element>) {
          render_element(v, out);
        } else if constexpr (std::is_same_v<T, Text>) {
          append_escaped(out, v.content, false);
        } else {
          out += v.content;
        }
      },
      node.get());
}

void collect_text(const Node& node, std::string& out) {
  if (const Text* t = node.text()) {
    out += t->content;
  } else if (const Element* e = node.element()) {
    for (const auto& c : e->children) collect_text(c, out);
  }
}

}  // namespace

std::string escape_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  append_escaped(out, s, false);
  return out;
}

std::string escape_attr(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  append_escaped(out, s, true);
  return out;
}

bool is_void_element(std::string_view tag) {
  return std::any_of(kVoidElements.begin(), kVoidElements.end(),
                     [tag](std::string_view v) { return iequals(v, tag); });
}

bool is_valid_tag(std::string_view tag) {
  if (tag.empty() || !ascii_alpha(tag.front())) return false;
  return std::all_of(tag.begin() + 1, tag.end(), [](char c) {
    return ascii_alpha(c) || ascii_digit(c) || c == '-';
  });
}

bool is_valid_attribute_name(std::string_view name) {
  if (name.empty()) return false;
  if (!ascii_alpha(name.front()) && name.front() != '_' && name.front() != ':') {
    return false;
  }
  return std::all_of(name.begin() + 1, name.end(), [](char c) {
    return ascii_alpha(c) || ascii_digit(c) || c == '-' || c == '_' ||
           c == ':' || c == '.';
  });
}

void validate(const Node& node) {
  if (const Element* e = node.element()) {
    validate_element(*e);
    for (const auto& c : e->children) validate(c);
  }
}

std::string render(const Node& node) {
  std::string out;
  render_node(node, out);
  return out;
}

void render_to(const Node& node, std::string& out) { render_node(node, out); }

Node page_tree(const Page& page) {
  std::vector<Node> head;
  head.push_back(el("meta", {{"charset", "utf-8"}}));
  head.push_back(el_text("title", page.title));
  for (const auto& n : page.head_extra) head.push_back(n);
  return el("html", {{"lang", "en"}},
            {el("head", std::move(head)), el("body", page.body)});
}

std::string render_page(const Page& page) {
  std::string out = "<!DOCTYPE html>\n";
  render_node(page_tree(page), out);
  out += '\n';
  return out;
}

std::string text_content(const Node& node) {
  std::string out;
  collect_text(node, out);
  return out;
}

}  // namespace hdb::doc
