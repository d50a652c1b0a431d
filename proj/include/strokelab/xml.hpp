#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "strokelab/error.hpp"

namespace strokelab::xml {

/// Element tree of the XML subset this project consumes and emits:
/// prolog, comments, doctype, attributes, character data, entity
/// references. No CDATA, processing instructions inside elements, or
/// DTD internals.
struct Node {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<Node> children;
    std::string text;  // concatenated character data of this element

    const std::string* attr(std::string_view key) const {
        for (const auto& [k, v] : attrs)
            if (k == key) return &v;
        return nullptr;
    }

    /// Local name with any namespace prefix stripped.
    std::string local_name() const {
        const auto pos = name.rfind(':');
        return pos == std::string::npos ? name : name.substr(pos + 1);
    }
};

namespace detail {

class Parser {
public:
    explicit Parser(std::string_view doc) : doc_(doc) {}

    Node parse_document() {
        skip_misc();
        if (eof()) fail("no root element");
        Node root = parse_element();
        skip_misc();
        if (!eof()) fail("content after root element");
        return root;
    }

private:
    std::string_view doc_;
    std::size_t pos_ = 0;

    bool eof() const { return pos_ >= doc_.size(); }
    char peek() const { return doc_[pos_]; }
    bool starts_with(std::string_view s) const { return doc_.substr(pos_, s.size()) == s; }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("malformed XML at offset " + std::to_string(pos_) + ": " + what);
    }

    static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
    static bool is_name_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
    }
    static bool is_name_char(char c) {
        return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
    }

    void skip_ws() {
        while (!eof() && is_space(peek())) ++pos_;
    }

    // Whitespace, comments, <?...?>, <!DOCTYPE ...> between elements.
    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                const auto end = doc_.find("-->", pos_ + 4);
                if (end == std::string_view::npos) fail("unterminated comment");
                pos_ = end + 3;
            } else if (starts_with("<?")) {
                const auto end = doc_.find("?>", pos_ + 2);
                if (end == std::string_view::npos) fail("unterminated processing instruction");
                pos_ = end + 2;
            } else if (starts_with("<!DOCTYPE")) {
                const auto end = doc_.find('>', pos_);
                if (end == std::string_view::npos) fail("unterminated DOCTYPE");
                pos_ = end + 1;
            } else {
                return;
            }
        }
    }

    std::string parse_name() {
        if (eof() || !is_name_start(peek())) fail("expected a name");
        const std::size_t start = pos_;
        while (!eof() && is_name_char(peek())) ++pos_;
        return std::string(doc_.substr(start, pos_ - start));
    }

    void decode_entity(std::string& out) {
        const auto end = doc_.find(';', pos_);
        if (end == std::string_view::npos || end - pos_ > 10) fail("unterminated entity");
        const std::string_view ent = doc_.substr(pos_ + 1, end - pos_ - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stol(std::string(ent.substr(2)), nullptr, 16)
                           : std::stol(std::string(ent.substr(1)));
            } catch (...) {
                fail("bad character reference");
            }
            if (code <= 0 || code > 127) fail("character reference out of supported range");
            out += static_cast<char>(code);
        } else {
            fail("unknown entity '&" + std::string(ent) + ";'");
        }
        pos_ = end + 1;
    }

    std::string parse_attr_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
        const char quote = peek();
        ++pos_;
        std::string out;
        while (!eof() && peek() != quote) {
            if (peek() == '&') decode_entity(out);
            else if (peek() == '<') fail("'<' in attribute value");
            else out += doc_[pos_++];
        }
        if (eof()) fail("unterminated attribute value");
        ++pos_;
        return out;
    }

    Node parse_element() {
        if (eof() || peek() != '<') fail("expected '<'");
        ++pos_;
        Node node;
        node.name = parse_name();
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag of <" + node.name + ">");
            if (peek() == '>') {
                ++pos_;
                parse_content(node);
                return node;
            }
            if (starts_with("/>")) {
                pos_ += 2;
                return node;
            }
            std::string key = parse_name();
            skip_ws();
            if (eof() || peek() != '=') fail("expected '=' after attribute '" + key + "'");
            ++pos_;
            skip_ws();
            node.attrs.emplace_back(std::move(key), parse_attr_value());
        }
    }

    void parse_content(Node& node) {
        for (;;) {
            if (eof()) fail("missing </" + node.name + ">");
            if (peek() == '<') {
                if (starts_with("</")) {
                    pos_ += 2;
                    const std::string close = parse_name();
                    if (close != node.name)
                        fail("mismatched close tag </" + close + "> for <" + node.name + ">");
                    skip_ws();
                    if (eof() || peek() != '>') fail("malformed close tag");
                    ++pos_;
                    return;
                }
                if (starts_with("<!--")) {
                    const auto end = doc_.find("-->", pos_ + 4);
                    if (end == std::string_view::npos) fail("unterminated comment");
                    pos_ = end + 3;
                    continue;
                }
                node.children.push_back(parse_element());
            } else if (peek() == '&') {
                decode_entity(node.text);
            } else {
                node.text += doc_[pos_++];
            }
        }
    }
};

} // namespace detail

inline Node parse(std::string_view document) { return detail::Parser(document).parse_document(); }

inline void escape_into(std::string& out, std::string_view text) {
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
}

} // namespace strokelab::xml
