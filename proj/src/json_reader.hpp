#pragma once

// Internal: JSON parsing that remembers the line of every value so field
// errors can point into the source file.

#include "stochsim/error.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

namespace stochsim::detail {

using json = nlohmann::json;

// Forward iterator over the raw text that publishes how far the JSON lexer has
// read, so SAX callbacks can attribute a line number to each value.
struct TrackedIter {
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    const char* p = nullptr;
    const char** cursor = nullptr;

    reference operator*() const { return *p; }
    TrackedIter& operator++() {
        ++p;
        *cursor = p;
        return *this;
    }
    TrackedIter operator++(int) {
        TrackedIter old = *this;
        ++*this;
        return old;
    }
    bool operator==(const TrackedIter& o) const { return p == o.p; }
    bool operator!=(const TrackedIter& o) const { return p != o.p; }
};

class LineCounter {
public:
    explicit LineCounter(const char* base) : base_(base), scanned_(base), cursor_(base) {}

    const char** cursor() { return &cursor_; }

    // Line of the last consumed character.
    int current() {
        const char* upto = cursor_ > base_ ? cursor_ - 1 : base_;
        if (upto < scanned_) {
            scanned_ = base_;
            line_ = 1;
        }
        for (; scanned_ < upto; ++scanned_) {
            if (*scanned_ == '\n') ++line_;
        }
        return line_;
    }

private:
    const char* base_;
    const char* scanned_;
    const char* cursor_;
    int line_ = 1;
};

// DOM-building SAX handler that also records the line at which every value
// (addressed by JSON pointer) appears.
class LocatingHandler {
public:
    LocatingHandler(json& root, LineCounter& counter) : dom_(root, true), counter_(counter) {}

    std::map<std::string, int> lines;

    bool null() { return scalar([&] { return dom_.null(); }); }
    bool boolean(bool v) { return scalar([&] { return dom_.boolean(v); }); }
    bool number_integer(json::number_integer_t v) { return scalar([&] { return dom_.number_integer(v); }); }
    bool number_unsigned(json::number_unsigned_t v) { return scalar([&] { return dom_.number_unsigned(v); }); }
    bool number_float(json::number_float_t v, const std::string& s) {
        return scalar([&] { return dom_.number_float(v, s); });
    }
    bool string(std::string& v) { return scalar([&] { return dom_.string(v); }); }
    bool binary(json::binary_t& v) { return scalar([&] { return dom_.binary(v); }); }

    bool start_object(std::size_t n) {
        begin_value();
        frames_.push_back({false, 0, {}});
        return dom_.start_object(n);
    }
    bool key(std::string& k) {
        frames_.back().key = k;
        return dom_.key(k);
    }
    bool end_object() {
        frames_.pop_back();
        end_value();
        return dom_.end_object();
    }
    bool start_array(std::size_t n) {
        begin_value();
        frames_.push_back({true, 0, {}});
        return dom_.start_array(n);
    }
    bool end_array() {
        frames_.pop_back();
        end_value();
        return dom_.end_array();
    }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) {
        error_byte = pos;
        error = ex.what();
        return false;
    }

    std::size_t error_byte = 0;
    std::string error;

private:
    struct Frame {
        bool array;
        std::size_t index;
        std::string key;
    };

    template <class F>
    bool scalar(F&& f) {
        begin_value();
        const bool ok = f();
        end_value();
        return ok;
    }

    void begin_value() {
        std::string path;
        for (const auto& fr : frames_) {
            path += '/';
            path += fr.array ? std::to_string(fr.index) : fr.key;
        }
        lines.emplace(std::move(path), counter_.current());
    }

    void end_value() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }

    nlohmann::detail::json_sax_dom_parser<json> dom_;
    LineCounter& counter_;
    std::vector<Frame> frames_;
};

inline int line_at_byte(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Field accessors that report the JSON pointer and line of the failure.
class Reader {
public:
    explicit Reader(const std::map<std::string, int>& lines) : lines_(lines) {}

    int line(const std::string& ptr) const {
        auto it = lines_.find(ptr);
        return it == lines_.end() ? 0 : it->second;
    }

    const json& member(const json& obj, const std::string& ptr, const char* key) const {
        if (!obj.is_object()) throw ParseError(ptr, line(ptr), "expected an object");
        auto it = obj.find(key);
        if (it == obj.end()) throw ParseError(ptr + "/" + key, line(ptr), "missing required field");
        return *it;
    }

    const json& array(const json& obj, const std::string& ptr, const char* key) const {
        const json& a = member(obj, ptr, key);
        if (!a.is_array()) throw ParseError(ptr + "/" + key, line(ptr + "/" + key), "expected an array");
        return a;
    }

    double number(const json& obj, const std::string& ptr, const char* key) const {
        const json& v = member(obj, ptr, key);
        const std::string p = ptr + "/" + key;
        if (!v.is_number()) throw ParseError(p, line(p), "expected a number");
        return v.get<double>();
    }

    double number_or(const json& obj, const std::string& ptr, const char* key, double fallback) const {
        if (!obj.contains(key)) return fallback;
        return number(obj, ptr, key);
    }

    int integer(const json& obj, const std::string& ptr, const char* key) const {
        const json& v = member(obj, ptr, key);
        const std::string p = ptr + "/" + key;
        if (!v.is_number_integer()) throw ParseError(p, line(p), "expected an integer");
        return v.get<int>();
    }

    std::string text(const json& obj, const std::string& ptr, const char* key) const {
        const json& v = member(obj, ptr, key);
        const std::string p = ptr + "/" + key;
        if (!v.is_string()) throw ParseError(p, line(p), "expected a string");
        return v.get<std::string>();
    }

private:
    const std::map<std::string, int>& lines_;
};

struct LocatedJson {
    json root;
    std::map<std::string, int> lines;
};

/// Throws ParseError with the offending line on malformed JSON.
inline LocatedJson parse_located(std::string_view text) {
    LocatedJson out;
    LineCounter counter(text.data());
    LocatingHandler handler(out.root, counter);
    TrackedIter first{text.data(), counter.cursor()};
    TrackedIter last{text.data() + text.size(), counter.cursor()};
    if (!json::sax_parse(first, last, &handler)) {
        throw ParseError("", line_at_byte(text, handler.error_byte), handler.error);
    }
    out.lines = std::move(handler.lines);
    return out;
}

}  // namespace stochsim::detail
