#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkh {

/**
 * Minimal streaming JSON writer.  Keys keep insertion order, doubles are
 * printed with %.17g (round-trip exact), indentation is fixed at two spaces,
 * so equal inputs produce byte-identical documents.  Non-finite doubles are
 * emitted as null.
 */
class JsonWriter {
 public:
    JsonWriter& begin_object() { return open('{', '}'); }
    JsonWriter& end_object() { return close('}'); }
    JsonWriter& begin_array() { return open('[', ']'); }
    JsonWriter& end_array() { return close(']'); }

    JsonWriter& key(const std::string& name) {
        if (stack_.empty() || stack_.back().closer != '}') {
            throw std::logic_error("JsonWriter: key outside object");
        }
        comma_and_newline();
        out_ += quote(name);
        out_ += ": ";
        pending_key_ = true;
        return *this;
    }

    JsonWriter& value(double v) { return raw(format_double(v)); }
    JsonWriter& value(int v) { return raw(std::to_string(v)); }
    JsonWriter& value(long v) { return raw(std::to_string(v)); }
    JsonWriter& value(long long v) { return raw(std::to_string(v)); }
    JsonWriter& value(unsigned long v) { return raw(std::to_string(v)); }
    JsonWriter& value(unsigned long long v) { return raw(std::to_string(v)); }
    JsonWriter& value(bool v) { return raw(v ? "true" : "false"); }
    JsonWriter& value(const char* v) { return raw(quote(v)); }
    JsonWriter& value(const std::string& v) { return raw(quote(v)); }
    JsonWriter& null() { return raw("null"); }

    template <typename T>
    JsonWriter& kv(const std::string& name, const T& v) {
        key(name);
        return value(v);
    }

    template <typename Seq>
    JsonWriter& kv_array(const std::string& name, const Seq& seq) {
        key(name);
        begin_array();
        for (const auto& x : seq) value(x);
        return end_array();
    }

    /** Finished document; valid once all containers are closed. */
    std::string str() const {
        if (!stack_.empty()) throw std::logic_error("JsonWriter: unclosed container");
        return out_ + "\n";
    }

    static std::string format_double(double v) {
        if (!std::isfinite(v)) return "null";
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

 private:
    struct Frame {
        char closer;
        bool has_items = false;
    };

    JsonWriter& open(char opener, char closer) {
        prepare_value();
        out_ += opener;
        stack_.push_back({closer});
        return *this;
    }

    JsonWriter& close(char closer) {
        if (stack_.empty() || stack_.back().closer != closer) {
            throw std::logic_error("JsonWriter: mismatched close");
        }
        if (stack_.back().has_items) {
            out_ += '\n';
            out_ += indent();  // container's own level, while its frame is still open
        }
        stack_.pop_back();
        out_ += closer;
        return *this;
    }

    JsonWriter& raw(const std::string& text) {
        prepare_value();
        out_ += text;
        return *this;
    }

    void prepare_value() {
        if (pending_key_) {
            pending_key_ = false;
            return;
        }
        if (!stack_.empty()) {
            if (stack_.back().closer == '}') {
                throw std::logic_error("JsonWriter: value without key in object");
            }
            comma_and_newline();
        }
    }

    void comma_and_newline() {
        if (stack_.back().has_items) out_ += ',';
        stack_.back().has_items = true;
        out_ += '\n';
        out_ += indent();
        out_ += "  ";
    }

    std::string indent() const { return std::string(2 * (stack_.size() - 1), ' '); }

    static std::string quote(const std::string& s) {
        std::string q = "\"";
        for (char c : s) {
            switch (c) {
                case '"': q += "\\\""; break;
                case '\\': q += "\\\\"; break;
                case '\n': q += "\\n"; break;
                case '\t': q += "\\t"; break;
                case '\r': q += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(c) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                        q += buf;
                    } else {
                        q += c;
                    }
            }
        }
        q += '"';
        return q;
    }

    std::string out_;
    std::vector<Frame> stack_;
    bool pending_key_ = false;
};

}  // namespace fkh
