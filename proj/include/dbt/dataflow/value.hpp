#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace dbt {

struct Pose2d {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Pose2d&) const = default;
};

class Value;
using List = std::vector<Value>;
using Record = std::map<std::string, Value>;

/// Runtime value of a parameter. `None` (the empty state) is what inputs
/// and outputs hold before anything was written to them.
class Value {
public:
    using Storage = std::variant<std::monostate, bool, std::int64_t, double, std::string, Pose2d, List, Record>;

    Value() = default;
    Value(bool b) : v_(b) {}
    Value(int i) : v_(static_cast<std::int64_t>(i)) {}
    Value(std::int64_t i) : v_(i) {}
    Value(double d) : v_(d) {}
    Value(const char* s) : v_(std::string(s)) {}
    Value(std::string s) : v_(std::move(s)) {}
    Value(Pose2d p) : v_(p) {}
    Value(List l) : v_(std::move(l)) {}
    Value(Record r) : v_(std::move(r)) {}

    static Value none() { return Value(); }

    bool is_none() const noexcept { return std::holds_alternative<std::monostate>(v_); }

    template <class T>
    bool is() const noexcept {
        return std::holds_alternative<T>(v_);
    }

    template <class T>
    const T& as() const {
        if (const T* p = std::get_if<T>(&v_)) {
            return *p;
        }
        throw_bad_access();
    }

    /// Numeric view: accepts int and float storage.
    double as_number() const;

    const Storage& storage() const noexcept { return v_; }

    /// Untyped JSON rendering. Decoding needs the type (see TypeRegistry::decode).
    nlohmann::json to_json() const;
    std::string to_string() const;

    friend bool operator==(const Value& a, const Value& b) { return a.v_ == b.v_; }

private:
    [[noreturn]] void throw_bad_access() const;

    Storage v_;
};

} // namespace dbt
