#include "dbt/dataflow/value.hpp"

#include "dbt/error.hpp"

namespace dbt {

double Value::as_number() const {
    if (const auto* i = std::get_if<std::int64_t>(&v_)) {
        return static_cast<double>(*i);
    }
    if (const auto* d = std::get_if<double>(&v_)) {
        return *d;
    }
    throw TypeMismatch("value " + to_string() + " is not a number");
}

void Value::throw_bad_access() const {
    throw TypeMismatch("value " + to_string() + " does not hold the requested type");
}

nlohmann::json Value::to_json() const {
    using nlohmann::json;
    return std::visit(
        [](const auto& x) -> json {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, Pose2d>) {
                return json{{"x", x.x}, {"y", x.y}};
            } else if constexpr (std::is_same_v<T, List>) {
                json arr = json::array();
                for (const auto& e : x) {
                    arr.push_back(e.to_json());
                }
                return arr;
            } else if constexpr (std::is_same_v<T, Record>) {
                json obj = json::object();
                for (const auto& [k, e] : x) {
                    obj[k] = e.to_json();
                }
                return obj;
            } else {
                return x;
            }
        },
        v_);
}

std::string Value::to_string() const {
    if (is_none()) {
        return "None";
    }
    if (const auto* s = std::get_if<std::string>(&v_)) {
        return *s;
    }
    if (const auto* p = std::get_if<Pose2d>(&v_)) {
        auto num = [](double d) {
            nlohmann::json j = d;
            return j.dump();
        };
        return "(" + num(p->x) + "," + num(p->y) + ")";
    }
    return to_json().dump();
}

} // namespace dbt
