#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dbt {

/// Base of every error raised by the runtime.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownNode : public Error {
public:
    explicit UnknownNode(const std::string& id) : Error("unknown node '" + id + "'"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class IllegalTransition : public Error {
public:
    using Error::Error;
};

class RootUninitialized : public Error {
public:
    using Error::Error;
};

class TreeStructureError : public Error {
public:
    using Error::Error;
};

class StartOutsideRunning : public Error {
public:
    using Error::Error;
};

// dataflow
class MissingOption : public Error {
public:
    using Error::Error;
};

class TypeMismatch : public Error {
public:
    using Error::Error;
};

class KindMismatch : public Error {
public:
    using Error::Error;
};

class UnresolvableType : public Error {
public:
    using Error::Error;
};

class UnknownParameter : public Error {
public:
    using Error::Error;
};

class UnknownNodeType : public Error {
public:
    using Error::Error;
};

// tree documents
class ParseError : public Error {
public:
    using Error::Error;
};

struct Violation {
    std::string where; ///< JSON pointer into the offending document
    std::string what;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(summarize(violations)), violations_(std::move(violations)) {}

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    static std::string summarize(const std::vector<Violation>& v) {
        std::string out = std::to_string(v.size()) + " validation error(s)";
        for (const auto& item : v) {
            out += "\n  " + item.where + ": " + item.what;
        }
        return out;
    }

    std::vector<Violation> violations_;
};

class IncludeCycle : public Error {
public:
    using Error::Error;
};

// distribution
class DeserializationError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

// mission simulator
class UnknownDoor : public Error {
public:
    using Error::Error;
};

class UnknownObject : public Error {
public:
    using Error::Error;
};

class UnknownRobot : public Error {
public:
    using Error::Error;
};

class ServiceUnavailable : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace dbt
