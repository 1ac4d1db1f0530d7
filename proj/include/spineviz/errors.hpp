#pragma once

#include <stdexcept>
#include <string>

namespace spineviz {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input files (CSV, OBJ, manifest, model/scenario documents).
class FormatError : public Error {
public:
    using Error::Error;
};

// Out-of-range parameters (degeneration degree, canvas size, dt, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

// Requests against a dataset that cannot be answered (absent attribute,
// mismatched time bases).
class QueryError : public Error {
public:
    using Error::Error;
};

// Unknown dataset id, structure or resource.
class NotFoundError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(std::string body, double time)
        : Error("simulation diverged: body " + body + " at t=" + std::to_string(time) + " s"),
          body_(std::move(body)),
          time_(time) {}

    const std::string& body() const noexcept { return body_; }
    double time() const noexcept { return time_; }

private:
    std::string body_;
    double time_;
};

}  // namespace spineviz
