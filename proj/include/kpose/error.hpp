#pragma once

#include <stdexcept>
#include <string>

namespace kpose {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses let tests and the CLI tell
// failure kinds apart.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

class InvalidRotation : public Error {
  public:
    using Error::Error;
};

class DegenerateGeometry : public Error {
  public:
    using Error::Error;
};

class InsufficientConstraints : public Error {
  public:
    using Error::Error;
};

class BehindCamera : public Error {
  public:
    using Error::Error;
};

class FormatError : public Error {
  public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string &msg) {
    if (!cond)
        throw InvalidArgument(msg);
}

inline void require_dims(bool cond, const std::string &msg) {
    if (!cond)
        throw DimensionMismatch(msg);
}

} // namespace detail

} // namespace kpose
