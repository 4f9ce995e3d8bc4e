#pragma once

#include <stdexcept>
#include <string>

namespace pcc {

// Every error raised by the library derives from pcc::Error so callers can
// catch the whole family at once; the subclasses name the failed contract.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class InvalidSystemError : public Error {
public:
    using Error::Error;
};

class GridError : public Error {
public:
    using Error::Error;
};

class OverflowError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InvalidWitnessError : public Error {
public:
    using Error::Error;
};

class TooLargeError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) {
        throw ShapeError(what);
    }
}

}  // namespace detail

}  // namespace pcc
