#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dode {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened, read or written.
class FileError : public Error {
public:
    using Error::Error;
};

// network
class DanglingReference : public Error {
public:
    using Error::Error;
};

class DisconnectedGraph : public Error {
public:
    DisconnectedGraph(std::string message, std::vector<std::pair<std::string, std::string>> pairs)
        : Error(std::move(message)), unreachable(std::move(pairs)) {}

    /// Every (origin, destination) node-id pair with no directed path.
    std::vector<std::pair<std::string, std::string>> unreachable;
};

class NoPath : public Error {
public:
    using Error::Error;
};

class UnassignedNode : public Error {
public:
    using Error::Error;
};

// ingest
class AllMissing : public Error {
public:
    using Error::Error;
};

class NoSensorsOnLink : public Error {
public:
    using Error::Error;
};

class ZeroSpeed : public Error {
public:
    using Error::Error;
};

// problem
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class MissingBaseEstimate : public Error {
public:
    using Error::Error;
};

class NegativeVariable : public Error {
public:
    using Error::Error;
};

// solver
class Diverged : public Error {
public:
    using Error::Error;
};

// analysis
class InsufficientDays : public Error {
public:
    using Error::Error;
};

class DegenerateSample : public Error {
public:
    using Error::Error;
};

class ZeroBaseline : public Error {
public:
    using Error::Error;
};

class MissingIncome : public Error {
public:
    using Error::Error;
};

} // namespace dode
