#pragma once

#include <stdexcept>
#include <string>

namespace rydroute {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or missing atomic data / configuration input.
class DataError : public Error {
public:
    using Error::Error;
};

/// A beam layout whose wavevectors cannot close the readout triangle.
class InfeasibleGeometry : public Error {
public:
    InfeasibleGeometry(const std::string& what, double defect)
        : Error(what), defect_(defect) {}

    /// Signed triangle defect in rad/m.
    double defect() const noexcept { return defect_; }

private:
    double defect_;
};

/// Requested storage time too short for the redirection timing.
class TimingViolation : public Error {
public:
    TimingViolation(const std::string& what, double minimum_storage)
        : Error(what), minimum_storage_(minimum_storage) {}

    /// Shortest admissible storage time in seconds.
    double minimum_storage() const noexcept { return minimum_storage_; }

private:
    double minimum_storage_;
};

}  // namespace rydroute
