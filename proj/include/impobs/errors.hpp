#pragma once

#include <stdexcept>
#include <string>

namespace impobs {

enum class ErrorKind {
    Dimension,
    NonFinite,
    Rank,
    Conditioning,
    CertificatePrecondition,
    CertificateInfeasible,
    Design,
    InfeasibleWindow,
    Integration,
    Config,
    Io,
};

const char* to_string(ErrorKind kind);

// Base exception for everything the toolkit throws on contract violations.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InfeasibleWindowError : public Error {
public:
    InfeasibleWindowError(double t_min, double t_max);
    double t_min() const noexcept { return t_min_; }
    double t_max() const noexcept { return t_max_; }

private:
    double t_min_;
    double t_max_;
};

class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_good_time)
        : Error(ErrorKind::Integration, what), last_good_time_(last_good_time) {}
    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

// Config errors carry the 1-based line (0 when not tied to a line) and key.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {});
    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

}  // namespace impobs
