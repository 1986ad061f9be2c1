#include "impobs/errors.hpp"

#include <sstream>

namespace impobs {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Dimension: return "dimension error";
        case ErrorKind::NonFinite: return "non-finite value";
        case ErrorKind::Rank: return "rank error";
        case ErrorKind::Conditioning: return "conditioning error";
        case ErrorKind::CertificatePrecondition: return "certificate precondition violated";
        case ErrorKind::CertificateInfeasible: return "certificate infeasible";
        case ErrorKind::Design: return "design error";
        case ErrorKind::InfeasibleWindow: return "infeasible sampling window";
        case ErrorKind::Integration: return "integration failure";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

namespace {

std::string window_message(double t_min, double t_max) {
    std::ostringstream os;
    os.precision(10);
    os << "sampling window is empty: T_min = " << t_min << " >= T_max = " << t_max;
    return os.str();
}

std::string config_message(const std::string& what, int line, const std::string& key) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!key.empty()) msg += "'" + key + "': ";
    return msg + what;
}

}  // namespace

InfeasibleWindowError::InfeasibleWindowError(double t_min, double t_max)
    : Error(ErrorKind::InfeasibleWindow, window_message(t_min, t_max)), t_min_(t_min), t_max_(t_max) {}

ConfigError::ConfigError(const std::string& what, int line, std::string key)
    : Error(ErrorKind::Config, config_message(what, line, key)), line_(line), key_(std::move(key)) {}

}  // namespace impobs
