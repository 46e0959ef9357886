#pragma once

#include <stdexcept>
#include <string>

namespace splitforge {

// Exit codes used by the CLI: 0 success, 1 usage/config, 2 data validation, 3 infeasibility.
enum class ExitCode : int {
    ok = 0,
    config_error = 1,
    validation_error = 2,
    infeasible = 3,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual ExitCode exit_code() const { return ExitCode::config_error; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::config_error; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::validation_error; }
};

class InfeasibleError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::infeasible; }
};

} // namespace splitforge
