#ifndef FEDMOA_ERRORS_H
#define FEDMOA_ERRORS_H

#include <stdexcept>
#include <string>

namespace fedmoa {

// Bad arguments to a numeric or training operation.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Scenario / reward configuration rejected at load time.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Client updates that violate the aggregation protocol.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Run directories or logs that cannot be read back or compared.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fedmoa

#endif  // FEDMOA_ERRORS_H
