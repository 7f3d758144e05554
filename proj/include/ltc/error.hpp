#pragma once

#include <stdexcept>
#include <string>

namespace ltc {

// Every library failure derives from Error so callers can map categories
// onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { public: using Error::Error; };
class DomainError    : public Error { public: using Error::Error; };
class NumericError   : public Error { public: using Error::Error; };
class UsageError     : public Error { public: using Error::Error; };
class CapacityError  : public Error { public: using Error::Error; };
class FormatError    : public Error { public: using Error::Error; };
class VersionError   : public FormatError { public: using FormatError::FormatError; };
class ConfigError    : public Error { public: using Error::Error; };
class FileError      : public Error { public: using Error::Error; };

} // namespace ltc
