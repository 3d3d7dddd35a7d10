#ifndef TSAD_ERRORS_HPP
#define TSAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tsad {

// Error taxonomy shared by the library and the CLI. Each class maps to a
// distinct process exit code (see exit_code_for in cli_app.cpp):
//   usage 2, validation/argument 3, data 4, numerical 5, I/O 6.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Command line misuse: unknown command, missing mandatory flag.
class UsageError : public Error {
public:
    using Error::Error;
};

// A function was called with arguments violating its preconditions, or a
// run configuration failed validation.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed input data: bad CSV, non-monotonic timestamps, missing values.
class DataError : public Error {
public:
    using Error::Error;
};

// Model file failed its integrity checksum.
class CorruptModelError : public DataError {
public:
    using DataError::DataError;
};

// Model file has an unsupported format version.
class ModelVersionError : public DataError {
public:
    using DataError::DataError;
};

// Numerical failure: non-finite loss, eigensolver non-convergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Filesystem failure: unreadable input, unwritable output.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace tsad

#endif
