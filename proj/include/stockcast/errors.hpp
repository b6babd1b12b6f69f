#pragma once

#include <stdexcept>
#include <string>

namespace stockcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define STOCKCAST_DEFINE_ERROR(Name)        \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

// ingest
STOCKCAST_DEFINE_ERROR(FileNotFound);
STOCKCAST_DEFINE_ERROR(EmptySeries);
STOCKCAST_DEFINE_ERROR(DuplicateDate);

// preprocess
STOCKCAST_DEFINE_ERROR(EmptyPartition);
STOCKCAST_DEFINE_ERROR(DegenerateRange);

// windowing
STOCKCAST_DEFINE_ERROR(WindowTooLarge);
STOCKCAST_DEFINE_ERROR(ArityMismatch);

// neural core / models
STOCKCAST_DEFINE_ERROR(ShapeMismatch);
STOCKCAST_DEFINE_ERROR(NonFiniteGradient);
STOCKCAST_DEFINE_ERROR(WindowTooSmall);

// experiment / evaluation
STOCKCAST_DEFINE_ERROR(InvalidConfig);
STOCKCAST_DEFINE_ERROR(NonFiniteLoss);
STOCKCAST_DEFINE_ERROR(TooFewRuns);
STOCKCAST_DEFINE_ERROR(TooFewObservations);

// cli
STOCKCAST_DEFINE_ERROR(MissingDataFile);
STOCKCAST_DEFINE_ERROR(MalformedInput);

#undef STOCKCAST_DEFINE_ERROR

/// Config parse failure carrying the offending line (1-based, 0 if unknown) and field.
class ParseError : public Error {
public:
    ParseError(int line, std::string field, const std::string& message)
        : Error(format_message(line, field, message)), line_(line), field_(std::move(field)) {}

    int line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format_message(int line, const std::string& field, const std::string& message) {
        std::string out = "parse error";
        if (line > 0) out += " at line " + std::to_string(line);
        if (!field.empty()) out += " (field '" + field + "')";
        return out + ": " + message;
    }

    int line_;
    std::string field_;
};

}  // namespace stockcast
