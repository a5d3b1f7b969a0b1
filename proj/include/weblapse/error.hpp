#pragma once

#include <stdexcept>
#include <string>

namespace weblapse {

enum class ErrorKind {
    // memento parsing
    MalformedLinkFormat,
    MissingDatetime,
    UnrecognizedDatetime,
    MalformedIndex,
    MalformedRecord,
    // network
    TooManyRedirects,
    NetworkFailure,
    AggregatorUnreachable,
    EmptyAggregation,
    // selection
    InvalidDate,
    EmptySelection,
    FetchFailure,
    // request pipeline
    NoTrigger,
    NoUrls,
    MalformedLine,
    WorkdirMissing,
    StoreBusy,
    StoreError,
    // render
    InvalidUrl,
    RenderTimeout,
    NavigationFailure,
    UnsupportedImage,
    // assemble
    NoFrames,
    NoEligibleTrack,
    EncoderFailure,
    // config / io
    MissingFile,
    ConfigError,
    IoFailure,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace weblapse
