#include "weblapse/error.hpp"

namespace weblapse {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedLinkFormat: return "MalformedLinkFormat";
        case ErrorKind::MissingDatetime: return "MissingDatetime";
        case ErrorKind::UnrecognizedDatetime: return "UnrecognizedDatetime";
        case ErrorKind::MalformedIndex: return "MalformedIndex";
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::TooManyRedirects: return "TooManyRedirects";
        case ErrorKind::NetworkFailure: return "NetworkFailure";
        case ErrorKind::AggregatorUnreachable: return "AggregatorUnreachable";
        case ErrorKind::EmptyAggregation: return "EmptyAggregation";
        case ErrorKind::InvalidDate: return "InvalidDate";
        case ErrorKind::EmptySelection: return "EmptySelection";
        case ErrorKind::FetchFailure: return "FetchFailure";
        case ErrorKind::NoTrigger: return "NoTrigger";
        case ErrorKind::NoUrls: return "NoUrls";
        case ErrorKind::MalformedLine: return "MalformedLine";
        case ErrorKind::WorkdirMissing: return "WorkdirMissing";
        case ErrorKind::StoreBusy: return "StoreBusy";
        case ErrorKind::StoreError: return "StoreError";
        case ErrorKind::InvalidUrl: return "InvalidUrl";
        case ErrorKind::RenderTimeout: return "RenderTimeout";
        case ErrorKind::NavigationFailure: return "NavigationFailure";
        case ErrorKind::UnsupportedImage: return "UnsupportedImage";
        case ErrorKind::NoFrames: return "NoFrames";
        case ErrorKind::NoEligibleTrack: return "NoEligibleTrack";
        case ErrorKind::EncoderFailure: return "EncoderFailure";
        case ErrorKind::MissingFile: return "MissingFile";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoFailure: return "IoFailure";
    }
    return "Error";
}

} // namespace weblapse
