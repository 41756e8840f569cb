#pragma once

#include <stdexcept>
#include <string>

namespace qaforge {

// Base for every named error in the toolkit. Subcommands map these onto
// process exit codes (validation -> 1, endpoint -> 2).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- ingest ----
struct NotAZipArchive : Error {
    using Error::Error;
};
struct MissingDocumentPart : Error {
    using Error::Error;
};
struct MalformedMarkup : Error {
    using Error::Error;
};
struct FileUnreadable : Error {
    explicit FileUnreadable(const std::string& path)
        : Error("file unreadable: " + path), path(path) {}
    std::string path;
};
struct UnsupportedFormat : Error {
    explicit UnsupportedFormat(const std::string& extension)
        : Error("unsupported format: " + extension), extension(extension) {}
    std::string extension;
};

// ---- chunker ----
struct TargetOutOfRange : Error {
    using Error::Error;
};

// ---- model gateway ----
struct EndpointError : Error {
    using Error::Error;
};
struct EndpointUnreachable : EndpointError {
    using EndpointError::EndpointError;
};
struct Throttled : EndpointError {
    using EndpointError::EndpointError;
};
struct AuthRejected : EndpointError {
    using EndpointError::EndpointError;
};
struct MalformedResponse : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};

// ---- metrics ----
struct ZeroVector : Error {
    using Error::Error;
};

// ---- dataset ----
struct DelimiterCollision : Error {
    using Error::Error;
};
struct DegenerateSplit : Error {
    using Error::Error;
};
struct WriteFailure : Error {
    using Error::Error;
};

// ---- eval ----
struct MismatchedTestSets : Error {
    using Error::Error;
};

// ---- cli ----
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace qaforge
