#pragma once

#include <stdexcept>
#include <string>

namespace boml {

// Error taxonomy used across the library. Everything derives from
// boml::Error so callers can catch one type at the harness boundary.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between matrices / parameter sets.
struct DimensionError : Error {
  using Error::Error;
};

// Malformed caller-supplied values (out-of-range labels, bad config values).
struct InputError : Error {
  using Error::Error;
};

// Not enough classes or examples to honor a sampling request.
struct CapacityError : Error {
  using Error::Error;
};

// Operation outside the supported primitive set.
struct CapabilityError : Error {
  using Error::Error;
};

// Unreadable or undecodable input file.
struct IngestionError : Error {
  using Error::Error;
};

// Corrupt or wrong-version serialized container.
struct FormatError : Error {
  using Error::Error;
};

// Serialized state does not match the requested model shapes.
struct CompatibilityError : Error {
  using Error::Error;
};

// Mathematical domain violation (non-positive sigma, NaN loss).
struct DomainError : Error {
  using Error::Error;
};

}  // namespace boml
