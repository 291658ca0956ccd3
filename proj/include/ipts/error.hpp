#pragma once

#include <stdexcept>
#include <string>

namespace ipts {

/// Base class for every error the library reports. Each documented failure
/// condition has its own concrete type so callers can catch precisely.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// file / format errors
struct IoError : Error { using Error::Error; };
struct BadMagic : IoError { using IoError::IoError; };
struct TruncatedFile : IoError { using IoError::IoError; };
struct UnsupportedFormat : IoError { using IoError::IoError; };
struct SchemaMismatch : IoError { using IoError::IoError; };

// corpus / data errors
struct LengthMismatch : Error { using Error::Error; };
struct MixedDimensions : Error { using Error::Error; };
struct MissingLabel : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct EmptyCorpus : Error { using Error::Error; };

// genome errors
struct BadLength : Error { using Error::Error; };
struct UnencodableOp : Error { using Error::Error; };

// search / generation errors
struct TooManySeeds : Error { using Error::Error; };
struct InsufficientSamples : Error { using Error::Error; };

// invalid parameter combinations
struct ConfigError : Error { using Error::Error; };

}  // namespace ipts
