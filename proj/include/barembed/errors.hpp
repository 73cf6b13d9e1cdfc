#pragma once

#include <stdexcept>
#include <string>

namespace barembed {

// Error taxonomy maps onto process exit codes: usage -> 1, data -> 2,
// internal invariant -> 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SMF parsing
struct MalformedHeader : DataError { using DataError::DataError; };
struct UnsupportedFormat : DataError { using DataError::DataError; };
struct TruncatedChunk : DataError { using DataError::DataError; };
struct ZeroTimeDivision : DataError { using DataError::DataError; };

// Codec
struct NonPositiveTempo : DataError { using DataError::DataError; };
struct OnsetOutOfBar : DataError { using DataError::DataError; };
struct VelocityOutOfRange : DataError { using DataError::DataError; };
struct NonPositiveDuration : DataError { using DataError::DataError; };
struct MalformedBar : DataError { using DataError::DataError; };

// Views
struct SingletonSong : DataError { using DataError::DataError; };

// Model / objectives
struct SequenceTooLong : DataError { using DataError::DataError; };
struct NoMaskedPositions : DataError { using DataError::DataError; };
struct DegenerateBatch : DataError { using DataError::DataError; };
struct ZeroNormEmbedding : DataError { using DataError::DataError; };
struct NonFiniteLoss : InternalError { using InternalError::InternalError; };

// Checkpoints
struct VersionMismatch : DataError { using DataError::DataError; };
struct CorruptCheckpoint : DataError { using DataError::DataError; };

// Labels / probing
struct EmptyBar : DataError { using DataError::DataError; };
struct NonFiniteInput : DataError { using DataError::DataError; };
struct KTooLarge : DataError { using DataError::DataError; };
struct MixedConfig : DataError { using DataError::DataError; };

} // namespace barembed
