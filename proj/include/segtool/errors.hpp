#pragma once

#include <stdexcept>
#include <string>

namespace seg {

// Base class for all data-level failures (bad files, bad inputs,
// violated preconditions). The CLI maps these to exit code 2;
// anything else that escapes is an internal error (exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// MVOL file I/O
struct MvolHeaderError : DataError { using DataError::DataError; };
struct MvolSizeError : DataError { using DataError::DataError; };
struct MvolTypeError : DataError { using DataError::DataError; };
struct IntensityRangeError : DataError { using DataError::DataError; };
struct MaskValueError : DataError { using DataError::DataError; };
struct LabelSetError : DataError { using DataError::DataError; };
struct ManifestError : DataError { using DataError::DataError; };

// Volume operations
struct DimsMismatchError : DataError { using DataError::DataError; };
struct EmptyBodyError : DataError { using DataError::DataError; };
struct EmptySliceError : DataError { using DataError::DataError; };

// Superpixels
struct SliceTooSmallError : DataError { using DataError::DataError; };
struct EmptyBoundaryError : DataError { using DataError::DataError; };

// Patch features
struct EmptySamplesError : DataError { using DataError::DataError; };
struct SampleRangeError : DataError { using DataError::DataError; };
struct WindowBoundsError : DataError { using DataError::DataError; };
struct DegenerateBboxError : DataError { using DataError::DataError; };

// Random forest
struct EmptyTrainingError : DataError { using DataError::DataError; };
struct SingleClassError : DataError { using DataError::DataError; };
struct NonFiniteFeatureError : DataError { using DataError::DataError; };
struct DimensionMismatchError : DataError { using DataError::DataError; };
struct ModelFormatError : DataError { using DataError::DataError; };
struct ModelVersionError : DataError { using DataError::DataError; };

// Superpixel stage
struct EmptySuperpixelError : DataError { using DataError::DataError; };
struct DegenerateCascadeError : DataError { using DataError::DataError; };
struct MissingFeatureError : DataError { using DataError::DataError; };

// Metrics
struct EmptyGroundTruthError : DataError { using DataError::DataError; };
struct EmptyReportListError : DataError { using DataError::DataError; };

// Config / pipeline
struct ConfigError : DataError { using DataError::DataError; };

} // namespace seg
