#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gradebal {

enum class ErrorKind {
    // imageops
    SingularHomography,
    InvalidKernel,
    InvalidSigma,
    InvalidFactor,
    InvalidScale,
    CropOutOfBounds,
    // augment
    EmptyClass,
    TargetTooSmall,
    // dataset
    MissingHeader,
    BadGrade,
    DuplicateId,
    MalformedRow,
    EmptyManifest,
    AlreadyCarved,
    InvalidFraction,
    // metrics
    LengthMismatch,
    IndexOutOfRange,
    EmptyMatrix,
    DegenerateLabels,
    InvalidScores,
    // trainer
    NonFiniteLogit,
    DimensionMismatch,
    ShapeMismatch,
    EmptyTrainSet,
    DegenerateValidation,
    CorruptCheckpoint,
    InvalidConfig,
    // io / cli
    IoError,
    ConfigInvalid,
    MissingArtifact,
    DataError,
    ConfigMismatch,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::SingularHomography: return "SingularHomography";
    case ErrorKind::InvalidKernel: return "InvalidKernel";
    case ErrorKind::InvalidSigma: return "InvalidSigma";
    case ErrorKind::InvalidFactor: return "InvalidFactor";
    case ErrorKind::InvalidScale: return "InvalidScale";
    case ErrorKind::CropOutOfBounds: return "CropOutOfBounds";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::TargetTooSmall: return "TargetTooSmall";
    case ErrorKind::MissingHeader: return "MissingHeader";
    case ErrorKind::BadGrade: return "BadGrade";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::EmptyManifest: return "EmptyManifest";
    case ErrorKind::AlreadyCarved: return "AlreadyCarved";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::InvalidScores: return "InvalidScores";
    case ErrorKind::NonFiniteLogit: return "NonFiniteLogit";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::DegenerateValidation: return "DegenerateValidation";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::ConfigMismatch: return "ConfigMismatch";
    }
    return "Unknown";
}

/// Every failure in the library is reported as an Error carrying a kind that
/// callers (and the CLI's exit-code mapping) can switch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace gradebal
