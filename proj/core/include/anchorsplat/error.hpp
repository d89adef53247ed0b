// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anchorsplat {

/// Machine-readable failure categories. The string form (`to_string`) is the
/// stable identifier written into CLI error reports.
enum class ErrorCode {
    MissingFile,
    MalformedRecord,
    ReferentialIntegrity,
    IoFailure,
    OutOfRange,
    InvalidPerturbation,
    InsufficientFrames,
    RegistrationGap,
    UnknownImage,
    UnknownClip,
    DegenerateScale,
    NoAnchors,
    ShapeMismatch,
    EmptyPointmap,
    AuxMismatch,
    EmptySet,
    EmptyList,
    DegenerateConfiguration,
    InsufficientCorrespondences,
    InvalidSpec,
    InvalidConfig,
    DivergedLoss,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace anchorsplat
