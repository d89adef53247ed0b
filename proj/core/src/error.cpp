// Copyright 2026 The anchorsplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "anchorsplat/error.hpp"

namespace anchorsplat {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::ReferentialIntegrity: return "ReferentialIntegrity";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::InvalidPerturbation: return "InvalidPerturbation";
        case ErrorCode::InsufficientFrames: return "InsufficientFrames";
        case ErrorCode::RegistrationGap: return "RegistrationGap";
        case ErrorCode::UnknownImage: return "UnknownImage";
        case ErrorCode::UnknownClip: return "UnknownClip";
        case ErrorCode::DegenerateScale: return "DegenerateScale";
        case ErrorCode::NoAnchors: return "NoAnchors";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::EmptyPointmap: return "EmptyPointmap";
        case ErrorCode::AuxMismatch: return "AuxMismatch";
        case ErrorCode::EmptySet: return "EmptySet";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
        case ErrorCode::InsufficientCorrespondences: return "InsufficientCorrespondences";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace anchorsplat
