#include "rune/error.hpp"

namespace rune {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::MissingBase: return "MissingBase";
    case Errc::DuplicateInstruction: return "DuplicateInstruction";
    case Errc::UnknownInstruction: return "UnknownInstruction";
    case Errc::MissingInstruction: return "MissingInstruction";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::UnresolvedName: return "UnresolvedName";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NoCapabilitySource: return "NoCapabilitySource";
    case Errc::InvalidPipeline: return "InvalidPipeline";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::DigestMismatch: return "DigestMismatch";
    case Errc::Truncated: return "Truncated";
    case Errc::Malformed: return "Malformed";
    case Errc::CapabilityDenied: return "CapabilityDenied";
    case Errc::InsufficientMemory: return "InsufficientMemory";
    case Errc::NotManifested: return "NotManifested";
    case Errc::PermissionViolation: return "PermissionViolation";
    case Errc::Faulted: return "Faulted";
    case Errc::EmptyPipeline: return "EmptyPipeline";
    case Errc::ModelNotFound: return "ModelNotFound";
    case Errc::ModelFormatError: return "ModelFormatError";
    case Errc::IoError: return "IoError";
    case Errc::TargetUnreachable: return "TargetUnreachable";
    case Errc::ProviderMismatch: return "ProviderMismatch";
    case Errc::TransferCorrupt: return "TransferCorrupt";
    case Errc::NoRuneDeployed: return "NoRuneDeployed";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::NonPositiveBaseline: return "NonPositiveBaseline";
    case Errc::EmptyRecords: return "EmptyRecords";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error::Error(Errc code, const std::string& message, SourceLocation where)
    : std::runtime_error(message), code_(code), where_(where) {}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

void fail_at(Errc code, std::size_t offset, const std::string& message) {
  Error e(code, message + " (at byte " + std::to_string(offset) + ")");
  e.offset = offset;
  throw e;
}

}  // namespace rune
