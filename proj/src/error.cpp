#include "viroclave/error.hpp"

namespace viroclave {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::EntryOutOfRange: return "EntryOutOfRange";
    case Errc::DuplicateMacroName: return "DuplicateMacroName";
    case Errc::DuplicateAttachmentName: return "DuplicateAttachmentName";
    case Errc::FieldTooLarge: return "FieldTooLarge";
    case Errc::InvalidOpcode: return "InvalidOpcode";
    case Errc::TruncatedInstruction: return "TruncatedInstruction";
    case Errc::TooSmallToInfect: return "TooSmallToInfect";
    case Errc::NoCavityFound: return "NoCavityFound";
    case Errc::AlreadyInfected: return "AlreadyInfected";
    case Errc::InvalidParameters: return "InvalidParameters";
    case Errc::UnsupportedEntry: return "UnsupportedEntry";
    case Errc::ImageTooLarge: return "ImageTooLarge";
    case Errc::ParseError: return "ParseError";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::UnknownVirus: return "UnknownVirus";
    case Errc::NotInfected: return "NotInfected";
    case Errc::IrreparableKind: return "IrreparableKind";
    case Errc::UnknownLength: return "UnknownLength";
    case Errc::InconsistentInfection: return "InconsistentInfection";
    case Errc::NotAJumpEntry: return "NotAJumpEntry";
    case Errc::HeuristicFailed: return "HeuristicFailed";
    case Errc::WrongDestination: return "WrongDestination";
    case Errc::ZeroKey: return "ZeroKey";
    case Errc::UnknownId: return "UnknownId";
    case Errc::RefusedInfected: return "RefusedInfected";
    case Errc::ReconstructionFailed: return "ReconstructionFailed";
    case Errc::LengthUnderflow: return "LengthUnderflow";
    case Errc::NoBackup: return "NoBackup";
    case Errc::UnknownFile: return "UnknownFile";
    case Errc::BadSectorLength: return "BadSectorLength";
    case Errc::UntrustedHostBlocked: return "UntrustedHostBlocked";
    case Errc::OutOfOrderEvent: return "OutOfOrderEvent";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code)
{
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error(Errc::ParseError, "line " + std::to_string(line) + ": " + what), line_(line)
{
}

}  // namespace viroclave
