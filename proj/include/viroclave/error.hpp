#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace viroclave {

enum class Errc {
    // file formats
    BadMagic,
    TruncatedFile,
    EntryOutOfRange,
    DuplicateMacroName,
    DuplicateAttachmentName,
    FieldTooLarge,
    InvalidOpcode,
    TruncatedInstruction,
    // infection
    TooSmallToInfect,
    NoCavityFound,
    AlreadyInfected,
    InvalidParameters,
    UnsupportedEntry,
    ImageTooLarge,
    // definitions
    ParseError,
    DuplicateName,
    UnknownVirus,
    // repair
    NotInfected,
    IrreparableKind,
    UnknownLength,
    InconsistentInfection,
    // heuristic cleaning
    NotAJumpEntry,
    HeuristicFailed,
    WrongDestination,
    // quarantine
    ZeroKey,
    UnknownId,
    // snapshots and mirror
    RefusedInfected,
    ReconstructionFailed,
    LengthUnderflow,
    NoBackup,
    // system simulation
    UnknownFile,
    BadSectorLength,
    UntrustedHostBlocked,
    OutOfOrderEvent,
    // plumbing
    IoError,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Definition database syntax error; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what);

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace viroclave
