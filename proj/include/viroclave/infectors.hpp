#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/toyimage.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace viroclave {

enum class VirusKind { Appender, Prepender, Overwriter, ScramblingOverwriter, Cavity, MacroVirus };

std::string_view kind_name(VirusKind kind) noexcept;
/// Case-insensitive; accepts the names produced by kind_name.
std::optional<VirusKind> parse_kind(std::string_view text) noexcept;

/// Overwriting kinds destroy host bytes; nothing can put them back.
bool is_repairable_kind(VirusKind kind) noexcept;

struct VirusDefinition {
    std::string name;
    VirusKind kind = VirusKind::Appender;
    std::optional<std::size_t> body_len;  // nullopt: length not known (variable-length family)
    std::size_t prefix_len = 3;
    std::size_t saved_offset = 0;
    Bytes signature;
    bool memory_resident = false;
    bool dangerous = false;
    std::string triz_tag;

    bool operator==(const VirusDefinition&) const = default;
};

inline constexpr std::size_t kMinSignature = 8;
inline constexpr std::size_t kMaxSignature = 16;
inline constexpr std::size_t kSynthSignature = 12;
/// COPY saved->0 (7 bytes) followed by JMP 0 (3 bytes).
inline constexpr std::size_t kRestoreStubSize = 10;

/// Checks field ranges and that the virus body layout fits:
///   Appender/Cavity: [signature][COPY saved->0][JMP 0][filler][saved prefix @saved_offset][filler]
///   Prepender:       [signature][JMP host][filler][JMP host]
///   Overwriter and ScramblingOverwriter: [signature][filler]
/// Throws Error(InvalidParameters).
void validate_definition(const VirusDefinition& defn);

struct InfectionRecord {
    std::string virus;
    std::size_t original_len = 0;
    std::size_t body_start = 0;
    VirusKind kind = VirusKind::Appender;

    bool operator==(const InfectionRecord&) const = default;
};

struct Infection {
    ToyImage image;
    InfectionRecord record;
};

/// Deterministic in (img, defn, seed). The seed only picks filler bytes (and
/// the keystream for ScramblingOverwriter).
Infection infect(const ToyImage& img, const VirusDefinition& defn, std::uint64_t seed);

/// A fresh "unknown" virus. Its signature is the first 12 body bytes: six
/// OUT instructions (position independent, so execution falls through it),
/// or 12 printable characters for macro viruses.
VirusDefinition synthesize_virus(VirusKind kind, std::size_t body_len, std::size_t prefix_len,
                                 std::size_t saved_offset, std::uint64_t seed);

/// A well-behaved host: OUT/NOP instructions ending in HALT, exactly `size`
/// bytes (size >= 1), entry 0.
ToyImage generate_program(std::size_t size, std::uint64_t seed);

/// A host with a zero-filled gap it jumps over:
///   [OUT/NOP ... JMP tail, NOP][zero_run zeros][OUT/NOP ... HALT]
/// Requires size >= zero_run + 16.
ToyImage generate_cavity_host(std::size_t size, std::size_t zero_run, std::uint64_t seed);

/// Appends one macro carrying the signature and a few destructive commands.
ToyDocument infect_document(const ToyDocument& doc, const VirusDefinition& defn);

}  // namespace viroclave
