#pragma once

// Bit-exact toy file formats shared by every other module.
//
//   TXE1  executable: magic, entry u16, code_len u16, code
//   TDOC  document:   magic, text_len u16, text, macro_count u8,
//                     { name_len u8, name, enc_len u16, XOR-0x5A body }*
//   TMLX  email:      magic, header_len u16, headers, body_len u16, body,
//                     att_count u8, { name_len u8, name, data_len u16, data }*
//
// All integers are little-endian.

#include "viroclave/bytes.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

inline constexpr std::array<std::uint8_t, 4> kExecutableMagic{'T', 'X', 'E', '1'};
inline constexpr std::array<std::uint8_t, 4> kDocumentMagic{'T', 'D', 'O', 'C'};
inline constexpr std::array<std::uint8_t, 4> kEmailMagic{'T', 'M', 'L', 'X'};
inline constexpr std::size_t kExecutableHeaderSize = 8;
inline constexpr std::size_t kMaxCodeSize = 0xffff;
inline constexpr std::uint8_t kMacroKey = 0x5a;

struct ToyImage {
    std::uint16_t entry = 0;
    Bytes code;

    bool operator==(const ToyImage&) const = default;
};

ToyImage parse_executable(ByteView bytes);
Bytes serialize_executable(const ToyImage& img);

// ---------------------------------------------------------------------------
// Instruction set

enum class Opcode : std::uint8_t {
    Halt = 0x00,
    Nop = 0x01,
    Jmp = 0x02,    // addr
    Write = 0x03,  // addr, value
    Copy = 0x04,   // src, dst, len
    Out = 0x05,    // value
};

struct Instruction {
    Opcode op = Opcode::Halt;
    std::uint16_t addr = 0;  // JMP/WRITE target, COPY source
    std::uint16_t dst = 0;
    std::uint16_t len = 0;
    std::uint8_t value = 0;

    static Instruction halt() { return {}; }
    static Instruction nop() { return {Opcode::Nop}; }
    static Instruction jmp(std::uint16_t target) { return {Opcode::Jmp, target}; }
    static Instruction write(std::uint16_t target, std::uint8_t v) { return {Opcode::Write, target, 0, 0, v}; }
    static Instruction copy(std::uint16_t src, std::uint16_t dst, std::uint16_t len) { return {Opcode::Copy, src, dst, len}; }
    static Instruction out(std::uint8_t v) { return {Opcode::Out, 0, 0, 0, v}; }

    std::size_t size() const noexcept;

    bool operator==(const Instruction&) const = default;
};

/// Encoded length of each opcode: HALT/NOP 1, OUT 2, JMP 3, WRITE 4, COPY 7.
std::optional<std::size_t> instruction_length(std::uint8_t opcode) noexcept;

/// Throws Error(InvalidOpcode) or Error(TruncatedInstruction).
Instruction decode_instruction(ByteView code, std::size_t offset);
std::optional<Instruction> try_decode_instruction(ByteView code, std::size_t offset) noexcept;

void encode_instruction(const Instruction& ins, Bytes& out);
Bytes assemble(std::initializer_list<Instruction> program);

// ---------------------------------------------------------------------------
// Documents

struct NamedMacro {
    std::string name;
    std::string body;  // decoded, newline-separated commands

    bool operator==(const NamedMacro&) const = default;
};

struct ToyDocument {
    std::string text;
    std::vector<NamedMacro> macros;

    bool operator==(const ToyDocument&) const = default;
};

/// XOR 0x5A; the same transform encodes.
Bytes decode_macro(ByteView encoded);
inline Bytes encode_macro(ByteView plain) { return decode_macro(plain); }

ToyDocument parse_document(ByteView bytes);
Bytes serialize_document(const ToyDocument& doc);

// ---------------------------------------------------------------------------
// Email

struct Attachment {
    std::string name;
    Bytes data;

    bool operator==(const Attachment&) const = default;
};

struct ToyEmail {
    std::string headers;
    std::string body;
    std::vector<Attachment> attachments;

    bool operator==(const ToyEmail&) const = default;
};

ToyEmail parse_email(ByteView bytes);
Bytes serialize_email(const ToyEmail& email);

// ---------------------------------------------------------------------------

enum class FileFormat { Executable, Document, Email, Unknown };

/// Magic-based sniffing only; does not validate the rest of the file.
FileFormat detect_format(ByteView bytes) noexcept;
std::string_view format_name(FileFormat f) noexcept;

}  // namespace viroclave
