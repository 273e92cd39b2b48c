#include "viroclave/toyimage.hpp"

#include "viroclave/error.hpp"

#include <algorithm>
#include <set>

namespace viroclave {

namespace {

void expect_magic(ByteReader& in, ByteView bytes, const std::array<std::uint8_t, 4>& magic)
{
    const auto n = std::min(bytes.size(), magic.size());
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n), magic.begin())) {
        throw Error(Errc::BadMagic, "expected \"" + std::string(magic.begin(), magic.end()) + "\"");
    }
    in.take(magic.size());
}

void expect_end(const ByteReader& in)
{
    if (in.remaining() != 0) {
        throw Error(Errc::TruncatedFile, std::to_string(in.remaining()) + " trailing bytes");
    }
}

std::string take_string(ByteReader& in, std::size_t n)
{
    return to_string(in.take(n));
}

void check_limit(std::size_t size, std::size_t limit, const char* field)
{
    if (size > limit) {
        throw Error(Errc::FieldTooLarge, std::string(field) + " has " + std::to_string(size) +
                                             " bytes, limit " + std::to_string(limit));
    }
}

void put_field8(Bytes& out, std::string_view s, const char* field)
{
    check_limit(s.size(), 0xff, field);
    out.push_back(static_cast<std::uint8_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
}

void put_field16(Bytes& out, ByteView b, const char* field)
{
    check_limit(b.size(), 0xffff, field);
    put_u16(out, static_cast<std::uint16_t>(b.size()));
    out.insert(out.end(), b.begin(), b.end());
}

void check_entry(const ToyImage& img)
{
    const bool ok = img.code.empty() ? img.entry == 0 : img.entry < img.code.size();
    if (!ok) {
        throw Error(Errc::EntryOutOfRange, "entry " + std::to_string(img.entry) + " with " +
                                               std::to_string(img.code.size()) + " code bytes");
    }
}

}  // namespace

ToyImage parse_executable(ByteView bytes)
{
    ByteReader in(bytes);
    expect_magic(in, bytes, kExecutableMagic);
    ToyImage img;
    img.entry = in.u16();
    const std::size_t code_len = in.u16();
    if (in.remaining() != code_len) {
        throw Error(Errc::TruncatedFile, "declared " + std::to_string(code_len) + " code bytes, found " +
                                             std::to_string(in.remaining()));
    }
    const auto code = in.take(code_len);
    img.code.assign(code.begin(), code.end());
    check_entry(img);
    return img;
}

Bytes serialize_executable(const ToyImage& img)
{
    check_limit(img.code.size(), kMaxCodeSize, "code");
    check_entry(img);
    Bytes out(kExecutableMagic.begin(), kExecutableMagic.end());
    out.reserve(kExecutableHeaderSize + img.code.size());
    put_u16(out, img.entry);
    put_field16(out, img.code, "code");
    return out;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> instruction_length(std::uint8_t opcode) noexcept
{
    switch (static_cast<Opcode>(opcode)) {
    case Opcode::Halt:
    case Opcode::Nop: return 1;
    case Opcode::Out: return 2;
    case Opcode::Jmp: return 3;
    case Opcode::Write: return 4;
    case Opcode::Copy: return 7;
    }
    return std::nullopt;
}

std::size_t Instruction::size() const noexcept
{
    return *instruction_length(static_cast<std::uint8_t>(op));
}

Instruction decode_instruction(ByteView code, std::size_t offset)
{
    if (offset >= code.size()) {
        throw Error(Errc::TruncatedInstruction, "no opcode at offset " + std::to_string(offset));
    }
    const auto len = instruction_length(code[offset]);
    if (!len) {
        throw Error(Errc::InvalidOpcode, "opcode 0x" + to_hex(code.subspan(offset, 1)) + " at offset " +
                                             std::to_string(offset));
    }
    if (code.size() - offset < *len) {
        throw Error(Errc::TruncatedInstruction, "instruction at offset " + std::to_string(offset) +
                                                    " needs " + std::to_string(*len) + " bytes");
    }
    const auto u16_at = [&](std::size_t i) {
        return static_cast<std::uint16_t>(code[offset + i] | (code[offset + i + 1] << 8));
    };
    Instruction ins{static_cast<Opcode>(code[offset])};
    switch (ins.op) {
    case Opcode::Halt:
    case Opcode::Nop: break;
    case Opcode::Jmp: ins.addr = u16_at(1); break;
    case Opcode::Write:
        ins.addr = u16_at(1);
        ins.value = code[offset + 3];
        break;
    case Opcode::Copy:
        ins.addr = u16_at(1);
        ins.dst = u16_at(3);
        ins.len = u16_at(5);
        break;
    case Opcode::Out: ins.value = code[offset + 1]; break;
    }
    return ins;
}

std::optional<Instruction> try_decode_instruction(ByteView code, std::size_t offset) noexcept
{
    if (offset >= code.size()) return std::nullopt;
    const auto len = instruction_length(code[offset]);
    if (!len || code.size() - offset < *len) return std::nullopt;
    return decode_instruction(code, offset);
}

void encode_instruction(const Instruction& ins, Bytes& out)
{
    out.push_back(static_cast<std::uint8_t>(ins.op));
    switch (ins.op) {
    case Opcode::Halt:
    case Opcode::Nop: break;
    case Opcode::Jmp: put_u16(out, ins.addr); break;
    case Opcode::Write:
        put_u16(out, ins.addr);
        out.push_back(ins.value);
        break;
    case Opcode::Copy:
        put_u16(out, ins.addr);
        put_u16(out, ins.dst);
        put_u16(out, ins.len);
        break;
    case Opcode::Out: out.push_back(ins.value); break;
    }
}

Bytes assemble(std::initializer_list<Instruction> program)
{
    Bytes out;
    for (const auto& ins : program) encode_instruction(ins, out);
    return out;
}

// ---------------------------------------------------------------------------

Bytes decode_macro(ByteView encoded)
{
    Bytes out(encoded.begin(), encoded.end());
    for (auto& b : out) b ^= kMacroKey;
    return out;
}

ToyDocument parse_document(ByteView bytes)
{
    ByteReader in(bytes);
    expect_magic(in, bytes, kDocumentMagic);
    ToyDocument doc;
    doc.text = take_string(in, in.u16());
    const std::size_t count = in.u8();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < count; ++i) {
        NamedMacro m;
        m.name = take_string(in, in.u8());
        m.body = to_string(decode_macro(in.take(in.u16())));
        if (!seen.insert(m.name).second) throw Error(Errc::DuplicateMacroName, m.name);
        doc.macros.push_back(std::move(m));
    }
    expect_end(in);
    return doc;
}

Bytes serialize_document(const ToyDocument& doc)
{
    check_limit(doc.macros.size(), 0xff, "macro count");
    Bytes out(kDocumentMagic.begin(), kDocumentMagic.end());
    put_field16(out, as_bytes(doc.text), "text");
    out.push_back(static_cast<std::uint8_t>(doc.macros.size()));
    std::set<std::string_view> seen;
    for (const auto& m : doc.macros) {
        if (!seen.insert(m.name).second) throw Error(Errc::DuplicateMacroName, m.name);
        put_field8(out, m.name, "macro name");
        put_field16(out, encode_macro(as_bytes(m.body)), "macro body");
    }
    return out;
}

// ---------------------------------------------------------------------------

ToyEmail parse_email(ByteView bytes)
{
    ByteReader in(bytes);
    expect_magic(in, bytes, kEmailMagic);
    ToyEmail email;
    email.headers = take_string(in, in.u16());
    email.body = take_string(in, in.u16());
    const std::size_t count = in.u8();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < count; ++i) {
        Attachment a;
        a.name = take_string(in, in.u8());
        const auto data = in.take(in.u16());
        a.data.assign(data.begin(), data.end());
        if (!seen.insert(a.name).second) throw Error(Errc::DuplicateAttachmentName, a.name);
        email.attachments.push_back(std::move(a));
    }
    expect_end(in);
    return email;
}

Bytes serialize_email(const ToyEmail& email)
{
    check_limit(email.attachments.size(), 0xff, "attachment count");
    Bytes out(kEmailMagic.begin(), kEmailMagic.end());
    put_field16(out, as_bytes(email.headers), "headers");
    put_field16(out, as_bytes(email.body), "body");
    out.push_back(static_cast<std::uint8_t>(email.attachments.size()));
    std::set<std::string_view> seen;
    for (const auto& a : email.attachments) {
        if (!seen.insert(a.name).second) throw Error(Errc::DuplicateAttachmentName, a.name);
        put_field8(out, a.name, "attachment name");
        put_field16(out, a.data, "attachment data");
    }
    return out;
}

// ---------------------------------------------------------------------------

FileFormat detect_format(ByteView bytes) noexcept
{
    const auto starts_with = [&](const std::array<std::uint8_t, 4>& magic) {
        return bytes.size() >= magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin());
    };
    if (starts_with(kExecutableMagic)) return FileFormat::Executable;
    if (starts_with(kDocumentMagic)) return FileFormat::Document;
    if (starts_with(kEmailMagic)) return FileFormat::Email;
    return FileFormat::Unknown;
}

std::string_view format_name(FileFormat f) noexcept
{
    switch (f) {
    case FileFormat::Executable: return "executable";
    case FileFormat::Document: return "document";
    case FileFormat::Email: return "email";
    case FileFormat::Unknown: return "unknown";
    }
    return "unknown";
}

}  // namespace viroclave
