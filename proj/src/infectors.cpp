#include "viroclave/infectors.hpp"

#include "viroclave/error.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace viroclave {

std::string_view kind_name(VirusKind kind) noexcept
{
    switch (kind) {
    case VirusKind::Appender: return "Appender";
    case VirusKind::Prepender: return "Prepender";
    case VirusKind::Overwriter: return "Overwriter";
    case VirusKind::ScramblingOverwriter: return "ScramblingOverwriter";
    case VirusKind::Cavity: return "Cavity";
    case VirusKind::MacroVirus: return "MacroVirus";
    }
    return "?";
}

std::optional<VirusKind> parse_kind(std::string_view text) noexcept
{
    for (auto k : {VirusKind::Appender, VirusKind::Prepender, VirusKind::Overwriter,
                   VirusKind::ScramblingOverwriter, VirusKind::Cavity, VirusKind::MacroVirus}) {
        const auto name = kind_name(k);
        if (name.size() == text.size() &&
            std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
                return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
            })) {
            return k;
        }
    }
    return std::nullopt;
}

bool is_repairable_kind(VirusKind kind) noexcept
{
    return kind != VirusKind::Overwriter && kind != VirusKind::ScramblingOverwriter;
}

namespace {

[[noreturn]] void invalid(const VirusDefinition& defn, const std::string& why)
{
    throw Error(Errc::InvalidParameters, defn.name + ": " + why);
}

Bytes filler(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

void put_at(Bytes& dst, std::size_t pos, const Bytes& src)
{
    std::copy(src.begin(), src.end(), dst.begin() + static_cast<std::ptrdiff_t>(pos));
}

/// JMP target followed by NOPs up to prefix_len.
Bytes hijacked_head(std::size_t target, std::size_t prefix_len)
{
    Bytes head = assemble({Instruction::jmp(static_cast<std::uint16_t>(target))});
    head.resize(prefix_len, static_cast<std::uint8_t>(Opcode::Nop));
    return head;
}

/// Body for kinds that stash the original prefix and put it back at run time.
Bytes restoring_body(const VirusDefinition& defn, std::size_t body_start, ByteView saved, std::uint64_t seed)
{
    Bytes body = filler(*defn.body_len, seed);
    put_at(body, 0, defn.signature);
    put_at(body, defn.signature.size(),
           assemble({Instruction::copy(static_cast<std::uint16_t>(body_start + defn.saved_offset), 0,
                                       static_cast<std::uint16_t>(defn.prefix_len)),
                     Instruction::jmp(0)}));
    std::copy(saved.begin(), saved.end(), body.begin() + static_cast<std::ptrdiff_t>(defn.saved_offset));
    return body;
}

std::optional<std::size_t> find_zero_run(const Bytes& code, std::size_t from, std::size_t len)
{
    std::size_t run = 0;
    for (std::size_t i = from; i < code.size(); ++i) {
        run = code[i] == 0 ? run + 1 : 0;
        if (run == len) return i + 1 - len;
    }
    return std::nullopt;
}

}  // namespace

void validate_definition(const VirusDefinition& defn)
{
    if (defn.name.empty()) invalid(defn, "empty name");
    if (defn.name.find_first_of("|\n") != std::string::npos) invalid(defn, "name contains '|' or newline");
    const auto sig = defn.signature.size();
    if (sig < kMinSignature || sig > kMaxSignature) {
        invalid(defn, "signature must be 8-16 bytes, got " + std::to_string(sig));
    }
    if (defn.prefix_len < 3) invalid(defn, "prefix_len must be at least 3 (a JMP is 3 bytes)");

    if (defn.kind == VirusKind::MacroVirus) {
        if (std::find(defn.signature.begin(), defn.signature.end(), '\n') != defn.signature.end()) {
            invalid(defn, "macro signature must fit on one line");
        }
        return;
    }
    if (!defn.body_len) return;  // length unknown: nothing further to check

    const auto body = *defn.body_len;
    if (body > kMaxCodeSize) invalid(defn, "body_len exceeds 65535");
    switch (defn.kind) {
    case VirusKind::Appender:
    case VirusKind::Cavity:
        if (defn.saved_offset + defn.prefix_len > body) invalid(defn, "saved_offset + prefix_len > body_len");
        if (defn.saved_offset < sig + kRestoreStubSize) {
            invalid(defn, "saved prefix would overlap the signature or restore code (saved_offset < " +
                              std::to_string(sig + kRestoreStubSize) + ")");
        }
        break;
    case VirusKind::Prepender:
        if (body < sig + 6) invalid(defn, "prepender body too short for signature and jumps");
        break;
    case VirusKind::Overwriter:
    case VirusKind::ScramblingOverwriter:
        if (body < sig) invalid(defn, "body shorter than signature");
        break;
    case VirusKind::MacroVirus: break;
    }
}

Infection infect(const ToyImage& img, const VirusDefinition& defn, std::uint64_t seed)
{
    if (defn.kind == VirusKind::MacroVirus) invalid(defn, "macro viruses infect documents, not executables");
    validate_definition(defn);
    if (!defn.body_len) invalid(defn, "cannot build a body of unknown length");
    if (img.entry != 0) {
        throw Error(Errc::UnsupportedEntry, "only entry-0 images are infected, got entry " + std::to_string(img.entry));
    }
    if (contains_bytes(img.code, defn.signature)) throw Error(Errc::AlreadyInfected, defn.name);

    const std::size_t body_len = *defn.body_len;
    const std::size_t len = img.code.size();
    const std::size_t need = defn.kind == VirusKind::Overwriter ? std::max(body_len, defn.prefix_len) : defn.prefix_len;
    if (len < need || len == 0) {
        throw Error(Errc::TooSmallToInfect, std::to_string(len) + " code bytes, need " + std::to_string(need));
    }
    const bool grows = defn.kind != VirusKind::Overwriter && defn.kind != VirusKind::Cavity;
    if (grows && len + body_len > kMaxCodeSize) {
        throw Error(Errc::ImageTooLarge, std::to_string(len + body_len) + " bytes after infection");
    }

    Infection result;
    result.record = {defn.name, len, 0, defn.kind};
    Bytes& code = result.image.code;
    const ByteView original(img.code);

    switch (defn.kind) {
    case VirusKind::Appender: {
        const std::size_t start = len;
        code = img.code;
        put_at(code, 0, hijacked_head(start, defn.prefix_len));
        const Bytes body = restoring_body(defn, start, original.first(defn.prefix_len), seed);
        code.insert(code.end(), body.begin(), body.end());
        result.record.body_start = start;
        break;
    }
    case VirusKind::Prepender: {
        Bytes body = filler(body_len, seed);
        put_at(body, 0, defn.signature);
        const Bytes to_host = assemble({Instruction::jmp(static_cast<std::uint16_t>(body_len))});
        put_at(body, defn.signature.size(), to_host);
        put_at(body, body_len - to_host.size(), to_host);
        code = std::move(body);
        code.insert(code.end(), img.code.begin(), img.code.end());
        break;
    }
    case VirusKind::Overwriter: {
        Bytes body = filler(body_len, seed);
        put_at(body, 0, defn.signature);
        code = img.code;
        put_at(code, 0, body);
        break;
    }
    case VirusKind::ScramblingOverwriter: {
        Bytes body = filler(body_len, seed);
        put_at(body, 0, defn.signature);
        Bytes host = img.code;
        std::mt19937_64 keystream(seed ^ 0x9e3779b97f4a7c15ULL);
        for (auto& b : host) b ^= static_cast<std::uint8_t>(keystream() | 1);
        code = std::move(body);
        code.insert(code.end(), host.begin(), host.end());
        break;
    }
    case VirusKind::Cavity: {
        const auto start = find_zero_run(img.code, defn.prefix_len, body_len);
        if (!start) {
            throw Error(Errc::NoCavityFound, "no run of " + std::to_string(body_len) + " zero bytes");
        }
        code = img.code;
        put_at(code, *start, restoring_body(defn, *start, original.first(defn.prefix_len), seed));
        put_at(code, 0, hijacked_head(*start, defn.prefix_len));
        result.record.body_start = *start;
        break;
    }
    case VirusKind::MacroVirus: break;
    }
    return result;
}

VirusDefinition synthesize_virus(VirusKind kind, std::size_t body_len, std::size_t prefix_len,
                                 std::size_t saved_offset, std::uint64_t seed)
{
    VirusDefinition defn;
    defn.name = "Synth-" + std::string(kind_name(kind)) + "-b" + std::to_string(body_len) + "-s" + std::to_string(seed);
    defn.kind = kind;
    defn.body_len = body_len;
    defn.prefix_len = prefix_len;
    defn.saved_offset = saved_offset;

    std::mt19937_64 rng(seed * 0x100000001b3ULL + static_cast<std::uint64_t>(kind));
    if (kind == VirusKind::MacroVirus) {
        static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        for (std::size_t i = 0; i < kSynthSignature; ++i) {
            defn.signature.push_back(static_cast<std::uint8_t>(alphabet[rng() % (sizeof(alphabet) - 1)]));
        }
    } else {
        for (std::size_t i = 0; i < kSynthSignature / 2; ++i) {
            encode_instruction(Instruction::out(static_cast<std::uint8_t>(rng())), defn.signature);
        }
    }
    validate_definition(defn);
    return defn;
}

namespace {

/// Random OUT/NOP stream of exactly n bytes.
Bytes straight_line(std::size_t n, std::mt19937_64& rng)
{
    Bytes out;
    while (out.size() < n) {
        if (n - out.size() >= 2 && rng() % 4 != 0) {
            encode_instruction(Instruction::out(static_cast<std::uint8_t>(rng())), out);
        } else {
            encode_instruction(Instruction::nop(), out);
        }
    }
    return out;
}

}  // namespace

ToyImage generate_program(std::size_t size, std::uint64_t seed)
{
    if (size == 0 || size > kMaxCodeSize) throw Error(Errc::InvalidParameters, "program size must be 1..65535");
    std::mt19937_64 rng(seed);
    ToyImage img;
    img.code = straight_line(size - 1, rng);
    img.code.push_back(static_cast<std::uint8_t>(Opcode::Halt));
    return img;
}

ToyImage generate_cavity_host(std::size_t size, std::size_t zero_run, std::uint64_t seed)
{
    if (size > kMaxCodeSize || size < zero_run + 16) {
        throw Error(Errc::InvalidParameters, "cavity host needs size >= zero_run + 16 and <= 65535");
    }
    std::mt19937_64 rng(seed);
    const std::size_t lead = (size - zero_run) / 2;
    const std::size_t tail_start = lead + zero_run;

    ToyImage img;
    img.code = straight_line(lead - 4, rng);
    encode_instruction(Instruction::jmp(static_cast<std::uint16_t>(tail_start)), img.code);
    encode_instruction(Instruction::nop(), img.code);
    img.code.resize(tail_start, 0);
    // a leading OUT keeps the gap from merging with a zero operand
    encode_instruction(Instruction::out(static_cast<std::uint8_t>(rng() | 1)), img.code);
    const Bytes rest = straight_line(size - img.code.size() - 1, rng);
    img.code.insert(img.code.end(), rest.begin(), rest.end());
    img.code.push_back(static_cast<std::uint8_t>(Opcode::Halt));
    return img;
}

ToyDocument infect_document(const ToyDocument& doc, const VirusDefinition& defn)
{
    if (defn.kind != VirusKind::MacroVirus) invalid(defn, "only macro viruses infect documents");
    validate_definition(defn);
    for (const auto& m : doc.macros) {
        if (contains_bytes(as_bytes(m.body), defn.signature)) throw Error(Errc::AlreadyInfected, defn.name);
    }
    if (doc.macros.size() >= 0xff) throw Error(Errc::FieldTooLarge, "document already holds 255 macros");

    const auto taken = [&](const std::string& name) {
        return std::any_of(doc.macros.begin(), doc.macros.end(), [&](const NamedMacro& m) { return m.name == name; });
    };
    const std::string base = defn.name.substr(0, 250);
    std::string name = base;
    for (int n = 2; taken(name); ++n) name = base + "_" + std::to_string(n);

    ToyDocument out = doc;
    out.macros.push_back({name, "REM " + to_string(defn.signature) + "\nCOPYSELF NORMAL\nFORMAT C:\n"});
    return out;
}

}  // namespace viroclave
