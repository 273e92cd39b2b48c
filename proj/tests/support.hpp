#pragma once

#include "viroclave/infectors.hpp"
#include "viroclave/scanner.hpp"
#include "viroclave/toyimage.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

namespace lab {

using namespace viroclave;

// 05 'J' 05 'E' 05 'R' 05 'U' 05 'S' 01 01: OUT x5 then NOP NOP, so the
// infected entry jump lands on code that falls straight through.
inline Bytes jerusalem_signature()
{
    return *from_hex("054a05450552055505530101");
}

inline VirusDefinition jerusalem()
{
    VirusDefinition d;
    d.name = "Jerusalem-toy";
    d.kind = VirusKind::Appender;
    d.body_len = 1873;
    d.prefix_len = 3;
    d.saved_offset = 483;
    d.signature = jerusalem_signature();
    d.memory_resident = true;
    d.triz_tag = "Principle-2 Taking out";
    return d;
}

inline VirusDefinition cavity_virus()
{
    VirusDefinition d;
    d.name = "Hollow-toy";
    d.kind = VirusKind::Cavity;
    d.body_len = 400;
    d.prefix_len = 3;
    d.saved_offset = 100;
    d.signature = *from_hex("0548054f054c054c01010101");
    return d;
}

inline VirusDefinition prepender()
{
    VirusDefinition d;
    d.name = "Front-toy";
    d.kind = VirusKind::Prepender;
    d.body_len = 300;
    d.signature = *from_hex("0546055205540501010101");
    return d;
}

inline VirusDefinition overwriter()
{
    VirusDefinition d;
    d.name = "Vienna-over";
    d.kind = VirusKind::Overwriter;
    d.body_len = 200;
    d.signature = *from_hex("05560549054501010101");
    return d;
}

inline VirusDefinition scrambler()
{
    VirusDefinition d;
    d.name = "Shredder-toy";
    d.kind = VirusKind::ScramblingOverwriter;
    d.body_len = 250;
    d.signature = *from_hex("0553054805520544010101");
    d.dangerous = true;
    return d;
}

inline VirusDefinition concept_macro()
{
    VirusDefinition d;
    d.name = "Concept-macro";
    d.kind = VirusKind::MacroVirus;
    d.signature = to_bytes("CONCEPT-TOY!");
    return d;
}

inline DefinitionSet lab_defs()
{
    return DefinitionSet({jerusalem(), cavity_virus(), prepender(), overwriter(), scrambler(), concept_macro()});
}

inline Bytes random_bytes(std::size_t n, std::mt19937_64& rng)
{
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

/// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("viroclave-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace lab
