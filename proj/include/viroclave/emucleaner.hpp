#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/error.hpp"
#include "viroclave/toyimage.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace viroclave {

enum class StopReason { Halted, StepBudgetExceeded, EnteredHeadRegion, Crash, EscapeAttempt };

enum class CrashKind { None, BadOpcode, BadAddress, PcOutOfRange };

std::string_view stop_reason_name(StopReason r) noexcept;

struct EmuState {
    std::uint32_t pc = 0;
    Bytes memory;  // private copy of the code; never resized
    std::uint64_t steps = 0;
    Bytes out_trace;
    bool halted = false;
};

struct EmuTrace {
    EmuState state;
    StopReason stop = StopReason::Halted;
    std::uint64_t entered_at_step = 0;  // EnteredHeadRegion only
    CrashKind crash = CrashKind::None;  // Crash only
};

inline constexpr std::uint64_t kDefaultBudget = 10'000;
inline constexpr std::size_t kDefaultHeadRegion = 8;

/// Runs from img.entry inside a sandbox copy. Stops on HALT, after `budget`
/// steps, on a crash (bad opcode, out-of-range jump/read, pc past the end), on
/// a write outside memory, or when pc moves from outside [0, head_region)
/// into it. Throws Error(InvalidParameters) if budget or head_region is 0.
EmuTrace emulate(const ToyImage& img, std::uint64_t budget, std::size_t head_region);

/// Same machine without the head-region stop; used to compare OUT traces.
EmuTrace run_program(const ToyImage& img, std::uint64_t budget = kDefaultBudget);

struct HeuristicOptions {
    std::uint64_t budget = kDefaultBudget;
    std::size_t head_region = kDefaultHeadRegion;
};

struct HeuristicResult {
    ToyImage image;
    std::size_t original_len = 0;
    /// True when the viral tail was cut off. False means the head was restored
    /// but the host was seen using bytes at or past the inferred virus start
    /// (or did not finish within budget), so the image keeps its full length
    /// and must not be treated as a finished repair.
    bool truncated = false;
    EmuTrace trace;
};

/// HeuristicFailed carrying the emulator stop reason.
class HeuristicError : public Error {
public:
    HeuristicError(StopReason reason, const std::string& what);

    StopReason reason() const noexcept { return reason_; }

private:
    StopReason reason_;
};

/// Definition-free cleaning: let the viral preamble restore the head, stop when
/// control comes back to it, keep memory[0, jump target). Throws
/// Error(NotAJumpEntry), HeuristicError or Error(WrongDestination).
HeuristicResult heuristic_clean(const ToyImage& img, const HeuristicOptions& options = {});

}  // namespace viroclave
