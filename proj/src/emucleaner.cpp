#include "viroclave/emucleaner.hpp"

#include <algorithm>
#include <optional>

namespace viroclave {

std::string_view stop_reason_name(StopReason r) noexcept
{
    switch (r) {
    case StopReason::Halted: return "Halted";
    case StopReason::StepBudgetExceeded: return "StepBudgetExceeded";
    case StopReason::EnteredHeadRegion: return "EnteredHeadRegion";
    case StopReason::Crash: return "Crash";
    case StopReason::EscapeAttempt: return "EscapeAttempt";
    }
    return "?";
}

HeuristicError::HeuristicError(StopReason reason, const std::string& what)
    : Error(Errc::HeuristicFailed, std::string(stop_reason_name(reason)) + ": " + what), reason_(reason)
{
}

namespace {

struct Fault {
    StopReason reason;
    CrashKind crash = CrashKind::None;
};

class Machine {
public:
    explicit Machine(const ToyImage& img) { state_ = {img.entry, img.code, 0, {}, false}; }

    /// Addresses at or above `from` count as touched when fetched, read or written.
    void watch(std::size_t from) noexcept
    {
        watch_from_ = from;
        touched_ = false;
    }
    bool touched() const noexcept { return touched_; }

    EmuState& state() noexcept { return state_; }

    std::optional<Fault> step()
    {
        auto& s = state_;
        const std::size_t size = s.memory.size();
        if (s.pc >= size) return Fault{StopReason::Crash, CrashKind::PcOutOfRange};
        const auto ins = try_decode_instruction(s.memory, s.pc);
        if (!ins) return Fault{StopReason::Crash, CrashKind::BadOpcode};
        touch(s.pc, ins->size());
        ++s.steps;

        switch (ins->op) {
        case Opcode::Halt:
            s.halted = true;
            return Fault{StopReason::Halted};
        case Opcode::Nop: break;
        case Opcode::Jmp:
            if (ins->addr >= size) return Fault{StopReason::Crash, CrashKind::BadAddress};
            s.pc = ins->addr;
            return std::nullopt;
        case Opcode::Write:
            if (ins->addr >= size) return Fault{StopReason::EscapeAttempt};
            touch(ins->addr, 1);
            s.memory[ins->addr] = ins->value;
            break;
        case Opcode::Copy: {
            const std::size_t src = ins->addr, dst = ins->dst, len = ins->len;
            if (dst + len > size) return Fault{StopReason::EscapeAttempt};
            if (src + len > size) return Fault{StopReason::Crash, CrashKind::BadAddress};
            touch(src, len);
            touch(dst, len);
            std::copy_n(s.memory.begin() + static_cast<std::ptrdiff_t>(src), len, tmp(len));
            std::copy_n(scratch_.begin(), len, s.memory.begin() + static_cast<std::ptrdiff_t>(dst));
            break;
        }
        case Opcode::Out: s.out_trace.push_back(ins->value); break;
        }
        s.pc += static_cast<std::uint32_t>(ins->size());
        return std::nullopt;
    }

private:
    void touch(std::size_t addr, std::size_t len) noexcept
    {
        if (len != 0 && addr + len > watch_from_) touched_ = true;
    }

    Bytes::iterator tmp(std::size_t len)
    {
        scratch_.resize(len);
        return scratch_.begin();
    }

    EmuState state_;
    Bytes scratch_;
    std::size_t watch_from_ = static_cast<std::size_t>(-1);
    bool touched_ = false;
};

/// head_region 0 disables the head-entry stop.
EmuTrace run(Machine& m, std::uint64_t budget, std::size_t head_region)
{
    EmuTrace trace;
    const std::uint64_t limit = m.state().steps + budget;
    for (;;) {
        if (m.state().steps >= limit) {
            trace.stop = StopReason::StepBudgetExceeded;
            break;
        }
        const bool was_in_head = m.state().pc < head_region;
        if (const auto fault = m.step()) {
            trace.stop = fault->reason;
            trace.crash = fault->crash;
            break;
        }
        if (head_region != 0 && !was_in_head && m.state().pc < head_region) {
            trace.stop = StopReason::EnteredHeadRegion;
            trace.entered_at_step = m.state().steps;
            break;
        }
    }
    trace.state = m.state();
    return trace;
}

}  // namespace

EmuTrace emulate(const ToyImage& img, std::uint64_t budget, std::size_t head_region)
{
    if (budget == 0) throw Error(Errc::InvalidParameters, "emulation budget must be at least 1");
    if (head_region == 0) throw Error(Errc::InvalidParameters, "head region must be at least 1 byte");
    Machine m(img);
    return run(m, budget, head_region);
}

EmuTrace run_program(const ToyImage& img, std::uint64_t budget)
{
    if (budget == 0) throw Error(Errc::InvalidParameters, "emulation budget must be at least 1");
    Machine m(img);
    return run(m, budget, 0);
}

HeuristicResult heuristic_clean(const ToyImage& img, const HeuristicOptions& options)
{
    if (options.budget == 0 || options.head_region == 0) {
        throw Error(Errc::InvalidParameters, "budget and head region must be at least 1");
    }
    const auto head = try_decode_instruction(img.code, 0);
    if (img.entry != 0 || !head || head->op != Opcode::Jmp) {
        throw Error(Errc::NotAJumpEntry, "image does not start executing with a JMP");
    }
    const std::size_t virus_start = head->addr;
    if (virus_start == 0 || virus_start >= img.code.size()) {
        throw Error(Errc::NotAJumpEntry, "entry JMP target " + std::to_string(virus_start) + " is not inside the image");
    }

    Machine m(img);
    HeuristicResult result;
    result.original_len = virus_start;
    result.trace = run(m, options.budget, options.head_region);
    const auto& trace = result.trace;
    switch (trace.stop) {
    case StopReason::EnteredHeadRegion: break;
    case StopReason::StepBudgetExceeded:
        throw HeuristicError(trace.stop, "control never returned to the host within " +
                                             std::to_string(options.budget) + " steps");
    case StopReason::Crash: throw HeuristicError(trace.stop, "virus crashed the emulator at " + std::to_string(trace.state.pc));
    case StopReason::EscapeAttempt:
        throw HeuristicError(trace.stop, "virus tried to write outside the sandbox at " + std::to_string(trace.state.pc));
    case StopReason::Halted: throw HeuristicError(trace.stop, "virus halted without returning to the host");
    }

    const Bytes& memory = trace.state.memory;
    const auto restored = try_decode_instruction(ByteView(memory).first(virus_start), 0);
    if (restored && restored->op == Opcode::Jmp && restored->addr >= virus_start) {
        throw Error(Errc::WrongDestination, "head still jumps to " + std::to_string(restored->addr) +
                                                " after control re-entered it");
    }

    // Let the restored host run on. A host that fetches, reads or writes at or
    // beyond virus_start owns bytes there, so the tail cannot be cut.
    m.watch(virus_start);
    const auto probe = run(m, options.budget, 0);
    const bool host_finished = probe.stop == StopReason::Halted || probe.stop == StopReason::Crash;
    result.truncated = host_finished && !m.touched();

    result.image.entry = 0;
    if (result.truncated) {
        result.image.code.assign(memory.begin(), memory.begin() + static_cast<std::ptrdiff_t>(virus_start));
    } else {
        result.image.code = memory;
    }
    return result;
}

}  // namespace viroclave
