#include "viroclave/syssim.hpp"

#include "viroclave/error.hpp"
#include "viroclave/infectors.hpp"
#include "viroclave/repair.hpp"
#include "viroclave/snapshots.hpp"

#include <algorithm>

namespace viroclave {

DiskImage DiskImage::parse(ByteView raw)
{
    if (raw.size() < kBootSectorSize) {
        throw Error(Errc::BadSectorLength, "disk image has " + std::to_string(raw.size()) + " bytes, boot sector needs 64");
    }
    DiskImage d;
    std::copy_n(raw.begin(), kBootSectorSize, d.boot_sector.begin());
    d.data.assign(raw.begin() + kBootSectorSize, raw.end());
    return d;
}

Bytes DiskImage::serialize() const
{
    Bytes out(boot_sector.begin(), boot_sector.end());
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

DiskImage repair_boot_sector(const DiskImage& disk, ByteView clean_sector)
{
    if (clean_sector.size() != kBootSectorSize) {
        throw Error(Errc::BadSectorLength, "boot sector must be 64 bytes, got " + std::to_string(clean_sector.size()));
    }
    DiskImage out = disk;
    std::copy(clean_sector.begin(), clean_sector.end(), out.boot_sector.begin());
    return out;
}

std::string_view network_mode_name(NetworkMode m) noexcept
{
    switch (m) {
    case NetworkMode::Full: return "full";
    case NetworkMode::RecoveryFiltered: return "filtered";
    case NetworkMode::Disconnected: return "disconnected";
    }
    return "?";
}

namespace {

const Bytes& file_or_throw(const SystemState& state, const std::string& id)
{
    const auto it = state.volume.find(id);
    if (it == state.volume.end()) throw Error(Errc::UnknownFile, id);
    return it->second;
}

/// Repaired bytes that scan clean, or nullopt. Heuristic cleaning is tried for
/// executables nobody has a definition for.
std::optional<Bytes> try_repair(const Bytes& bytes, const ScanVerdict& verdict, const DefinitionSet& defs,
                                const ScanConfig& config)
{
    try {
        if (verdict.is_infected() && verdict.repairable) {
            auto repaired = repair_file(bytes, defs, config).repaired;
            if (scan_file(repaired, defs, config).is_clean()) return repaired;
        } else if (verdict.is_suspicious() && detect_format(bytes) == FileFormat::Executable) {
            const auto result = heuristic_clean(parse_executable(bytes));
            if (result.truncated) {
                auto repaired = serialize_executable(result.image);
                if (scan_file(repaired, defs, config).is_clean()) return repaired;
            }
        }
    } catch (const Error&) {
    }
    return std::nullopt;
}

StepLogEntry treat_files(SystemState& state, const DefinitionSet& defs, const DispositionPolicy& policy,
                         const ScanConfig& config)
{
    StepLogEntry entry{4, std::string(kExterminationSteps[3]), {}};
    for (auto it = state.volume.begin(); it != state.volume.end();) {
        const auto& [id, bytes] = *it;
        const auto verdict = scan_file(bytes, defs, config);
        if (verdict.is_clean()) {
            ++it;
            continue;
        }
        auto repaired = try_repair(bytes, verdict, defs, config);
        const auto action = dispose(verdict, repaired.has_value(), policy);
        entry.details.push_back(id + ": " + verdict.describe() + " -> " + std::string(action_name(action)));
        switch (action) {
        case Action::Repair:
            it->second = std::move(*repaired);
            ++it;
            break;
        case Action::Quarantine:
            state.quarantined.insert_or_assign(id, bytes);
            it = state.volume.erase(it);
            break;
        case Action::Delete: it = state.volume.erase(it); break;
        case Action::None: ++it; break;
        }
    }
    return entry;
}

}  // namespace

SystemState execute_file(const SystemState& state, const std::string& id, const DefinitionSet& defs,
                         const ScanConfig& config)
{
    const auto& bytes = file_or_throw(state, id);
    SystemState next = state;
    if (state.resident_suppressed) return next;
    const auto verdict = scan_file(bytes, defs, config);
    if (!verdict.is_infected()) return next;
    const auto* defn = defs.find(verdict.virus);
    if (defn && defn->memory_resident && !next.memory_virus) {
        next.memory_virus = defn->name;
        next.os_clean = false;
    }
    return next;
}

SystemState open_file(const SystemState& state, const std::string& id, const DefinitionSet& defs,
                      const ScanConfig& config)
{
    const auto& bytes = file_or_throw(state, id);
    SystemState next = state;
    if (!state.memory_virus || state.resident_suppressed) return next;
    const auto* defn = defs.find(*state.memory_virus);
    if (!defn || scan_file(bytes, defs, config).is_infected()) return next;

    try {
        switch (detect_format(bytes)) {
        case FileFormat::Executable:
            if (defn->kind != VirusKind::MacroVirus) {
                const auto seed = fingerprint(as_bytes(id));
                next.volume[id] = serialize_executable(infect(parse_executable(bytes), *defn, seed).image);
            }
            break;
        case FileFormat::Document:
            if (defn->kind == VirusKind::MacroVirus) {
                next.volume[id] = serialize_document(infect_document(parse_document(bytes), *defn));
            }
            break;
        case FileFormat::Email:
        case FileFormat::Unknown: break;
        }
    } catch (const Error&) {
        // AlreadyInfected, TooSmallToInfect, NoCavityFound, ...: the file stays as it was
    }
    return next;
}

std::size_t count_infected(const SystemState& state, const DefinitionSet& defs, const ScanConfig& config)
{
    return static_cast<std::size_t>(std::count_if(state.volume.begin(), state.volume.end(), [&](const auto& kv) {
        return !scan_file(kv.second, defs, config).is_clean();
    }));
}

Extermination exterminate(const SystemState& state, const DefinitionSet& defs, const DispositionPolicy& policy,
                          const ScanConfig& config)
{
    Extermination out{state, {}};
    SystemState& s = out.state;

    StepLogEntry identify{1, std::string(kExterminationSteps[0]), {}};
    identify.details.push_back("memory: " + s.memory_virus.value_or("none"));
    for (const auto& [id, bytes] : s.volume) {
        const auto verdict = scan_file(bytes, defs, config);
        if (!verdict.is_clean()) identify.details.push_back(id + ": " + verdict.describe());
    }
    out.log.push_back(std::move(identify));

    StepLogEntry clear{2, std::string(kExterminationSteps[1]), {}};
    if (s.memory_virus) clear.details.push_back("removed " + *s.memory_virus);
    s.memory_virus.reset();
    out.log.push_back(std::move(clear));

    s.os_clean = true;
    s.resident_suppressed = true;
    out.log.push_back({3, std::string(kExterminationSteps[2]), {"clean operating system loaded from outside"}});

    out.log.push_back(treat_files(s, defs, policy, config));
    s.resident_suppressed = false;
    return out;
}

Extermination clean_files_only(const SystemState& state, const DefinitionSet& defs, const DispositionPolicy& policy,
                               const ScanConfig& config)
{
    Extermination out{state, {}};
    out.log.push_back(treat_files(out.state, defs, policy, config));
    return out;
}

// ---------------------------------------------------------------------------

std::string_view phase_name(RecoveryPhase p) noexcept
{
    switch (p) {
    case RecoveryPhase::Failed: return "Failed";
    case RecoveryPhase::BootedUtility: return "BootedUtility";
    case RecoveryPhase::Connected: return "Connected";
    case RecoveryPhase::RecoveryProgramLoaded: return "RecoveryProgramLoaded";
    case RecoveryPhase::ScanUtilityLoaded: return "ScanUtilityLoaded";
    case RecoveryPhase::Repaired: return "Repaired";
    case RecoveryPhase::Rebooted: return "Rebooted";
    }
    return "?";
}

std::string_view event_name(RecoveryEventKind e) noexcept
{
    switch (e) {
    case RecoveryEventKind::BootUtility: return "BootUtility";
    case RecoveryEventKind::Connect: return "Connect";
    case RecoveryEventKind::DownloadRecoveryProgram: return "DownloadRecoveryProgram";
    case RecoveryEventKind::DownloadScanUtility: return "DownloadScanUtility";
    case RecoveryEventKind::RunRepair: return "RunRepair";
    case RecoveryEventKind::Reboot: return "Reboot";
    }
    return "?";
}

RecoverySession RecoverySession::start(std::string trusted_host)
{
    RecoverySession s;
    s.trusted_host = std::move(trusted_host);
    return s;
}

std::optional<Errc> recovery_rejection(const RecoverySession& session, const RecoveryEvent& event) noexcept
{
    if (session.phase == RecoveryPhase::Rebooted) return Errc::OutOfOrderEvent;
    if (event.kind == RecoveryEventKind::Connect && event.host != session.trusted_host) {
        return Errc::UntrustedHostBlocked;
    }
    // Phase i accepts event i and moves to phase i+1.
    if (event.kind != static_cast<RecoveryEventKind>(static_cast<int>(session.phase))) return Errc::OutOfOrderEvent;
    return std::nullopt;
}

RecoverySession recovery_step(const RecoverySession& session, const RecoveryEvent& event)
{
    const auto at = static_cast<int>(session.phase);
    if (const auto why = recovery_rejection(session, event)) {
        if (*why == Errc::UntrustedHostBlocked) throw Error(*why, event.host);
        if (session.phase == RecoveryPhase::Rebooted) {
            throw Error(*why, "expected nothing (session complete), got " + std::string(event_name(event.kind)));
        }
        throw Error(*why, "expected " + std::string(event_name(static_cast<RecoveryEventKind>(at))) + ", got " +
                              std::string(event_name(event.kind)));
    }

    RecoverySession next = session;
    next.phase = static_cast<RecoveryPhase>(at + 1);
    next.network = next.phase == RecoveryPhase::Rebooted ? NetworkMode::Full : NetworkMode::RecoveryFiltered;
    std::string line(event_name(event.kind));
    if (event.kind == RecoveryEventKind::Connect) line += " " + event.host;
    next.log.push_back(line + " -> " + std::string(phase_name(next.phase)));
    return next;
}

std::vector<RecoveryEvent> canonical_recovery(const std::string& trusted_host)
{
    return {{RecoveryEventKind::BootUtility, {}},
            RecoveryEvent::connect(trusted_host),
            {RecoveryEventKind::DownloadRecoveryProgram, {}},
            {RecoveryEventKind::DownloadScanUtility, {}},
            {RecoveryEventKind::RunRepair, {}},
            {RecoveryEventKind::Reboot, {}}};
}

}  // namespace viroclave
