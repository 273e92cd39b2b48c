#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/emucleaner.hpp"
#include "viroclave/error.hpp"
#include "viroclave/scanner.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

inline constexpr std::size_t kBootSectorSize = 64;

struct DiskImage {
    std::array<std::uint8_t, kBootSectorSize> boot_sector{};
    Bytes data;

    /// Raw layout: 64 boot-sector bytes, then the data region. Throws Error(BadSectorLength).
    static DiskImage parse(ByteView raw);
    Bytes serialize() const;

    bool operator==(const DiskImage&) const = default;
};

/// Throws Error(BadSectorLength) unless clean_sector is exactly 64 bytes.
DiskImage repair_boot_sector(const DiskImage& disk, ByteView clean_sector);

enum class NetworkMode { Full, RecoveryFiltered, Disconnected };

std::string_view network_mode_name(NetworkMode m) noexcept;

struct SystemState {
    std::optional<std::string> memory_virus;
    std::map<std::string, Bytes> volume;
    std::map<std::string, Bytes> quarantined;  // files moved off the volume by extermination
    bool os_clean = true;
    /// Set while a clean OS fetched from outside is running and extermination
    /// is not finished; resident side effects are ignored meanwhile.
    bool resident_suppressed = false;
    DiskImage disk;
    NetworkMode network_mode = NetworkMode::Full;
};

/// Running a file infected by a memory-resident virus installs it in memory.
/// Throws Error(UnknownFile).
SystemState execute_file(const SystemState& state, const std::string& id, const DefinitionSet& defs,
                         const ScanConfig& config = {});

/// With a resident virus in memory, opening a clean file infects it. Failed
/// infections (already infected, too small, wrong format) leave it unchanged.
/// Throws Error(UnknownFile).
SystemState open_file(const SystemState& state, const std::string& id, const DefinitionSet& defs,
                      const ScanConfig& config = {});

/// Files that do not scan clean.
std::size_t count_infected(const SystemState& state, const DefinitionSet& defs, const ScanConfig& config = {});

struct StepLogEntry {
    int step = 0;
    std::string name;
    std::vector<std::string> details;
};

using StepLog = std::vector<StepLogEntry>;

struct Extermination {
    SystemState state;
    StepLog log;
};

inline constexpr std::array<std::string_view, 4> kExterminationSteps{
    "detect and identify", "clear memory", "restart from clean OS", "exterminate"};

/// Four steps, always logged in order: identify, clear memory, restart from a
/// clean OS, then repair/quarantine/delete every non-clean file per policy.
Extermination exterminate(const SystemState& state, const DefinitionSet& defs, const DispositionPolicy& policy = {},
                          const ScanConfig& config = {});

/// Step 4 alone: files are treated while memory stays infected.
Extermination clean_files_only(const SystemState& state, const DefinitionSet& defs,
                               const DispositionPolicy& policy = {}, const ScanConfig& config = {});

// ---------------------------------------------------------------------------
// Remote recovery through a trusted anti-virus server

enum class RecoveryPhase { Failed, BootedUtility, Connected, RecoveryProgramLoaded, ScanUtilityLoaded, Repaired, Rebooted };

enum class RecoveryEventKind { BootUtility, Connect, DownloadRecoveryProgram, DownloadScanUtility, RunRepair, Reboot };

std::string_view phase_name(RecoveryPhase p) noexcept;
std::string_view event_name(RecoveryEventKind e) noexcept;

struct RecoveryEvent {
    RecoveryEventKind kind = RecoveryEventKind::BootUtility;
    std::string host;  // Connect only

    static RecoveryEvent connect(std::string host) { return {RecoveryEventKind::Connect, std::move(host)}; }
};

struct RecoverySession {
    RecoveryPhase phase = RecoveryPhase::Failed;
    std::string trusted_host;
    NetworkMode network = NetworkMode::RecoveryFiltered;
    std::vector<std::string> log;

    static RecoverySession start(std::string trusted_host);
};

/// The error recovery_step would raise for this event, if any.
std::optional<Errc> recovery_rejection(const RecoverySession& session, const RecoveryEvent& event) noexcept;

/// Advances one phase. Throws Error(UntrustedHostBlocked) for a Connect to any
/// host but the trusted one, Error(OutOfOrderEvent) otherwise out of sequence.
RecoverySession recovery_step(const RecoverySession& session, const RecoveryEvent& event);

/// The only accepted order.
std::vector<RecoveryEvent> canonical_recovery(const std::string& trusted_host);

}  // namespace viroclave
