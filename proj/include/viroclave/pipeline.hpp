#pragma once

// The scan-and-act loop behind the command-line tool, usable without it.

#include "viroclave/emucleaner.hpp"
#include "viroclave/quarantine.hpp"
#include "viroclave/repair.hpp"
#include "viroclave/scanner.hpp"
#include "viroclave/snapshots.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace viroclave {

struct FileReport {
    std::string path;
    FileFormat format = FileFormat::Unknown;
    ScanVerdict verdict;
    Action action = Action::None;
    std::optional<RepairMethod> method;
    std::size_t bytes_before = 0;
    std::size_t bytes_after = 0;
    std::string error;  // non-empty when the file could not be processed
};

struct ReportSummary {
    std::size_t files = 0;
    std::size_t clean = 0;
    std::size_t infected = 0;
    std::size_t suspicious = 0;
    std::size_t repaired = 0;
    std::size_t quarantined = 0;
    std::size_t deleted = 0;
    std::size_t errors = 0;

    void add(const FileReport& r);
    bool operator==(const ReportSummary&) const = default;
};

/// One JSON object with exactly the keys path, format, verdict, action, method.
std::string report_json(const FileReport& r);
std::string summary_json(const ReportSummary& s);
std::string report_text(const FileReport& r);
std::string summary_text(const ReportSummary& s);

struct CleanOptions {
    DispositionPolicy policy;
    bool heuristic = false;
    HeuristicOptions heuristic_options;
    ScanConfig scan;
    /// Fingerprint records keyed by file name; tried after the database recipe.
    std::map<std::string, FingerprintRecord> records;
    /// Quarantine is infeasible without a vault and is skipped in the policy.
    Vault* vault = nullptr;
    UnixTime now = 0;
};

struct CleanDecision {
    ScanVerdict verdict;
    Action action = Action::None;
    std::optional<RepairMethod> method;
    Bytes repaired;  // Action::Repair only
};

/// Pure: scan, try DbRecipe, then the fingerprint record, then (if enabled)
/// heuristic cleaning, and pick an action. A repair only counts if the
/// repaired bytes scan clean.
CleanDecision decide_clean(const std::string& name, ByteView bytes, const DefinitionSet& defs,
                           const CleanOptions& options);

/// Regular files under `root` (or `root` itself), sorted, skipping ".vbin" payloads.
std::vector<std::filesystem::path> collect_files(const std::filesystem::path& root);

FileReport scan_path(const std::filesystem::path& file, const DefinitionSet& defs, const ScanConfig& config = {});

/// Applies the decision on disk: rewrite, move into the vault, or remove.
FileReport clean_path(const std::filesystem::path& file, const DefinitionSet& defs, const CleanOptions& options);

/// Runs `work` on up to `jobs` files at a time and hands results to `emit`
/// in input order, on the calling thread.
void for_each_file(const std::vector<std::filesystem::path>& files, unsigned jobs,
                   const std::function<FileReport(const std::filesystem::path&)>& work,
                   const std::function<void(const FileReport&)>& emit);

}  // namespace viroclave
