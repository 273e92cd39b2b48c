#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/infectors.hpp"
#include "viroclave/toyimage.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

/// Ordered, name-unique collection of definitions. Scans report the first
/// definition (in load order) whose signature matches.
class DefinitionSet {
public:
    DefinitionSet() = default;
    explicit DefinitionSet(std::vector<VirusDefinition> defs);

    /// Throws Error(DuplicateName) or Error(InvalidParameters).
    void add(VirusDefinition defn);

    const VirusDefinition* find(std::string_view name) const noexcept;
    const std::vector<VirusDefinition>& all() const noexcept { return defs_; }
    std::size_t size() const noexcept { return defs_.size(); }
    bool empty() const noexcept { return defs_.empty(); }

    auto begin() const noexcept { return defs_.begin(); }
    auto end() const noexcept { return defs_.end(); }

private:
    std::vector<VirusDefinition> defs_;
};

/// Line format: name|kind|body_len|prefix_len|saved_offset|signature_hex|memory_resident|dangerous|triz_tag
/// '#' starts a comment line; blank lines are skipped. body_len "-" means unknown.
DefinitionSet load_definitions(std::string_view text);
DefinitionSet load_definitions_file(const std::filesystem::path& path);
std::string format_definition(const VirusDefinition& defn);
std::string format_definitions(const DefinitionSet& defs);

enum class VerdictStatus { Clean, Infected, Suspicious };

struct ScanVerdict {
    VerdictStatus status = VerdictStatus::Clean;
    std::string virus;   // Infected only
    bool repairable = false;
    bool dangerous = false;
    std::string reason;  // Suspicious only

    static ScanVerdict clean() { return {}; }
    static ScanVerdict infected(const VirusDefinition& defn);
    static ScanVerdict suspicious(std::string why);

    bool is_clean() const noexcept { return status == VerdictStatus::Clean; }
    bool is_infected() const noexcept { return status == VerdictStatus::Infected; }
    bool is_suspicious() const noexcept { return status == VerdictStatus::Suspicious; }

    /// "clean", "infected:<name>" or "suspicious:<reason>".
    std::string describe() const;

    bool operator==(const ScanVerdict&) const = default;
};

struct ScanConfig {
    /// Suspicious when the code starts with JMP t and t > threshold * code_len.
    double jump_threshold = 0.5;
    std::vector<std::string> suspicious_words{"FORMAT", "DELETE", "COPYSELF", "OVERWRITE"};
};

/// Signature scan over raw bytes, then the entry-jump heuristic if the bytes
/// parse as a TXE1 image.
ScanVerdict scan_bytes(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config = {});
ScanVerdict scan_document(const ToyDocument& doc, const DefinitionSet& defs, const ScanConfig& config = {});
/// Dispatches on the file magic: documents are decoded, emails are scanned
/// attachment by attachment, everything else goes through scan_bytes.
ScanVerdict scan_file(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config = {});

/// The matching suspicious word if the line's first word is one (case-insensitive).
std::optional<std::string> suspicious_instruction(std::string_view line, const ScanConfig& config);

enum class Action { None, Repair, Quarantine, Delete };

std::string_view action_name(Action a) noexcept;

struct DispositionPolicy {
    std::vector<Action> order{Action::Repair, Action::Quarantine, Action::Delete};
    /// Walked instead of `order` for dangerous verdicts; Repair is never taken there.
    std::vector<Action> dangerous_order{Action::Delete, Action::Quarantine};

    /// Parses "repair,quarantine,delete". Throws Error(InvalidParameters).
    static DispositionPolicy parse(std::string_view order, std::string_view dangerous_order = "delete,quarantine");
    void validate() const;
};

/// First feasible action in policy order; Action::None for clean verdicts or
/// when the policy runs out of feasible actions.
Action dispose(const ScanVerdict& verdict, bool can_repair, const DispositionPolicy& policy);

}  // namespace viroclave
