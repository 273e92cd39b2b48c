#pragma once

#include "viroclave/bytes.hpp"
#include "viroclave/infectors.hpp"
#include "viroclave/scanner.hpp"
#include "viroclave/toyimage.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace viroclave {

enum class RepairMethod { DbRecipe, MacroTreatment, EmailPipeline, Heuristic, Fingerprint };

std::string_view method_name(RepairMethod m) noexcept;

struct RepairOutcome {
    Bytes repaired;
    RepairMethod method = RepairMethod::DbRecipe;
    std::string removed_virus;
};

/// Undo an Appender, Prepender or Cavity infection using the recipe carried by
/// the definition. The virus body is located by the first signature hit.
///
/// Throws Error(IrreparableKind) for overwriting kinds, Error(NotInfected) when
/// the signature is absent, Error(UnknownLength) when the definition has no
/// body length, and Error(InconsistentInfection) when the recipe would read or
/// cut outside the image.
ToyImage repair_executable(const ToyImage& img, const VirusDefinition& defn);

/// Drops every line that carries a known signature or starts with a
/// suspicious instruction word. Surviving lines keep their order and bytes.
NamedMacro treat_macro(const NamedMacro& macro, const DefinitionSet& defs, const ScanConfig& config = {});

/// Every macro replaced by its treated version; macros emptied by treatment stay in place.
ToyDocument correct_document(const ToyDocument& doc, const DefinitionSet& defs, const ScanConfig& config = {});

enum class AttachmentAction { Kept, Repaired, Deleted, Untreated };

std::string_view attachment_action_name(AttachmentAction a) noexcept;

struct AttachmentReport {
    std::string name;
    ScanVerdict verdict;
    AttachmentAction action = AttachmentAction::Kept;
};

struct EmailDisinfection {
    ToyEmail email;
    std::vector<AttachmentReport> reports;
};

/// Detach, scan, repair-or-drop, reattach. Quarantine has no meaning inside a
/// message, so it is skipped in the policy; headers and body are untouched.
EmailDisinfection disinfect_email(const ToyEmail& email, const DefinitionSet& defs,
                                  const DispositionPolicy& policy = {}, const ScanConfig& config = {});

/// Database-driven repair of a whole file of any toy format. Throws
/// Error(NotInfected) when no definition matches (or nothing changed).
RepairOutcome repair_file(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config = {});

}  // namespace viroclave
