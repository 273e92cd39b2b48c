#include "viroclave/repair.hpp"

#include "viroclave/error.hpp"

#include <algorithm>

namespace viroclave {

std::string_view method_name(RepairMethod m) noexcept
{
    switch (m) {
    case RepairMethod::DbRecipe: return "DbRecipe";
    case RepairMethod::MacroTreatment: return "MacroTreatment";
    case RepairMethod::EmailPipeline: return "EmailPipeline";
    case RepairMethod::Heuristic: return "Heuristic";
    case RepairMethod::Fingerprint: return "Fingerprint";
    }
    return "-";
}

std::string_view attachment_action_name(AttachmentAction a) noexcept
{
    switch (a) {
    case AttachmentAction::Kept: return "Kept";
    case AttachmentAction::Repaired: return "Repaired";
    case AttachmentAction::Deleted: return "Deleted";
    case AttachmentAction::Untreated: return "Untreated";
    }
    return "Kept";
}

namespace {

[[noreturn]] void inconsistent(const VirusDefinition& defn, const std::string& why)
{
    throw Error(Errc::InconsistentInfection, defn.name + ": " + why);
}

}  // namespace

ToyImage repair_executable(const ToyImage& img, const VirusDefinition& defn)
{
    if (!is_repairable_kind(defn.kind)) {
        throw Error(Errc::IrreparableKind, defn.name + " (" + std::string(kind_name(defn.kind)) +
                                               ") destroys host bytes");
    }
    if (defn.kind == VirusKind::MacroVirus) {
        throw Error(Errc::InvalidParameters, defn.name + " is a macro virus; use correct_document");
    }
    const auto hit = find_bytes(img.code, defn.signature);
    if (!hit) throw Error(Errc::NotInfected, "signature of " + defn.name + " not found");
    if (!defn.body_len) throw Error(Errc::UnknownLength, defn.name + " has no recorded body length");

    const std::size_t body_start = *hit;
    const std::size_t body_len = *defn.body_len;
    const std::size_t size = img.code.size();
    const auto& code = img.code;
    ToyImage out;

    const auto saved_prefix = [&]() {
        const std::size_t from = body_start + defn.saved_offset;
        if (from + defn.prefix_len > size) inconsistent(defn, "saved bytes lie past the end of the image");
        return ByteView(code).subspan(from, defn.prefix_len);
    };

    switch (defn.kind) {
    case VirusKind::Appender: {
        if (size < body_len + defn.prefix_len) inconsistent(defn, "image shorter than virus body plus prefix");
        const auto saved = saved_prefix();
        out.code.assign(code.begin(), code.end() - static_cast<std::ptrdiff_t>(body_len));
        std::copy(saved.begin(), saved.end(), out.code.begin());
        break;
    }
    case VirusKind::Prepender:
        if (size <= body_len) inconsistent(defn, "image not longer than the virus body");
        out.code.assign(code.begin() + static_cast<std::ptrdiff_t>(body_len), code.end());
        break;
    case VirusKind::Cavity: {
        if (body_start + body_len > size) inconsistent(defn, "cavity runs past the end of the image");
        if (body_start < defn.prefix_len) inconsistent(defn, "cavity overlaps the hijacked head");
        const auto saved = saved_prefix();
        out.code = code;
        std::copy(saved.begin(), saved.end(), out.code.begin());
        std::fill_n(out.code.begin() + static_cast<std::ptrdiff_t>(body_start), body_len, std::uint8_t{0});
        break;
    }
    case VirusKind::Overwriter:
    case VirusKind::ScramblingOverwriter:
    case VirusKind::MacroVirus: break;
    }
    return out;
}

NamedMacro treat_macro(const NamedMacro& macro, const DefinitionSet& defs, const ScanConfig& config)
{
    NamedMacro out{macro.name, {}};
    std::string_view body = macro.body;
    while (!body.empty()) {
        const auto nl = body.find('\n');
        const auto line_with_end = body.substr(0, nl == std::string_view::npos ? nl : nl + 1);
        const auto line = body.substr(0, nl);
        body.remove_prefix(line_with_end.size());

        const bool has_signature = std::any_of(defs.begin(), defs.end(), [&](const VirusDefinition& d) {
            return contains_bytes(as_bytes(line), d.signature);
        });
        if (has_signature || suspicious_instruction(line, config)) continue;
        out.body.append(line_with_end);
    }
    return out;
}

ToyDocument correct_document(const ToyDocument& doc, const DefinitionSet& defs, const ScanConfig& config)
{
    ToyDocument out{doc.text, {}};
    out.macros.reserve(doc.macros.size());
    for (const auto& m : doc.macros) out.macros.push_back(treat_macro(m, defs, config));
    return out;
}

namespace {

std::vector<Action> without_quarantine(std::vector<Action> order)
{
    std::erase(order, Action::Quarantine);
    if (order.empty()) order.push_back(Action::Delete);
    return order;
}

}  // namespace

EmailDisinfection disinfect_email(const ToyEmail& email, const DefinitionSet& defs,
                                  const DispositionPolicy& policy, const ScanConfig& config)
{
    DispositionPolicy in_message;
    in_message.order = without_quarantine(policy.order);
    in_message.dangerous_order = without_quarantine(policy.dangerous_order);

    EmailDisinfection result{{email.headers, email.body, {}}, {}};
    for (const auto& att : email.attachments) {
        AttachmentReport report{att.name, scan_file(att.data, defs, config), AttachmentAction::Kept};
        if (report.verdict.is_clean()) {
            result.email.attachments.push_back(att);
            result.reports.push_back(std::move(report));
            continue;
        }

        std::optional<Bytes> repaired;
        if (report.verdict.is_infected() && report.verdict.repairable) {
            try {
                auto outcome = repair_file(att.data, defs, config);
                if (scan_file(outcome.repaired, defs, config).is_clean()) repaired = std::move(outcome.repaired);
            } catch (const Error&) {
            }
        }

        switch (dispose(report.verdict, repaired.has_value(), in_message)) {
        case Action::Repair:
            result.email.attachments.push_back({att.name, std::move(*repaired)});
            report.action = AttachmentAction::Repaired;
            break;
        case Action::Delete:
        case Action::Quarantine: report.action = AttachmentAction::Deleted; break;
        case Action::None:
            result.email.attachments.push_back(att);
            report.action = AttachmentAction::Untreated;
            break;
        }
        result.reports.push_back(std::move(report));
    }
    return result;
}

RepairOutcome repair_file(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config)
{
    switch (detect_format(bytes)) {
    case FileFormat::Document: {
        const auto doc = parse_document(bytes);
        const auto verdict = scan_document(doc, defs, config);
        const auto fixed = correct_document(doc, defs, config);
        if (fixed == doc) throw Error(Errc::NotInfected, "no macro needed treatment");
        return {serialize_document(fixed), RepairMethod::MacroTreatment, verdict.virus};
    }
    case FileFormat::Email: {
        const auto email = parse_email(bytes);
        auto cleaned = disinfect_email(email, defs, {}, config);
        if (cleaned.email == email) throw Error(Errc::NotInfected, "no attachment needed treatment");
        std::string removed;
        for (const auto& r : cleaned.reports) {
            if (r.verdict.is_infected()) {
                removed = r.verdict.virus;
                break;
            }
        }
        return {serialize_email(cleaned.email), RepairMethod::EmailPipeline, removed};
    }
    case FileFormat::Executable:
    case FileFormat::Unknown: break;
    }

    const auto verdict = scan_bytes(bytes, defs, config);
    if (!verdict.is_infected()) throw Error(Errc::NotInfected, "no definition matches");
    const auto* defn = defs.find(verdict.virus);
    const auto img = parse_executable(bytes);
    return {serialize_executable(repair_executable(img, *defn)), RepairMethod::DbRecipe, defn->name};
}

}  // namespace viroclave
