#include "viroclave/scanner.hpp"

#include "viroclave/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace viroclave {

DefinitionSet::DefinitionSet(std::vector<VirusDefinition> defs)
{
    for (auto& d : defs) add(std::move(d));
}

void DefinitionSet::add(VirusDefinition defn)
{
    validate_definition(defn);
    if (find(defn.name)) throw Error(Errc::DuplicateName, defn.name);
    defs_.push_back(std::move(defn));
}

const VirusDefinition* DefinitionSet::find(std::string_view name) const noexcept
{
    const auto it = std::find_if(defs_.begin(), defs_.end(), [&](const VirusDefinition& d) { return d.name == name; });
    return it == defs_.end() ? nullptr : &*it;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::size_t parse_count(std::string_view field, std::size_t line, const char* what)
{
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size() || field.empty()) {
        throw ParseError(line, std::string(what) + " is not a number: \"" + std::string(field) + "\"");
    }
    return v;
}

bool parse_flag(std::string_view field, std::size_t line, const char* what)
{
    const auto f = lower(field);
    if (f == "1" || f == "true" || f == "yes") return true;
    if (f == "0" || f == "false" || f == "no") return false;
    throw ParseError(line, std::string(what) + " must be a boolean: \"" + std::string(field) + "\"");
}

VirusDefinition parse_line(std::string_view text, std::size_t line)
{
    std::vector<std::string_view> fields;
    for (std::size_t pos = 0;;) {
        const auto bar = text.find('|', pos);
        fields.push_back(trim(text.substr(pos, bar == std::string_view::npos ? bar : bar - pos)));
        if (bar == std::string_view::npos) break;
        pos = bar + 1;
    }
    if (fields.size() != 9) {
        throw ParseError(line, "expected 9 '|'-separated fields, got " + std::to_string(fields.size()));
    }

    VirusDefinition d;
    d.name = std::string(fields[0]);
    if (d.name.empty()) throw ParseError(line, "empty name");
    const auto kind = parse_kind(fields[1]);
    if (!kind) throw ParseError(line, "unknown kind \"" + std::string(fields[1]) + "\"");
    d.kind = *kind;
    if (fields[2] != "-" && fields[2] != "?") d.body_len = parse_count(fields[2], line, "body_len");
    d.prefix_len = parse_count(fields[3], line, "prefix_len");
    d.saved_offset = fields[4] == "-" ? 0 : parse_count(fields[4], line, "saved_offset");
    auto sig = from_hex(fields[5]);
    if (!sig || sig->empty()) throw ParseError(line, "bad signature hex");
    d.signature = std::move(*sig);
    d.memory_resident = parse_flag(fields[6], line, "memory_resident");
    d.dangerous = parse_flag(fields[7], line, "dangerous");
    d.triz_tag = std::string(fields[8]);
    try {
        validate_definition(d);
    } catch (const Error& e) {
        throw ParseError(line, e.what());
    }
    return d;
}

}  // namespace

DefinitionSet load_definitions(std::string_view text)
{
    DefinitionSet set;
    std::size_t line_no = 0;
    for (std::size_t pos = 0; pos <= text.size();) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        const auto line = trim(raw);
        if (!line.empty() && line.front() != '#') {
            auto defn = parse_line(line, line_no);
            if (set.find(defn.name)) throw Error(Errc::DuplicateName, defn.name + " (line " + std::to_string(line_no) + ")");
            set.add(std::move(defn));
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return set;
}

DefinitionSet load_definitions_file(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    return load_definitions(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string format_definition(const VirusDefinition& d)
{
    std::ostringstream out;
    out << d.name << '|' << kind_name(d.kind) << '|' << (d.body_len ? std::to_string(*d.body_len) : "-") << '|'
        << d.prefix_len << '|' << d.saved_offset << '|' << to_hex(d.signature) << '|' << (d.memory_resident ? 1 : 0)
        << '|' << (d.dangerous ? 1 : 0) << '|' << d.triz_tag;
    return out.str();
}

std::string format_definitions(const DefinitionSet& defs)
{
    std::string out = "# name|kind|body_len|prefix_len|saved_offset|signature_hex|memory_resident|dangerous|triz_tag\n";
    for (const auto& d : defs) out += format_definition(d) + "\n";
    return out;
}

// ---------------------------------------------------------------------------

ScanVerdict ScanVerdict::infected(const VirusDefinition& defn)
{
    ScanVerdict v;
    v.status = VerdictStatus::Infected;
    v.virus = defn.name;
    v.repairable = is_repairable_kind(defn.kind);
    v.dangerous = defn.dangerous;
    return v;
}

ScanVerdict ScanVerdict::suspicious(std::string why)
{
    ScanVerdict v;
    v.status = VerdictStatus::Suspicious;
    v.repairable = true;
    v.reason = std::move(why);
    return v;
}

std::string ScanVerdict::describe() const
{
    switch (status) {
    case VerdictStatus::Clean: return "clean";
    case VerdictStatus::Infected: return "infected:" + virus;
    case VerdictStatus::Suspicious: return "suspicious:" + reason;
    }
    return "clean";
}

namespace {

const VirusDefinition* first_signature_match(ByteView bytes, const DefinitionSet& defs)
{
    for (const auto& d : defs) {
        if (contains_bytes(bytes, d.signature)) return &d;
    }
    return nullptr;
}

/// Infected beats Suspicious beats Clean; earlier wins within a class.
void keep_worst(ScanVerdict& acc, ScanVerdict next)
{
    const auto rank = [](const ScanVerdict& v) {
        return v.is_infected() ? 2 : v.is_suspicious() ? 1 : 0;
    };
    if (rank(next) > rank(acc)) acc = std::move(next);
}

}  // namespace

ScanVerdict scan_bytes(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config)
{
    if (const auto* d = first_signature_match(bytes, defs)) return ScanVerdict::infected(*d);

    if (detect_format(bytes) != FileFormat::Executable) return ScanVerdict::clean();
    try {
        const auto img = parse_executable(bytes);
        const auto head = try_decode_instruction(img.code, 0);
        if (head && head->op == Opcode::Jmp &&
            static_cast<double>(head->addr) > config.jump_threshold * static_cast<double>(img.code.size())) {
            return ScanVerdict::suspicious("entry jump into file tail");
        }
    } catch (const Error&) {
        // unparseable: signature verdict stands
    }
    return ScanVerdict::clean();
}

std::optional<std::string> suspicious_instruction(std::string_view line, const ScanConfig& config)
{
    line = trim(line);
    const auto word = line.substr(0, std::min(line.size(), line.find_first_of(" \t\r")));
    if (word.empty()) return std::nullopt;
    const auto w = lower(word);
    for (const auto& s : config.suspicious_words) {
        if (lower(s) == w) return s;
    }
    return std::nullopt;
}

ScanVerdict scan_document(const ToyDocument& doc, const DefinitionSet& defs, const ScanConfig& config)
{
    ScanVerdict verdict;
    for (const auto& m : doc.macros) {
        if (const auto* d = first_signature_match(as_bytes(m.body), defs)) {
            keep_worst(verdict, ScanVerdict::infected(*d));
            break;
        }
        if (!verdict.is_clean()) continue;
        std::string_view body = m.body;
        while (!body.empty()) {
            const auto nl = body.find('\n');
            if (auto word = suspicious_instruction(body.substr(0, nl), config)) {
                verdict = ScanVerdict::suspicious("suspect macro instruction: " + *word);
                break;
            }
            body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
        }
    }
    return verdict;
}

ScanVerdict scan_file(ByteView bytes, const DefinitionSet& defs, const ScanConfig& config)
{
    switch (detect_format(bytes)) {
    case FileFormat::Document:
        try {
            return scan_document(parse_document(bytes), defs, config);
        } catch (const Error&) {
            return scan_bytes(bytes, defs, config);
        }
    case FileFormat::Email:
        try {
            const auto email = parse_email(bytes);
            ScanVerdict verdict = scan_bytes(as_bytes(email.headers + email.body), defs, config);
            for (const auto& a : email.attachments) {
                if (verdict.is_infected()) break;
                keep_worst(verdict, scan_file(a.data, defs, config));
            }
            return verdict;
        } catch (const Error&) {
            return scan_bytes(bytes, defs, config);
        }
    case FileFormat::Executable:
    case FileFormat::Unknown: break;
    }
    return scan_bytes(bytes, defs, config);
}

// ---------------------------------------------------------------------------

std::string_view action_name(Action a) noexcept
{
    switch (a) {
    case Action::None: return "none";
    case Action::Repair: return "repair";
    case Action::Quarantine: return "quarantine";
    case Action::Delete: return "delete";
    }
    return "none";
}

namespace {

std::vector<Action> parse_actions(std::string_view text)
{
    std::vector<Action> out;
    for (std::size_t pos = 0;;) {
        const auto comma = text.find(',', pos);
        const auto item = lower(trim(text.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
        if (item == "repair") out.push_back(Action::Repair);
        else if (item == "quarantine") out.push_back(Action::Quarantine);
        else if (item == "delete") out.push_back(Action::Delete);
        else throw Error(Errc::InvalidParameters, "unknown policy action \"" + item + "\"");
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

void validate_order(const std::vector<Action>& order, const char* what)
{
    if (order.empty()) throw Error(Errc::InvalidParameters, std::string(what) + " is empty");
    std::set<Action> seen;
    for (auto a : order) {
        if (a == Action::None) throw Error(Errc::InvalidParameters, std::string(what) + " lists 'none'");
        if (!seen.insert(a).second) {
            throw Error(Errc::InvalidParameters, std::string(what) + " repeats " + std::string(action_name(a)));
        }
    }
}

}  // namespace

DispositionPolicy DispositionPolicy::parse(std::string_view order, std::string_view dangerous_order)
{
    DispositionPolicy p;
    p.order = parse_actions(order);
    p.dangerous_order = parse_actions(dangerous_order);
    p.validate();
    return p;
}

void DispositionPolicy::validate() const
{
    validate_order(order, "policy");
    validate_order(dangerous_order, "dangerous policy");
}

Action dispose(const ScanVerdict& verdict, bool can_repair, const DispositionPolicy& policy)
{
    if (verdict.is_clean()) return Action::None;
    const auto& order = verdict.dangerous ? policy.dangerous_order : policy.order;
    for (auto a : order) {
        switch (a) {
        case Action::Repair:
            if (can_repair && verdict.repairable && !verdict.dangerous) return a;
            break;
        case Action::Quarantine:
        case Action::Delete: return a;
        case Action::None: break;
        }
    }
    return Action::None;
}

}  // namespace viroclave
