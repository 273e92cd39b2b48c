#include "viroclave/pipeline.hpp"

#include "viroclave/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <deque>
#include <future>
#include <sstream>

namespace viroclave {

void ReportSummary::add(const FileReport& r)
{
    ++files;
    if (!r.error.empty()) {
        ++errors;
        return;
    }
    switch (r.verdict.status) {
    case VerdictStatus::Clean: ++clean; break;
    case VerdictStatus::Infected: ++infected; break;
    case VerdictStatus::Suspicious: ++suspicious; break;
    }
    switch (r.action) {
    case Action::Repair: ++repaired; break;
    case Action::Quarantine: ++quarantined; break;
    case Action::Delete: ++deleted; break;
    case Action::None: break;
    }
}

namespace {

std::string method_text(const FileReport& r)
{
    return r.method ? std::string(method_name(*r.method)) : "-";
}

std::string verdict_text(const FileReport& r)
{
    return r.error.empty() ? r.verdict.describe() : "error:" + r.error;
}

}  // namespace

std::string report_json(const FileReport& r)
{
    nlohmann::ordered_json j;
    j["path"] = r.path;
    j["format"] = format_name(r.format);
    j["verdict"] = verdict_text(r);
    j["action"] = action_name(r.action);
    j["method"] = method_text(r);
    return j.dump();
}

std::string summary_json(const ReportSummary& s)
{
    nlohmann::ordered_json j;
    j["summary"] = {{"files", s.files},       {"clean", s.clean},     {"infected", s.infected},
                    {"suspicious", s.suspicious}, {"repaired", s.repaired}, {"quarantined", s.quarantined},
                    {"deleted", s.deleted},   {"errors", s.errors}};
    return j.dump();
}

std::string report_text(const FileReport& r)
{
    std::ostringstream out;
    out << r.path << '\t' << format_name(r.format) << '\t' << verdict_text(r) << '\t' << action_name(r.action) << '\t'
        << method_text(r) << '\t' << r.bytes_before << "->" << r.bytes_after;
    return out.str();
}

std::string summary_text(const ReportSummary& s)
{
    std::ostringstream out;
    out << "files=" << s.files << " clean=" << s.clean << " infected=" << s.infected << " suspicious=" << s.suspicious
        << " repaired=" << s.repaired << " quarantined=" << s.quarantined << " deleted=" << s.deleted
        << " errors=" << s.errors;
    return out.str();
}

CleanDecision decide_clean(const std::string& name, ByteView bytes, const DefinitionSet& defs,
                           const CleanOptions& options)
{
    CleanDecision d;
    d.verdict = scan_file(bytes, defs, options.scan);
    if (d.verdict.is_clean()) return d;

    const auto accept = [&](Bytes candidate, RepairMethod method) {
        if (!scan_file(candidate, defs, options.scan).is_clean()) return;
        d.repaired = std::move(candidate);
        d.method = method;
    };

    if (d.verdict.is_infected() && d.verdict.repairable) {
        try {
            auto outcome = repair_file(bytes, defs, options.scan);
            accept(std::move(outcome.repaired), outcome.method);
        } catch (const Error&) {
        }
    }
    if (!d.method) {
        if (const auto rec = options.records.find(name); rec != options.records.end()) {
            try {
                accept(reconstruct_and_verify(bytes, rec->second), RepairMethod::Fingerprint);
            } catch (const Error&) {
            }
        }
    }
    if (!d.method && options.heuristic && detect_format(bytes) == FileFormat::Executable) {
        try {
            const auto result = heuristic_clean(parse_executable(bytes), options.heuristic_options);
            if (result.truncated) accept(serialize_executable(result.image), RepairMethod::Heuristic);
        } catch (const Error&) {
        }
    }

    DispositionPolicy policy = options.policy;
    if (!options.vault) {
        std::erase(policy.order, Action::Quarantine);
        std::erase(policy.dangerous_order, Action::Quarantine);
    }
    d.action = dispose(d.verdict, d.method.has_value(), policy);
    if (d.action != Action::Repair) {
        d.method.reset();
        d.repaired.clear();
    }
    return d;
}

std::vector<std::filesystem::path> collect_files(const std::filesystem::path& root)
{
    namespace fs = std::filesystem;
    std::vector<fs::path> out;
    if (fs::is_regular_file(root)) {
        out.push_back(root);
        return out;
    }
    if (!fs::is_directory(root)) throw Error(Errc::IoError, "no such file or directory: " + root.string());
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file() && e.path().extension() != ".vbin") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

FileReport scan_path(const std::filesystem::path& file, const DefinitionSet& defs, const ScanConfig& config)
{
    FileReport r;
    r.path = file.string();
    try {
        const auto bytes = read_file(file);
        r.format = detect_format(bytes);
        r.verdict = scan_file(bytes, defs, config);
        r.bytes_before = r.bytes_after = bytes.size();
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

FileReport clean_path(const std::filesystem::path& file, const DefinitionSet& defs, const CleanOptions& options)
{
    FileReport r;
    r.path = file.string();
    try {
        const auto bytes = read_file(file);
        r.format = detect_format(bytes);
        r.bytes_before = r.bytes_after = bytes.size();
        auto d = decide_clean(file.filename().string(), bytes, defs, options);
        r.verdict = d.verdict;
        r.action = d.action;
        r.method = d.method;
        switch (d.action) {
        case Action::Repair:
            write_file(file, d.repaired);
            r.bytes_after = d.repaired.size();
            break;
        case Action::Quarantine:
            options.vault->add(file.filename().string(), bytes,
                               d.verdict.is_infected() ? d.verdict.virus : "suspicious", options.now);
            std::filesystem::remove(file);
            r.bytes_after = 0;
            break;
        case Action::Delete:
            std::filesystem::remove(file);
            r.bytes_after = 0;
            break;
        case Action::None: break;
        }
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    return r;
}

void for_each_file(const std::vector<std::filesystem::path>& files, unsigned jobs,
                   const std::function<FileReport(const std::filesystem::path&)>& work,
                   const std::function<void(const FileReport&)>& emit)
{
    jobs = std::max(1u, jobs);
    std::deque<std::future<FileReport>> window;
    std::size_t next = 0;
    while (next < files.size() || !window.empty()) {
        while (next < files.size() && window.size() < jobs) {
            const auto& path = files[next++];
            window.push_back(jobs == 1 ? std::async(std::launch::deferred, work, path)
                                       : std::async(std::launch::async, work, path));
        }
        emit(window.front().get());
        window.pop_front();
    }
}

}  // namespace viroclave
