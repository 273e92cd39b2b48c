#include "viroclave/scenario.hpp"

#include "viroclave/error.hpp"
#include "viroclave/infectors.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

namespace viroclave {

bool ScenarioResult::all_passed() const noexcept
{
    return std::all_of(assertions.begin(), assertions.end(), [](const AssertionResult& a) { return a.passed; });
}

namespace {

struct Line {
    std::size_t number = 0;
    std::string text;
    std::vector<std::string> words;
};

std::vector<Line> tokenize(std::string_view script)
{
    std::vector<Line> out;
    std::istringstream in{std::string(script)};
    std::string text;
    std::size_t n = 0;
    while (std::getline(in, text)) {
        ++n;
        const auto hash = text.find('#');
        std::istringstream words(text.substr(0, hash));
        Line line{n, text, {}};
        for (std::string w; words >> w;) line.words.push_back(w);
        if (!line.words.empty()) out.push_back(std::move(line));
    }
    return out;
}

void arity(const Line& l, std::size_t min, std::size_t max)
{
    if (l.words.size() < min || l.words.size() > max) {
        throw ParseError(l.number, "wrong number of arguments for '" + l.words[0] + "'");
    }
}

std::uint64_t number(const Line& l, std::size_t i)
{
    std::uint64_t v = 0;
    const auto& w = l.words.at(i);
    const auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || p != w.data() + w.size()) throw ParseError(l.number, "not a number: " + w);
    return v;
}

bool compare(std::uint64_t actual, const std::string& op, std::uint64_t expected, std::size_t line)
{
    if (op == "==") return actual == expected;
    if (op == "!=") return actual != expected;
    if (op == ">=") return actual >= expected;
    if (op == "<=") return actual <= expected;
    if (op == ">") return actual > expected;
    if (op == "<") return actual < expected;
    throw ParseError(line, "unknown comparison " + op);
}

AssertionResult check(const Line& l, bool passed, std::string actual)
{
    return {l.number, l.text, passed, std::move(actual)};
}

template <typename F>
void rethrow_for_line(const Line& l, F&& f)
{
    try {
        f();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(l.number, e.what());
    }
}

}  // namespace

ScenarioResult run_memres_scenario(std::string_view script, const DefinitionSet& defs,
                                   const std::filesystem::path& base_dir)
{
    ScenarioResult result;
    SystemState state;
    StepLog last_log;

    for (const auto& l : tokenize(script)) {
        const auto& cmd = l.words[0];
        rethrow_for_line(l, [&] {
            if (cmd == "program") {
                arity(l, 3, 4);
                const auto seed = l.words.size() > 3 ? number(l, 3) : 1;
                state.volume[l.words[1]] = serialize_executable(generate_program(number(l, 2), seed));
            } else if (cmd == "file") {
                arity(l, 3, 3);
                state.volume[l.words[1]] = read_file(base_dir / l.words[2]);
            } else if (cmd == "infect") {
                arity(l, 3, 4);
                const auto* defn = defs.find(l.words[2]);
                if (!defn) throw Error(Errc::UnknownVirus, l.words[2]);
                const auto it = state.volume.find(l.words[1]);
                if (it == state.volume.end()) throw Error(Errc::UnknownFile, l.words[1]);
                const auto seed = l.words.size() > 3 ? number(l, 3) : 1;
                if (defn->kind == VirusKind::MacroVirus) {
                    it->second = serialize_document(infect_document(parse_document(it->second), *defn));
                } else {
                    it->second = serialize_executable(infect(parse_executable(it->second), *defn, seed).image);
                }
            } else if (cmd == "execute") {
                arity(l, 2, 2);
                state = execute_file(state, l.words[1], defs);
            } else if (cmd == "open") {
                arity(l, 2, 2);
                state = open_file(state, l.words[1], defs);
            } else if (cmd == "cycle") {
                arity(l, 2, 2);
                const auto rounds = number(l, 1);
                for (std::uint64_t r = 0; r < rounds; ++r) {
                    std::vector<std::string> ids;
                    for (const auto& [id, _] : state.volume) ids.push_back(id);
                    for (const auto& id : ids) {
                        state = execute_file(state, id, defs);
                        state = open_file(state, id, defs);
                    }
                }
            } else if (cmd == "clean-files") {
                arity(l, 1, 1);
                auto ex = clean_files_only(state, defs);
                state = std::move(ex.state);
                last_log = std::move(ex.log);
            } else if (cmd == "exterminate") {
                arity(l, 1, 1);
                auto ex = exterminate(state, defs);
                state = std::move(ex.state);
                last_log = std::move(ex.log);
            } else if (cmd == "expect") {
                if (l.words.size() < 2) throw ParseError(l.number, "empty expect");
                const auto& what = l.words[1];
                if (what == "memory") {
                    arity(l, 3, 3);
                    const auto actual = state.memory_virus.value_or("none");
                    result.assertions.push_back(check(l, actual == l.words[2], actual));
                } else if (what == "infected") {
                    arity(l, 4, 4);
                    const auto actual = count_infected(state, defs);
                    result.assertions.push_back(
                        check(l, compare(actual, l.words[2], number(l, 3), l.number), std::to_string(actual)));
                } else if (what == "file") {
                    arity(l, 4, 4);
                    const auto it = state.volume.find(l.words[2]);
                    const std::string actual =
                        it == state.volume.end() ? "absent"
                                                 : (scan_file(it->second, defs).is_clean() ? "clean" : "infected");
                    result.assertions.push_back(check(l, actual == l.words[3], actual));
                } else if (what == "os-clean") {
                    arity(l, 3, 3);
                    const std::string actual = state.os_clean ? "true" : "false";
                    result.assertions.push_back(check(l, actual == l.words[2], actual));
                } else if (what == "steps") {
                    arity(l, 3, 3);
                    result.assertions.push_back(
                        check(l, last_log.size() == number(l, 2), std::to_string(last_log.size())));
                } else {
                    throw ParseError(l.number, "unknown expectation '" + what + "'");
                }
                return;
            } else {
                throw ParseError(l.number, "unknown command '" + cmd + "'");
            }
            result.transcript.push_back(l.text);
        });
    }
    for (const auto& entry : last_log) {
        result.transcript.push_back("step " + std::to_string(entry.step) + ": " + entry.name);
        for (const auto& d : entry.details) result.transcript.push_back("  " + d);
    }
    return result;
}

ScenarioResult run_recovery_scenario(std::string_view script)
{
    ScenarioResult result;
    RecoverySession session = RecoverySession::start("");
    std::uint64_t blocked = 0, rejected = 0;

    static const std::pair<const char*, RecoveryEventKind> kEvents[] = {
        {"boot", RecoveryEventKind::BootUtility},
        {"connect", RecoveryEventKind::Connect},
        {"download-recovery", RecoveryEventKind::DownloadRecoveryProgram},
        {"download-scan", RecoveryEventKind::DownloadScanUtility},
        {"repair", RecoveryEventKind::RunRepair},
        {"reboot", RecoveryEventKind::Reboot},
    };

    for (const auto& l : tokenize(script)) {
        const auto& cmd = l.words[0];
        if (cmd == "trusted") {
            arity(l, 2, 2);
            session.trusted_host = l.words[1];
        } else if (cmd == "event") {
            arity(l, 2, 3);
            const auto it = std::find_if(std::begin(kEvents), std::end(kEvents),
                                         [&](const auto& e) { return l.words[1] == e.first; });
            if (it == std::end(kEvents)) throw ParseError(l.number, "unknown event '" + l.words[1] + "'");
            RecoveryEvent ev{it->second, {}};
            if (ev.kind == RecoveryEventKind::Connect) {
                arity(l, 3, 3);
                ev.host = l.words[2];
            } else {
                arity(l, 2, 2);
            }
            try {
                session = recovery_step(session, ev);
                result.transcript.push_back(session.log.back());
            } catch (const Error& e) {
                (e.code() == Errc::UntrustedHostBlocked ? blocked : rejected)++;
                result.transcript.push_back(std::string("rejected: ") + e.what());
            }
        } else if (cmd == "expect") {
            arity(l, 3, 3);
            const auto& what = l.words[1];
            if (what == "phase") {
                const std::string actual(phase_name(session.phase));
                result.assertions.push_back(check(l, actual == l.words[2], actual));
            } else if (what == "network") {
                const std::string actual(network_mode_name(session.network));
                result.assertions.push_back(check(l, actual == l.words[2], actual));
            } else if (what == "blocked") {
                result.assertions.push_back(check(l, blocked == number(l, 2), std::to_string(blocked)));
            } else if (what == "rejected") {
                result.assertions.push_back(check(l, rejected == number(l, 2), std::to_string(rejected)));
            } else {
                throw ParseError(l.number, "unknown expectation '" + what + "'");
            }
        } else {
            throw ParseError(l.number, "unknown command '" + cmd + "'");
        }
    }
    return result;
}

}  // namespace viroclave
