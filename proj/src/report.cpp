#include "wana/report.hpp"

#include "wana/loader.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>
#include <thread>

namespace wana {

using nlohmann::json;

std::string_view to_string(PlatformChoice p) noexcept
{
    switch (p)
    {
    case PlatformChoice::automatic: return "auto";
    case PlatformChoice::eosio: return "eosio";
    case PlatformChoice::ethereum: return "ethereum";
    }
    return "?";
}

std::optional<PlatformChoice> platform_choice_from_string(std::string_view s) noexcept
{
    for (auto p : {PlatformChoice::automatic, PlatformChoice::eosio, PlatformChoice::ethereum})
        if (to_string(p) == s)
            return p;
    return std::nullopt;
}

std::string_view to_string(ContractStatus s) noexcept
{
    switch (s)
    {
    case ContractStatus::ok: return "ok";
    case ContractStatus::timed_out: return "timed_out";
    case ContractStatus::error: return "error";
    }
    return "?";
}

std::optional<Platform> detect_platform(const Module& module)
{
    const bool env = module.imports_namespace("env");
    const bool eth = module.imports_namespace("ethereum");
    if (env == eth)
        return std::nullopt;
    return env ? Platform::eosio : Platform::ethereum;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

constexpr std::size_t max_messages = 32;

void add_message(EngineDiagnostics& d, std::string m)
{
    if (d.messages.size() >= max_messages)
        return;
    if (std::find(d.messages.begin(), d.messages.end(), m) == d.messages.end())
        d.messages.push_back(std::move(m));
}

}  // namespace

ContractReport run_file(const std::string& path, const RunConfig& config, Solver& solver)
{
    ContractReport c;
    c.file = path;
    const auto start = Clock::now();

    std::optional<Module> module;
    try
    {
        module = decode_module(read_file(path));
    }
    catch (const DecodeError& e)
    {
        c.status = ContractStatus::error;
        c.error = fmt::format("{}: {}", to_string(e.kind), e.what());
    }
    catch (const std::exception& e)
    {
        c.status = ContractStatus::error;
        c.error = e.what();
    }
    c.timing.decode_ms = ms_since(start);
    if (!module)
    {
        c.timing.total_ms = ms_since(start);
        return c;
    }

    c.stats.functions = module->function_count();
    c.stats.instructions = module->instruction_count();

    switch (config.platform)
    {
    case PlatformChoice::eosio: c.platform = Platform::eosio; break;
    case PlatformChoice::ethereum: c.platform = Platform::ethereum; break;
    case PlatformChoice::automatic: c.platform = detect_platform(*module); break;
    }
    if (!c.platform)
    {
        const bool env = module->imports_namespace("env");
        c.status = ContractStatus::error;
        c.error = env ? "platform ambiguity: module imports both env and ethereum namespaces"
                      : "platform ambiguity: module imports neither env nor ethereum namespace";
        c.timing.total_ms = ms_since(start);
        return c;
    }

    for (const auto& imp : module->imports)
        if (imp.kind == ExternKind::function && imp.module == "ethereum" && !is_modeled_import(imp.module, imp.name))
            add_message(c.diagnostics, fmt::format("unrecognized import ethereum.{} uses the fallback model", imp.name));

    ExploreConfig ec;
    ec.loop_bound = config.loop_depth;
    ec.max_paths = config.max_paths;
    ec.seed = config.seed;
    ec.deadline = start + std::chrono::milliseconds{config.timeout_ms};

    solver.reset_stats();
    const auto explore_start = Clock::now();
    try
    {
        for (const auto kind : all_finding_kinds)
        {
            if (platform_of(kind) != *c.platform)
                continue;
            auto r = run_detector(kind, *module, solver, ec);
            c.findings.push_back(std::move(r.finding));
            auto& d = c.diagnostics;
            d.paths += r.stats.paths;
            d.solver_queries += r.stats.solver_queries;
            d.unsupported_instructions += r.stats.unsupported;
            d.unknown_verdicts += r.stats.unknown_verdicts;
            d.budget_exhausted += r.stats.budget_exhausted;
            d.path_limit_reached = d.path_limit_reached || (r.stats.truncated && !r.stats.timed_out);
            for (const auto& p : r.paths)
                for (const auto& m : p.diagnostics)
                    add_message(d, m);
            if (r.stats.timed_out)
                c.status = ContractStatus::timed_out;
        }
    }
    catch (const SolverUnavailable&)
    {
        throw;
    }
    catch (const std::exception& e)
    {
        c.status = ContractStatus::error;
        c.error = e.what();
    }
    c.timing.explore_ms = ms_since(explore_start);
    c.timing.solve_ms = std::chrono::duration<double, std::milli>(solver.stats().total_time).count();
    c.timing.total_ms = ms_since(start);
    return c;
}

ContractReport run_file(const std::string& path, const RunConfig& config)
{
    SmtProcessSolver solver{resolve_solver_path(config.solver_path.empty() ? std::nullopt
                                                                           : std::optional{config.solver_path}),
                            std::chrono::milliseconds{config.solver_timeout_ms}};
    return run_file(path, config, solver);
}

std::vector<std::string> collect_inputs(const std::vector<std::string>& inputs)
{
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    for (const auto& in : inputs)
    {
        if (fs::is_directory(in))
        {
            std::vector<std::string> found;
            for (const auto& entry : fs::recursive_directory_iterator(in))
                if (entry.is_regular_file() && entry.path().extension() == ".wasm")
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            if (found.empty())
                throw UsageError{fmt::format("no .wasm files in {}", in)};
            files.insert(files.end(), found.begin(), found.end());
        }
        else
        {
            files.push_back(in);
        }
    }
    if (files.empty())
        throw UsageError{"no input files"};
    return files;
}

Summary summarize(const std::vector<ContractReport>& contracts)
{
    Summary s;
    std::set<FindingKind> seen;
    for (const auto& c : contracts)
    {
        if (c.status == ContractStatus::error)
        {
            ++s.failed;
            continue;
        }
        ++s.analyzed;
        if (c.platform)
            ++s.per_platform[std::string{to_string(*c.platform)}];
        for (const auto& f : c.findings)
        {
            auto& k = s.per_kind[std::string{to_string(f.kind)}];
            if (f.verdict)
                ++k.count;
        }
    }
    for (auto& [name, k] : s.per_kind)
        k.percentage = s.analyzed ? 100.0 * static_cast<double>(k.count) / static_cast<double>(s.analyzed) : 0.0;
    return s;
}

Report run_inputs(const RunConfig& config)
{
    const auto files = collect_inputs(config.inputs);
    Report report;
    report.config = config;
    report.contracts.resize(files.size());

    const auto solver_path =
        resolve_solver_path(config.solver_path.empty() ? std::nullopt : std::optional{config.solver_path});
    const unsigned workers = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(files.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        try
        {
            SmtProcessSolver solver{solver_path, std::chrono::milliseconds{config.solver_timeout_ms}};
            for (std::size_t i = next++; i < files.size(); i = next++)
                report.contracts[i] = run_file(files[i], config, solver);
        }
        catch (...)
        {
            std::lock_guard lock{failure_mutex};
            if (!failure)
                failure = std::current_exception();
            next = files.size();
        }
    };
    if (workers == 1)
    {
        work();
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);

    report.summary = summarize(report.contracts);
    return report;
}

Report run_corpus(const std::string& directory, const RunConfig& config)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(directory))
        throw UsageError{fmt::format("{} is not a directory", directory)};
    RunConfig c = config;
    c.inputs = {directory};
    return run_inputs(c);
}

int exit_code(const Report& report)
{
    bool findings = false;
    for (const auto& c : report.contracts)
    {
        if (c.status == ContractStatus::error)
            return 2;
        for (const auto& f : c.findings)
            findings = findings || f.verdict;
    }
    return findings ? 1 : 0;
}

// JSON ------------------------------------------------------------------------

namespace {

json site_json(const WitnessSite& s)
{
    return {{"label", s.label}, {"function", s.site.function}, {"offset", s.site.offset}};
}

json finding_json(const Finding& f)
{
    json j{{"kind", to_string(f.kind)},
           {"verdict", f.verdict},
           {"confidence", to_string(f.confidence)},
           {"notes", f.notes},
           {"witness", nullptr}};
    if (f.witness)
    {
        json model = json::object();
        for (const auto& [id, value] : f.witness->model)
            model["v" + std::to_string(id)] = value;
        json sites = json::array();
        for (const auto& s : f.witness->sites)
            sites.push_back(site_json(s));
        j["witness"] = {{"entry", f.witness->entry}, {"model", model}, {"sites", sites}};
    }
    return j;
}

Finding finding_from(const json& j)
{
    Finding f;
    const auto kind = finding_kind_from_string(j.at("kind").get<std::string>());
    if (!kind)
        throw std::invalid_argument{"unknown finding kind"};
    f.kind = *kind;
    f.verdict = j.at("verdict").get<bool>();
    f.confidence = j.at("confidence").get<std::string>() == "low" ? Confidence::low : Confidence::high;
    f.notes = j.at("notes").get<std::vector<std::string>>();
    if (const auto& w = j.at("witness"); !w.is_null())
    {
        Witness wit;
        wit.entry = w.at("entry").get<uint32_t>();
        for (const auto& [name, value] : w.at("model").items())
            wit.model[static_cast<uint32_t>(std::stoul(name.substr(1)))] = value.get<uint64_t>();
        for (const auto& s : w.at("sites"))
            wit.sites.push_back(
                {s.at("label").get<std::string>(), Site{s.at("function").get<uint32_t>(), s.at("offset").get<uint32_t>()}});
        f.witness = std::move(wit);
    }
    return f;
}

json config_json(const RunConfig& c)
{
    return {{"inputs", c.inputs},
            {"platform", to_string(c.platform)},
            {"loop_depth", c.loop_depth},
            {"seed", c.seed},
            {"solver_path", c.solver_path},
            {"solver_timeout_ms", c.solver_timeout_ms},
            {"timeout_ms", c.timeout_ms},
            {"max_paths", c.max_paths},
            {"format", c.format},
            {"jobs", c.jobs},
            {"omit_timing", c.omit_timing}};
}

RunConfig config_from(const json& j)
{
    RunConfig c;
    c.inputs = j.at("inputs").get<std::vector<std::string>>();
    c.platform = platform_choice_from_string(j.at("platform").get<std::string>()).value_or(PlatformChoice::automatic);
    c.loop_depth = j.at("loop_depth").get<uint32_t>();
    c.seed = j.at("seed").get<uint64_t>();
    c.solver_path = j.at("solver_path").get<std::string>();
    c.solver_timeout_ms = j.at("solver_timeout_ms").get<uint32_t>();
    c.timeout_ms = j.at("timeout_ms").get<uint32_t>();
    c.max_paths = j.at("max_paths").get<uint32_t>();
    c.format = j.at("format").get<std::string>();
    c.jobs = j.at("jobs").get<unsigned>();
    c.omit_timing = j.at("omit_timing").get<bool>();
    return c;
}

json contract_json(const ContractReport& c, bool omit_timing)
{
    json findings = json::array();
    for (const auto& f : c.findings)
        findings.push_back(finding_json(f));
    json j{{"file", c.file},
           {"platform", c.platform ? json(to_string(*c.platform)) : json(nullptr)},
           {"status", to_string(c.status)},
           {"error", c.error},
           {"stats", {{"functions", c.stats.functions}, {"instructions", c.stats.instructions}}},
           {"findings", findings},
           {"diagnostics",
            {{"paths", c.diagnostics.paths},
             {"solver_queries", c.diagnostics.solver_queries},
             {"unsupported_instructions", c.diagnostics.unsupported_instructions},
             {"unknown_verdicts", c.diagnostics.unknown_verdicts},
             {"budget_exhausted", c.diagnostics.budget_exhausted},
             {"path_limit_reached", c.diagnostics.path_limit_reached},
             {"messages", c.diagnostics.messages}}}};
    if (!omit_timing)
        j["timing_ms"] = {{"decode", c.timing.decode_ms},
                          {"explore", c.timing.explore_ms},
                          {"solve", c.timing.solve_ms},
                          {"total", c.timing.total_ms}};
    return j;
}

ContractReport contract_from(const json& j)
{
    ContractReport c;
    c.file = j.at("file").get<std::string>();
    if (const auto& p = j.at("platform"); !p.is_null())
        c.platform = p.get<std::string>() == "eosio" ? Platform::eosio : Platform::ethereum;
    const auto status = j.at("status").get<std::string>();
    c.status = status == "ok" ? ContractStatus::ok : status == "timed_out" ? ContractStatus::timed_out
                                                                            : ContractStatus::error;
    c.error = j.at("error").get<std::string>();
    c.stats.functions = j.at("stats").at("functions").get<uint32_t>();
    c.stats.instructions = j.at("stats").at("instructions").get<uint64_t>();
    for (const auto& f : j.at("findings"))
        c.findings.push_back(finding_from(f));
    const auto& d = j.at("diagnostics");
    c.diagnostics.paths = d.at("paths").get<uint64_t>();
    c.diagnostics.solver_queries = d.at("solver_queries").get<uint64_t>();
    c.diagnostics.unsupported_instructions = d.at("unsupported_instructions").get<uint64_t>();
    c.diagnostics.unknown_verdicts = d.at("unknown_verdicts").get<uint64_t>();
    c.diagnostics.budget_exhausted = d.at("budget_exhausted").get<uint64_t>();
    c.diagnostics.path_limit_reached = d.at("path_limit_reached").get<bool>();
    c.diagnostics.messages = d.at("messages").get<std::vector<std::string>>();
    if (j.contains("timing_ms"))
    {
        const auto& t = j.at("timing_ms");
        c.timing = {t.at("decode").get<double>(), t.at("explore").get<double>(), t.at("solve").get<double>(),
                    t.at("total").get<double>()};
    }
    return c;
}

}  // namespace

json to_json(const Report& report)
{
    json contracts = json::array();
    for (const auto& c : report.contracts)
        contracts.push_back(contract_json(c, report.config.omit_timing));
    json per_kind = json::object();
    for (const auto& [name, k] : report.summary.per_kind)
        per_kind[name] = {{"count", k.count}, {"percentage", k.percentage}};
    return {{"version", report.version},
            {"config", config_json(report.config)},
            {"contracts", contracts},
            {"summary",
             {{"analyzed", report.summary.analyzed},
              {"failed", report.summary.failed},
              {"per_kind", per_kind},
              {"per_platform", report.summary.per_platform}}}};
}

Report report_from_json(const json& j)
{
    Report r;
    r.version = j.at("version").get<std::string>();
    r.config = config_from(j.at("config"));
    for (const auto& c : j.at("contracts"))
        r.contracts.push_back(contract_from(c));
    const auto& s = j.at("summary");
    r.summary.analyzed = s.at("analyzed").get<uint64_t>();
    r.summary.failed = s.at("failed").get<uint64_t>();
    for (const auto& [name, k] : s.at("per_kind").items())
        r.summary.per_kind[name] = {k.at("count").get<uint64_t>(), k.at("percentage").get<double>()};
    r.summary.per_platform = s.at("per_platform").get<std::map<std::string, uint64_t>>();
    return r;
}

std::string to_text(const Report& report)
{
    std::string out;
    for (const auto& c : report.contracts)
    {
        out += fmt::format("{}  [{}{}]\n", c.file, c.platform ? to_string(*c.platform) : "unknown",
                           c.status == ContractStatus::ok ? "" : fmt::format(", {}", to_string(c.status)));
        if (!c.error.empty())
            out += fmt::format("  error: {}\n", c.error);
        for (const auto& f : c.findings)
        {
            out += fmt::format("  {:<30} {}", to_string(f.kind), f.verdict ? "VULNERABLE" : "clean");
            if (f.confidence == Confidence::low)
                out += " (low confidence)";
            if (f.witness && f.verdict)
            {
                out += "  at";
                for (const auto& s : f.witness->sites)
                    out += fmt::format(" {}@{}:{}", s.label, s.site.function, s.site.offset);
            }
            out += "\n";
        }
        if (!report.config.omit_timing)
            out += fmt::format("  time: {:.1f} ms (decode {:.1f}, explore {:.1f}, solve {:.1f})\n", c.timing.total_ms,
                               c.timing.decode_ms, c.timing.explore_ms, c.timing.solve_ms);
    }
    const auto& s = report.summary;
    out += fmt::format("\nanalyzed {} contract(s), {} failed\n", s.analyzed, s.failed);
    for (const auto& [name, k] : s.per_kind)
        out += fmt::format("  {:<30} {:>4}  {:6.2f}%\n", name, k.count, k.percentage);
    return out;
}

}  // namespace wana
