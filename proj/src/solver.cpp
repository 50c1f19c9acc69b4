#include "wana/solver.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace wana {

std::string_view to_string(SatStatus s) noexcept
{
    switch (s)
    {
    case SatStatus::sat:
        return "sat";
    case SatStatus::unsat:
        return "unsat";
    case SatStatus::unknown:
        return "unknown";
    }
    return "?";
}

namespace {

struct SExpr
{
    std::string atom;
    std::vector<SExpr> list;
    bool is_list = false;
};

class SExprParser
{
public:
    explicit SExprParser(const std::string& text) : text_{text} {}

    std::vector<SExpr> parse_all()
    {
        std::vector<SExpr> out;
        skip();
        while (pos_ < text_.size())
        {
            out.push_back(parse());
            skip();
        }
        return out;
    }

private:
    void skip()
    {
        while (pos_ < text_.size())
        {
            if (std::isspace(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            else if (text_[pos_] == ';')
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    ++pos_;
            else
                break;
        }
    }

    SExpr parse()
    {
        skip();
        if (pos_ >= text_.size())
            throw SolverUnavailable{"unexpected end of solver response"};
        SExpr e;
        if (text_[pos_] == '(')
        {
            ++pos_;
            e.is_list = true;
            skip();
            while (pos_ < text_.size() && text_[pos_] != ')')
            {
                e.list.push_back(parse());
                skip();
            }
            if (pos_ >= text_.size())
                throw SolverUnavailable{"unbalanced solver response"};
            ++pos_;
            return e;
        }
        if (text_[pos_] == '"' || text_[pos_] == '|')
        {
            const char quote = text_[pos_];
            const auto start = pos_++;
            while (pos_ < text_.size() && text_[pos_] != quote)
                ++pos_;
            ++pos_;
            e.atom = text_.substr(start, pos_ - start);
            return e;
        }
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')')
            ++pos_;
        e.atom = text_.substr(start, pos_ - start);
        return e;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

std::optional<uint64_t> parse_value(const SExpr& v)
{
    if (!v.is_list)
    {
        const auto& a = v.atom;
        if (a.rfind("#x", 0) == 0)
            return std::stoull(a.substr(2), nullptr, 16);
        if (a.rfind("#b", 0) == 0)
            return std::stoull(a.substr(2), nullptr, 2);
        return std::nullopt;
    }
    // (_ bvN W)
    if (v.list.size() == 3 && v.list[0].atom == "_" && v.list[1].atom.rfind("bv", 0) == 0)
        return std::stoull(v.list[1].atom.substr(2));
    return std::nullopt;
}

std::optional<uint32_t> variable_id(const std::string& name)
{
    if (name.size() < 2 || name[0] != 'v')
        return std::nullopt;
    for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i])))
            return std::nullopt;
    return static_cast<uint32_t>(std::stoul(name.substr(1)));
}

void collect_model(const SExpr& e, Model& out)
{
    if (!e.is_list)
        return;
    if (!e.list.empty() && !e.list[0].is_list && e.list[0].atom == "define-fun" && e.list.size() >= 5)
    {
        if (auto id = variable_id(e.list[1].atom))
            if (auto value = parse_value(e.list.back()))
                out[*id] = *value;
        return;
    }
    if (e.list.size() == 2 && !e.list[0].is_list)
    {
        if (auto id = variable_id(e.list[0].atom))
        {
            if (auto value = parse_value(e.list[1]))
                out[*id] = *value;
            return;
        }
    }
    for (const auto& child : e.list)
        collect_model(child, out);
}

std::vector<std::string> solver_arguments(const std::string& executable)
{
    const auto base = std::filesystem::path{executable}.filename().string();
    if (base.find("z3") != std::string::npos)
        return {"-in", "-smt2"};
    if (base.find("cvc") != std::string::npos)
        return {"--lang=smt2", "--incremental"};
    if (base.find("bitwuzla") != std::string::npos || base.find("boolector") != std::string::npos)
        return {"--smt2"};
    return {};
}

}  // namespace

Model parse_model(const std::string& response)
{
    Model model;
    for (const auto& e : SExprParser{response}.parse_all())
        collect_model(e, model);
    return model;
}

SmtProcessSolver::SmtProcessSolver(std::string executable, std::chrono::milliseconds timeout)
  : executable_{std::move(executable)}, timeout_{timeout}
{
    std::signal(SIGPIPE, SIG_IGN);
}

SmtProcessSolver::~SmtProcessSolver()
{
    stop();
}

void SmtProcessSolver::start()
{
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0)
        throw SolverUnavailable{"pipe: " + std::string{std::strerror(errno)}};
    if (pipe(out_pipe) != 0)
    {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw SolverUnavailable{"pipe: " + std::string{std::strerror(errno)}};
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

    auto args = solver_arguments(executable_);
    std::vector<char*> argv;
    argv.push_back(executable_.data());
    for (auto& a : args)
        argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = -1;
    const int rc = posix_spawnp(&pid, executable_.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in_pipe[0]);
    close(out_pipe[1]);
    if (rc != 0)
    {
        close(in_pipe[1]);
        close(out_pipe[0]);
        throw SolverUnavailable{"cannot launch solver '" + executable_ + "': " + std::strerror(rc)};
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    buffer_.clear();
}

void SmtProcessSolver::stop() noexcept
{
    if (to_child_ >= 0)
        close(to_child_);
    if (from_child_ >= 0)
        close(from_child_);
    if (pid_ > 0)
    {
        kill(pid_, SIGKILL);
        int status = 0;
        waitpid(pid_, &status, 0);
    }
    pid_ = -1;
    to_child_ = from_child_ = -1;
    buffer_.clear();
}

void SmtProcessSolver::send(const std::string& text)
{
    std::size_t done = 0;
    while (done < text.size())
    {
        const auto n = write(to_child_, text.data() + done, text.size() - done);
        if (n < 0)
        {
            if (errno == EINTR)
                continue;
            stop();
            throw SolverUnavailable{"solver '" + executable_ + "' closed its input"};
        }
        done += static_cast<std::size_t>(n);
    }
}

std::optional<std::string> SmtProcessSolver::read_response(std::chrono::steady_clock::time_point deadline)
{
    while (true)
    {
        // try to cut one complete response from the buffer
        std::size_t i = 0;
        while (i < buffer_.size() && std::isspace(static_cast<unsigned char>(buffer_[i])))
            ++i;
        if (i < buffer_.size())
        {
            if (buffer_[i] == '(')
            {
                int depth = 0;
                bool in_string = false;
                for (std::size_t j = i; j < buffer_.size(); ++j)
                {
                    const char c = buffer_[j];
                    if (in_string)
                    {
                        in_string = c != '"';
                        continue;
                    }
                    if (c == '"')
                        in_string = true;
                    else if (c == '(')
                        ++depth;
                    else if (c == ')' && --depth == 0)
                    {
                        auto out = buffer_.substr(i, j + 1 - i);
                        buffer_.erase(0, j + 1);
                        return out;
                    }
                }
            }
            else if (auto nl = buffer_.find('\n', i); nl != std::string::npos)
            {
                auto out = buffer_.substr(i, nl - i);
                buffer_.erase(0, nl + 1);
                return out;
            }
        }

        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline)
            return std::nullopt;
        const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = poll(&pfd, 1, static_cast<int>(std::max<long long>(1, wait)));
        if (rc < 0 && errno == EINTR)
            continue;
        if (rc == 0)
            continue;
        char chunk[4096];
        const auto n = read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR)
            continue;
        if (n <= 0)
        {
            stop();
            throw SolverUnavailable{"solver '" + executable_ + "' exited unexpectedly"};
        }
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

Model SmtProcessSolver::query_model(std::span<const BoolExpr> conjuncts,
                                    std::chrono::steady_clock::time_point deadline)
{
    send("(get-model)\n");
    auto response = read_response(deadline);
    if (!response)
        throw SolverUnavailable{"timed out reading model"};
    if (response->rfind("(error", 0) == 0)
        throw SolverUnavailable{"solver error: " + *response};
    Model model = parse_model(*response);

    bool complete = true;
    for (const auto& c : conjuncts)
        complete = complete && evaluate(c, model);
    if (complete)
        return model;

    // Partial model: ask explicitly for every variable.
    VariableSet vars;
    for (const auto& c : conjuncts)
        collect_variables(c, vars);
    if (vars.empty())
        return model;
    std::string request = "(get-value (";
    for (const auto& [id, width] : vars)
        request += " v" + std::to_string(id);
    request += "))\n";
    send(request);
    response = read_response(deadline);
    if (!response)
        throw SolverUnavailable{"timed out reading values"};
    for (const auto& [id, value] : parse_model(*response))
        model[id] = value;
    return model;
}

SolverVerdict SmtProcessSolver::check(std::span<const BoolExpr> conjuncts)
{
    ++stats_.queries;
    const auto started = std::chrono::steady_clock::now();
    SolverVerdict verdict;

    if (conjuncts.empty())
    {
        verdict.status = SatStatus::sat;
        verdict.model = Model{};
        return verdict;
    }

    auto text = to_smtlib(conjuncts);
    if (auto it = cache_.find(text); it != cache_.end())
    {
        ++stats_.cache_hits;
        if (it->second.status == SatStatus::unknown)
            ++stats_.unknowns;
        return it->second;
    }

    if (pid_ < 0)
        start();
    const auto deadline = started + timeout_;
    send("(reset)\n" + text);
    auto answer = read_response(deadline);
    if (!answer)
    {
        stop();
        verdict.status = SatStatus::unknown;
    }
    else if (*answer == "sat")
    {
        verdict.status = SatStatus::sat;
        try
        {
            verdict.model = query_model(conjuncts, deadline);
        }
        catch (const SolverUnavailable&)
        {
            stop();
            verdict.status = SatStatus::unknown;
        }
    }
    else if (*answer == "unsat")
    {
        verdict.status = SatStatus::unsat;
    }
    else if (*answer == "unknown" || *answer == "timeout")
    {
        verdict.status = SatStatus::unknown;
    }
    else
    {
        stop();
        throw SolverUnavailable{"unexpected solver response: " + *answer};
    }

    verdict.solve_time =
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
    stats_.total_time += verdict.solve_time;
    if (verdict.status == SatStatus::unknown)
        ++stats_.unknowns;
    if (cache_.size() > 200000)
        cache_.clear();
    cache_.emplace(std::move(text), verdict);
    return verdict;
}

std::string resolve_solver_path(const std::optional<std::string>& flag)
{
    if (flag && !flag->empty())
        return *flag;
    if (const char* env = std::getenv("WANA_SOLVER"); env && *env)
        return env;
    return "z3";
}

}  // namespace wana
