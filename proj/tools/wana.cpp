#include "wana/loader.hpp"
#include "wana/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>

namespace {

void disassemble(const std::string& path)
{
    const auto module = wana::decode_module(wana::read_file(path));
    for (const auto& imp : module.imports)
        fmt::print("import {}.{}\n", imp.module, imp.name);
    for (const auto& e : module.exports)
        fmt::print("export {} -> {}\n", e.name, e.index);
    const auto base = module.imported_function_count();
    for (std::size_t i = 0; i < module.functions.size(); ++i)
    {
        const auto& fn = module.functions[i];
        const auto& type = module.types.at(fn.type_index);
        fmt::print("func {} ({} params, {} results)\n", base + i, type.params.size(), type.results.size());
        for (std::size_t pc = 0; pc < fn.body.size(); ++pc)
        {
            const auto& ins = fn.body[pc];
            fmt::print("  {:5} {}", pc, wana::opcode_name(ins.op));
            switch (wana::opcode_info(static_cast<uint8_t>(ins.op))->immediate)
            {
            case wana::Immediate::none:
            case wana::Immediate::memory_index:
            case wana::Immediate::block_type: break;
            case wana::Immediate::memarg: fmt::print(" offset={}", ins.offset); break;
            case wana::Immediate::i32:
            case wana::Immediate::i64: fmt::print(" {}", static_cast<int64_t>(ins.literal)); break;
            default: fmt::print(" {}", ins.index); break;
            }
            fmt::print("\n");
        }
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Symbolic-execution vulnerability scanner for EOSIO and EWasm contracts"};
    wana::RunConfig config;
    std::string platform = "auto";
    std::string output;
    bool disasm = false;

    app.add_option("inputs", config.inputs, "Wasm files or directories")->required();
    app.add_option("--platform", platform, "eosio, ethereum or auto")
        ->check(CLI::IsMember({"auto", "eosio", "ethereum"}));
    app.add_option("--loop-depth", config.loop_depth, "Loop bound per label")->check(CLI::Range(1u, 100000u));
    app.add_option("--seed", config.seed, "Seed for unknown-import values");
    app.add_option("--solver-path", config.solver_path, "SMT solver executable (default: $WANA_SOLVER, then z3)");
    app.add_option("--timeout", config.timeout_ms, "Per-contract wall-clock limit in milliseconds");
    app.add_option("--solver-timeout", config.solver_timeout_ms, "Per-query solver limit in milliseconds");
    app.add_option("--max-paths", config.max_paths, "Maximum explored paths per exploration");
    app.add_option("--format", config.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    app.add_option("--jobs", config.jobs, "Contracts analyzed in parallel")->check(CLI::Range(1u, 1024u));
    app.add_option("--output", output, "Write the report to this file instead of stdout");
    app.add_flag("--omit-timing", config.omit_timing, "Leave wall-clock timings out of the report");
    app.add_flag("--disasm", disasm, "Print decoded functions and exit");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        return app.exit(e) == 0 ? 0 : 2;
    }
    config.platform = *wana::platform_choice_from_string(platform);

    try
    {
        if (disasm)
        {
            for (const auto& f : wana::collect_inputs(config.inputs))
                disassemble(f);
            return 0;
        }
        const auto report = wana::run_inputs(config);
        const std::string text =
            config.format == "json" ? wana::to_json(report).dump(2) + "\n" : wana::to_text(report);
        if (output.empty())
        {
            std::cout << text;
        }
        else
        {
            std::ofstream out{output};
            if (!out)
            {
                std::cerr << "cannot write " << output << "\n";
                return 2;
            }
            out << text;
        }
        return wana::exit_code(report);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
