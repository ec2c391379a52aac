#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rdg/experiment.hpp"
#include "rdg/io.hpp"
#include "rdg/parallel.hpp"

namespace {

void print_audits(const std::vector<std::pair<std::string, rdg::AuditReport>>& audits) {
    for (const auto& [name, a] : audits) {
        std::cout << "  " << name << ": " << (a.pass ? "pass" : "FAIL") << "  checks=" << a.checks
                  << "  worst_violation=" << a.worst_violation;
        if (!a.pass && a.witness)
            std::cout << "  witness(agent=" << a.witness->agent << ", t=" << a.witness->time << ", v=" << a.witness->v
                      << ")";
        std::cout << '\n';
    }
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool plots) {
    const auto cfg = rdg::load_config(config_path);
    const auto diagnostics = rdg::validate(cfg);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) std::cerr << config_path << ": " << d << '\n';
        return 2;
    }
    const std::size_t workers = rdg::worker_count();
    const auto result = rdg::run_scenario(cfg, workers);
    const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : out_dir;
    rdg::write_result(result, dir);
    if (plots) rdg::emit_plots(result, dir);

    std::cout << result.scenario << ": " << (result.pass ? "PASS" : "FAIL") << "  (config " << result.config_hash
              << ", seed " << result.seed << ", workers " << workers << ")\n";
    for (const auto& [name, v] : result.metrics) std::cout << "  " << name << " = " << v << '\n';
    print_audits(result.audits);
    std::cout << "results in " << dir.string() << '\n';
    return result.pass ? 0 : 1;
}

int cmd_validate(const std::vector<std::string>& paths) {
    int status = 0;
    for (const auto& path : paths) {
        try {
            const auto diagnostics = rdg::validate(rdg::load_config(path));
            if (diagnostics.empty()) {
                std::cout << path << ": ok\n";
                continue;
            }
            for (const auto& d : diagnostics) std::cout << path << ": " << d << '\n';
        } catch (const std::exception& e) {
            std::cout << path << ": " << e.what() << '\n';
        }
        status = 1;
    }
    return status;
}

int cmd_audit(const std::string& trajectory, const std::string& params_path) {
    const auto snap = rdg::read_snapshot(trajectory);
    const auto params = nlohmann::json::parse(rdg::read_text(params_path));
    const auto audits = rdg::audit_trajectory(snap, params);
    bool pass = true;
    for (const auto& a : audits) pass = pass && a.second.pass;
    std::cout << trajectory << ": " << (pass ? "PASS" : "FAIL") << "  (" << snap.layers.size() << " layers)\n";
    print_audits(audits);
    return pass ? 0 : 1;
}

int cmd_plot(const std::string& result_path, const std::string& out_dir) {
    const auto result = rdg::result_from_json(nlohmann::json::parse(rdg::read_text(result_path)));
    const std::filesystem::path dir =
        out_dir.empty() ? std::filesystem::path(result_path).parent_path() / "plots" : std::filesystem::path(out_dir);
    for (const auto& f : rdg::emit_plots(result, dir)) std::cout << f.string() << '\n';
    return result.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust DeGroot learning experiments"};
    app.set_version_flag("--version", rdg::version());
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool plots = true;
    auto* run = app.add_subcommand("run", "Run the scenario described by a YAML config");
    run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "Output directory (default: output_dir from the config)");
    run->add_flag("!--no-plots", plots, "Skip SVG rendering");

    std::vector<std::string> validate_paths;
    auto* validate = app.add_subcommand("validate", "Check configs without running them");
    validate->add_option("configs", validate_paths, "Config files")->required()->check(CLI::ExistingFile);

    std::string trajectory, params_path;
    auto* audit = app.add_subcommand("audit", "Audit a saved trajectory snapshot");
    audit->add_option("trajectory", trajectory, "Snapshot written with save_trajectory")
        ->required()
        ->check(CLI::ExistingFile);
    audit->add_option("params", params_path, "JSON with eps, gamma and optional eta, beta, probes")
        ->required()
        ->check(CLI::ExistingFile);

    std::string result_path;
    auto* plot = app.add_subcommand("plot", "Render SVG and CSV files from a result.json");
    plot->add_option("result", result_path, "result.json")->required()->check(CLI::ExistingFile);
    plot->add_option("-o,--out", out_dir, "Output directory (default: plots/ next to the result)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, out_dir, plots);
        if (*validate) return cmd_validate(validate_paths);
        if (*audit) return cmd_audit(trajectory, params_path);
        if (*plot) return cmd_plot(result_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
