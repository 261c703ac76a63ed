// Command-line driver: batch simulation with certified audits, post-hoc
// auditing of stored trajectories, and the small-instance oracle checks.
//
// Exit codes: 0 success, 1 audit failure, 2 configuration error,
//             3 solver failure.
#include "CLI11.hpp"

#include "phasedam/config.hpp"
#include "phasedam/csv_io.hpp"
#include "phasedam/dense_oracle.hpp"
#include "phasedam/diagnostics.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace phasedam;

namespace {

std::string resolve_output_dir(const std::string& dir) {
    const char* root = std::getenv("PHASEDAM_OUTPUT_ROOT");
    if (root && *root && !fs::path(dir).is_absolute())
        return (fs::path(root) / dir).string();
    return dir;
}

void print_audit_summary(const AuditReport& rep, std::ostream& out) {
    int failed = 0;
    for (const auto& s : rep.steps)
        if (!s.pass) {
            ++failed;
            out << "audit: step " << s.step << " FAILED:";
            for (const auto& f : s.failures) out << " [" << f << "]";
            out << "\n";
        }
    for (const auto& n : rep.notes) out << "audit note: " << n << "\n";
    out << "audit: " << (rep.pass ? "PASS" : "FAIL") << " (" << rep.steps.size() << " records, "
        << failed << " failed)\n";
}

int cmd_simulate(const std::string& config_path) {
    ModelConfig cfg;
    try {
        cfg = parse_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    const std::string outdir = resolve_output_dir(cfg.output_dir);
    fs::create_directories(outdir);

    Trajectory traj = run_simulation(cfg.setup);

    AuditContext ctx{cfg.setup.grid, cfg.setup.params, cfg.setup.mode,
                     cfg.setup.boundary, cfg.setup.solver, cfg.audit_tol_factor};
    const AuditReport rep = run_audit(traj, ctx);

    for (size_t m = 0; m < traj.states.size(); ++m) {
        const fs::path p = fs::path(outdir) / state_filename(static_cast<int>(m));
        write_state_csv(p.string(), traj.states[m], cfg.setup.grid);
        if (cfg.write_vtk) {
            fs::path v = p;
            v.replace_extension(".vtk");
            write_state_vtk(v.string(), traj.states[m], cfg.setup.grid);
        }
    }
    write_ledger_csv((fs::path(outdir) / "ledger.csv").string(), traj, rep);
    write_audit_csv((fs::path(outdir) / "audit.csv").string(), rep);
    write_manifest((fs::path(outdir) / "manifest.txt").string(), cfg);

    std::cout << "simulate: wrote " << traj.states.size() << " states to " << outdir << "\n";
    if (traj.failed) {
        std::cerr << "simulate: solver failure: " << traj.failure << "\n";
        return 3;
    }
    print_audit_summary(rep, std::cout);
    return rep.pass ? 0 : 1;
}

int cmd_audit(const std::string& config_path, const std::string& traj_dir) {
    ModelConfig cfg;
    try {
        cfg = parse_config(config_path);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    Trajectory traj;
    traj.horizon = cfg.setup.horizon;
    traj.tau = cfg.setup.steps > 0 ? cfg.setup.horizon / cfg.setup.steps : 0.0;
    for (int m = 0;; ++m) {
        const fs::path p = fs::path(traj_dir) / state_filename(m);
        if (!fs::exists(p)) break;
        traj.states.push_back(read_state_csv(p.string(), cfg.setup.grid, cfg.setup.params.ncomp));
        traj.ledgers.push_back(total_energy(traj.states.back().u, traj.states.back().c,
                                            traj.states.back().z, cfg.setup.params, cfg.setup.grid,
                                            cfg.setup.boundary.at(traj.states.back().t)));
    }
    if (traj.states.empty()) {
        std::cerr << "audit: no state files found in " << traj_dir << "\n";
        return 2;
    }

    AuditContext ctx{cfg.setup.grid, cfg.setup.params, cfg.setup.mode,
                     cfg.setup.boundary, cfg.setup.solver, cfg.audit_tol_factor};
    const AuditReport rep = run_audit(traj, ctx);
    write_audit_csv((fs::path(traj_dir) / "audit_recheck.csv").string(), rep);
    print_audit_summary(rep, std::cout);
    return rep.pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coupled phase-separation / elasticity / damage simulator"};
    app.require_subcommand(1);

    std::string config_path, traj_dir, suite = "small";

    CLI::App* sim = app.add_subcommand("simulate", "run a simulation and certify it");
    sim->add_option("config", config_path, "configuration file")->required();

    CLI::App* aud = app.add_subcommand("audit", "re-certify a stored trajectory");
    aud->add_option("config", config_path, "configuration file")->required();
    aud->add_option("trajectory-dir", traj_dir, "directory with state_XXXX.csv files")->required();

    CLI::App* orc = app.add_subcommand("oracle-check", "run the small-instance cross checks");
    orc->add_option("--suite", suite, "check suite (small)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(config_path);
        if (aud->parsed()) return cmd_audit(config_path, traj_dir);
        if (orc->parsed()) {
            const int failures = run_oracle_suite(std::cout);
            std::cout << "oracle-check: " << (failures == 0 ? "PASS" : "FAIL") << "\n";
            return failures == 0 ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const StepFailure& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
