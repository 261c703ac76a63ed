#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "phasedam_cli_test";

int run(const std::string& args) {
    const std::string cmd = std::string(PHASEDAM_BIN) + " " + args + " > " +
                            (kDir / "stdout.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string stdout_text() {
    std::ifstream in(kDir / "stdout.txt");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_config(const fs::path& path, const std::string& extra) {
    std::ofstream out(path);
    out << R"(
[grid]
dim = 1
cells = 8
extent = 1.0
dirichlet = xlo,xhi

[model]
mode = cahn-hilliard
chemical = poly

[chemistry]
gamma = 1e-3

[initial]
c0 = 0.5, 0.5
c0_perturb = 0.02

[run]
seed = 7
)" << extra;
}

} // namespace

TEST_CASE("command line drives simulate / audit / oracle-check") {
    fs::create_directories(kDir);

    SUBCASE("zero-step simulation writes exactly the initial state") {
        const fs::path cfg = kDir / "zero.cfg";
        const fs::path out = kDir / "zero_out";
        fs::remove_all(out);
        write_config(cfg, "[time]\nhorizon = 1.0\nsteps = 0\n[output]\ndir = " + out.string() + "\n");
        CHECK(run("simulate " + cfg.string()) == 0);
        CHECK(fs::exists(out / "state_0000.csv"));
        CHECK_FALSE(fs::exists(out / "state_0001.csv"));
        CHECK(fs::exists(out / "ledger.csv"));
        CHECK(fs::exists(out / "audit.csv"));
        CHECK(fs::exists(out / "manifest.txt"));
    }

    SUBCASE("audit of a simulation's own output passes") {
        const fs::path cfg = kDir / "run.cfg";
        const fs::path out = kDir / "run_out";
        fs::remove_all(out);
        write_config(cfg, "[time]\nhorizon = 0.2\nsteps = 4\n[output]\ndir = " + out.string() + "\n");
        CHECK(run("simulate " + cfg.string()) == 0);
        CHECK(run("audit " + cfg.string() + " " + out.string()) == 0);
        CHECK(stdout_text().find("PASS") != std::string::npos);
        CHECK(fs::exists(out / "audit_recheck.csv"));
    }

    SUBCASE("a corrupted stored trajectory fails the audit with exit code 1") {
        const fs::path cfg = kDir / "run2.cfg";
        const fs::path out = kDir / "run2_out";
        fs::remove_all(out);
        write_config(cfg, "[time]\nhorizon = 0.2\nsteps = 4\n[output]\ndir = " + out.string() + "\n");
        CHECK(run("simulate " + cfg.string()) == 0);
        // inject a damage increase into the stored state of step 2
        {
            std::ifstream in(out / "state_0002.csv");
            std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
            in.close();
            const size_t last_comma = text.rfind(',');
            text.replace(last_comma + 1, text.size() - last_comma - 2, "1.5");
            std::ofstream o(out / "state_0002.csv");
            o << text;
        }
        CHECK(run("audit " + cfg.string() + " " + out.string()) == 1);
    }

    SUBCASE("configuration errors exit with code 2") {
        const fs::path cfg = kDir / "bad.cfg";
        write_config(cfg, "[time]\nhorizon = 1.0\nsteps = 1\n[initial]\nz0 = 1.5\n");
        CHECK(run("simulate " + cfg.string()) == 2);
    }

    SUBCASE("output root override") {
        const fs::path cfg = kDir / "root.cfg";
        const fs::path root = kDir / "rooted";
        fs::remove_all(root);
        write_config(cfg, "[time]\nhorizon = 0.1\nsteps = 1\n[output]\ndir = rel_out\n");
        setenv("PHASEDAM_OUTPUT_ROOT", root.string().c_str(), 1);
        CHECK(run("simulate " + cfg.string()) == 0);
        unsetenv("PHASEDAM_OUTPUT_ROOT");
        CHECK(fs::exists(root / "rel_out" / "state_0000.csv"));
    }

    SUBCASE("oracle-check passes") {
        CHECK(run("oracle-check --suite small") == 0);
        const std::string text = stdout_text();
        CHECK(text.find("FAIL") == std::string::npos);
        CHECK(text.find("PASS") != std::string::npos);
    }
}
