#include "phasedam/csv_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace phasedam {

const char* const kVersion = "0.1.0";

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string state_filename(int step) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "state_%04d.csv", step);
    return buf;
}

void write_state_csv(const std::string& path, const State& s, const Grid& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# t = " << fmt(s.t) << "\n";
    out << "cell,x,y";
    for (int k = 0; k < g.dim; ++k) out << ",u_" << (k == 0 ? "x" : "y");
    for (int k = 0; k < s.c.ncomp; ++k) out << ",c_" << (k + 1);
    for (int k = 0; k < s.w.ncomp; ++k) out << ",w_" << (k + 1);
    out << ",z\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int cell = g.id(i, j);
            out << cell << ',' << fmt(g.xc(i)) << ',' << fmt(g.dim == 2 ? g.yc(j) : 0.0);
            for (int k = 0; k < g.dim; ++k) out << ',' << fmt(s.u(cell, k));
            for (int k = 0; k < s.c.ncomp; ++k) out << ',' << fmt(s.c(cell, k));
            for (int k = 0; k < s.w.ncomp; ++k) out << ',' << fmt(s.w(cell, k));
            out << ',' << fmt(s.z(cell)) << "\n";
        }
}

State read_state_csv(const std::string& path, const Grid& g, int ncomp) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    State s;
    s.u = vector_field(g);
    s.c = concentration_field(g, ncomp);
    s.w = concentration_field(g, ncomp);
    s.z = scalar_field(g);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    {
        const size_t eq = line.find('=');
        if (line.rfind("# t", 0) != 0 || eq == std::string::npos)
            throw std::runtime_error(path + ": missing time header");
        s.t = std::stod(line.substr(eq + 1));
    }
    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing column header");
    const auto cols = split_csv(line);
    const int expected = 3 + g.dim + 2 * ncomp + 1;
    if (static_cast<int>(cols.size()) != expected)
        throw std::runtime_error(path + ": unexpected column count");

    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto vals = split_csv(line);
        if (static_cast<int>(vals.size()) != expected)
            throw std::runtime_error(path + ": malformed row");
        const int cell = std::stoi(vals[0]);
        if (cell < 0 || cell >= g.cells()) throw std::runtime_error(path + ": cell index out of range");
        int at = 3;
        for (int k = 0; k < g.dim; ++k) s.u(cell, k) = std::stod(vals[at++]);
        for (int k = 0; k < ncomp; ++k) s.c(cell, k) = std::stod(vals[at++]);
        for (int k = 0; k < ncomp; ++k) s.w(cell, k) = std::stod(vals[at++]);
        s.z(cell) = std::stod(vals[at++]);
        ++rows;
    }
    if (rows != g.cells()) throw std::runtime_error(path + ": row count does not match the grid");
    return s;
}

void write_ledger_csv(const std::string& path, const Trajectory& traj, const AuditReport& rep) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,t,gradient_c,gradient_z,chemical,elastic,reg_u,reg_z,total,"
           "s_dissipation,rate_dissipation,outer_iterations,joint_residual,"
           "energy_slack_half,energy_slack_sharp,el_residual_1,el_residual_2,el_residual_3,"
           "vi_min_slack,mass_drift,simplex_defect,z_increase,z_min,z_max,c_min,pass\n";
    for (size_t m = 0; m < traj.states.size(); ++m) {
        const EnergyLedger& led = traj.ledgers[m];
        out << m << ',' << fmt(traj.states[m].t) << ',' << fmt(led.gradient_c) << ','
            << fmt(led.gradient_z) << ',' << fmt(led.chemical) << ',' << fmt(led.elastic) << ','
            << fmt(led.reg_u) << ',' << fmt(led.reg_z) << ',' << fmt(led.total);
        if (m >= 1 && m - 1 < traj.diagnostics.size()) {
            const StepDiagnostics& d = traj.diagnostics[m - 1];
            out << ',' << fmt(d.s_dissipation) << ',' << fmt(d.rate_dissipation) << ','
                << d.outer_iterations << ',' << fmt(d.joint_residual);
        } else {
            out << ",0,0,0,0";
        }
        if (m < rep.steps.size()) {
            const StepAudit& a = rep.steps[m];
            out << ',' << fmt(a.energy_slack_half) << ',' << fmt(a.energy_slack_sharp) << ','
                << fmt(a.el_residual_1) << ',' << fmt(a.el_residual_2) << ','
                << fmt(a.el_residual_3) << ',' << fmt(a.vi_min_slack) << ',' << fmt(a.mass_drift)
                << ',' << fmt(a.simplex_defect) << ',' << fmt(a.z_increase) << ',' << fmt(a.z_min)
                << ',' << fmt(a.z_max) << ',' << fmt(a.c_min) << ',' << (a.pass ? 1 : 0);
        } else {
            out << ",0,0,0,0,0,0,0,0,0,0,0,0,1";
        }
        out << "\n";
    }
}

void write_audit_csv(const std::string& path, const AuditReport& rep) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,t,energy_slack_half,energy_slack_sharp,el_residual_1,el_residual_2,"
           "el_residual_3,vi_min_slack,r_pairing_min,r_support_violation,mass_drift,"
           "simplex_defect,z_increase,z_min,z_max,c_min,pass,failures\n";
    for (const auto& a : rep.steps) {
        out << a.step << ',' << fmt(a.t) << ',' << fmt(a.energy_slack_half) << ','
            << fmt(a.energy_slack_sharp) << ',' << fmt(a.el_residual_1) << ','
            << fmt(a.el_residual_2) << ',' << fmt(a.el_residual_3) << ',' << fmt(a.vi_min_slack)
            << ',' << fmt(a.r_pairing_min) << ',' << fmt(a.r_support_violation) << ','
            << fmt(a.mass_drift) << ',' << fmt(a.simplex_defect) << ',' << fmt(a.z_increase)
            << ',' << fmt(a.z_min) << ',' << fmt(a.z_max) << ',' << fmt(a.c_min) << ','
            << (a.pass ? 1 : 0) << ',';
        for (size_t i = 0; i < a.failures.size(); ++i)
            out << (i ? "; " : "") << a.failures[i];
        out << "\n";
    }
    out << "# overall: " << (rep.pass ? "pass" : "fail") << "\n";
    for (const auto& n : rep.notes) out << "# note: " << n << "\n";
}

void write_manifest(const std::string& path, const ModelConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# phasedam run manifest\n";
    out << "# version: " << kVersion << "\n";
    out << "# seed: " << cfg.seed << "\n";
    out << "# solver tol: " << fmt(cfg.setup.solver.tol) << "\n";
    out << "# audit tol: " << fmt(cfg.audit_tol_factor * cfg.setup.solver.tol) << "\n";
    out << "# cg tol: " << fmt(cfg.setup.solver.cg_tol) << "\n";
    out << "# --- configuration echo (re-parseable) ---\n";
    out << cfg.source_text;
    if (!cfg.source_text.empty() && cfg.source_text.back() != '\n') out << "\n";
}

void write_state_vtk(const std::string& path, const State& s, const Grid& g) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "# vtk DataFile Version 3.0\n";
    out << "phasedam state t=" << fmt(s.t) << "\n";
    out << "ASCII\nDATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.nx + 1 << ' ' << (g.dim == 2 ? g.ny + 1 : 2) << " 1\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << fmt(g.hx) << ' ' << fmt(g.dim == 2 ? g.hy : 1.0) << " 1\n";
    out << "CELL_DATA " << g.cells() << "\n";
    auto scalar = [&](const std::string& name, auto getter) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) out << fmt(getter(g.id(i, j))) << "\n";
    };
    scalar("z", [&](int c) { return s.z(c); });
    for (int k = 0; k < s.c.ncomp; ++k)
        scalar("c_" + std::to_string(k + 1), [&](int c) { return s.c(c, k); });
    for (int k = 0; k < g.dim; ++k)
        scalar(std::string("u_") + (k == 0 ? "x" : "y"), [&](int c) { return s.u(c, k); });
}

} // namespace phasedam
