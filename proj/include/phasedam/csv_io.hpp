// Fixed-schema CSV output (column order is part of the contract), the run
// manifest, trajectory reload for post-hoc audits, and optional legacy-VTK
// snapshots for external visualization.
#pragma once

#include "phasedam/config.hpp"
#include "phasedam/diagnostics.hpp"

#include <string>

namespace phasedam {

extern const char* const kVersion;

// state snapshot: "# t = <time>" header plus
// cell,x,y,u_x[,u_y],c_1..c_N,w_1..w_N,z
void write_state_csv(const std::string& path, const State& s, const Grid& g);
State read_state_csv(const std::string& path, const Grid& g, int ncomp);

// one row per state: every ledger entry, the step diagnostics and the audit
// columns of that step
void write_ledger_csv(const std::string& path, const Trajectory& traj, const AuditReport& rep);

void write_audit_csv(const std::string& path, const AuditReport& rep);

// verbatim configuration echo plus seed/version header; re-parseable as a
// configuration file
void write_manifest(const std::string& path, const ModelConfig& cfg);

void write_state_vtk(const std::string& path, const State& s, const Grid& g);

std::string state_filename(int step);

} // namespace phasedam
