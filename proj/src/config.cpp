#include "phasedam/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace phasedam {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct RawConfig {
    // "section.key" -> (value, line)
    std::map<std::string, std::pair<std::string, int>> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second.first;
    }
    int line_of(const std::string& key) const {
        auto it = kv.find(key);
        return it == kv.end() ? 0 : it->second.second;
    }
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header", lineno);
            section = lower(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", lineno);
        const std::string key = lower(trim(line.substr(0, eq)));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        raw.kv[section.empty() ? key : section + "." + key] = {value, lineno};
    }
    return raw;
}

double to_double(const RawConfig& raw, const std::string& key, double fallback,
                 std::vector<std::string>& bad) {
    if (!raw.has(key)) return fallback;
    try {
        size_t pos = 0;
        const std::string v = raw.get(key, "");
        const double x = std::stod(v, &pos);
        if (trim(v.substr(pos)).size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        bad.push_back(key + ": not a number (line " + std::to_string(raw.line_of(key)) + ")");
        return fallback;
    }
}

long to_long(const RawConfig& raw, const std::string& key, long fallback,
             std::vector<std::string>& bad) {
    if (!raw.has(key)) return fallback;
    try {
        size_t pos = 0;
        const std::string v = raw.get(key, "");
        const long x = std::stol(v, &pos);
        if (trim(v.substr(pos)).size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        bad.push_back(key + ": not an integer (line " + std::to_string(raw.line_of(key)) + ")");
        return fallback;
    }
}

bool to_bool(const RawConfig& raw, const std::string& key, bool fallback,
             std::vector<std::string>& bad) {
    if (!raw.has(key)) return fallback;
    const std::string v = lower(raw.get(key, ""));
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    bad.push_back(key + ": expected a boolean");
    return fallback;
}

std::vector<double> to_list(const RawConfig& raw, const std::string& key,
                            std::vector<double> fallback, std::vector<std::string>& bad) {
    if (!raw.has(key)) return fallback;
    std::vector<double> out;
    std::string v = raw.get(key, "");
    std::replace(v.begin(), v.end(), ',', ' ');
    std::istringstream in(v);
    double x;
    while (in >> x) out.push_back(x);
    if (!in.eof()) {
        bad.push_back(key + ": malformed number list (line " + std::to_string(raw.line_of(key)) + ")");
        return fallback;
    }
    return out;
}

// "t: v0 [v1 ...] ; t: v0 [v1 ...]" -> breakpoints
template <size_t N>
std::vector<std::pair<double, std::array<double, N>>> to_breakpoints(
    const RawConfig& raw, const std::string& key, std::vector<std::string>& bad) {
    std::vector<std::pair<double, std::array<double, N>>> out;
    if (!raw.has(key)) return out;
    std::istringstream chunks(raw.get(key, ""));
    std::string chunk;
    while (std::getline(chunks, chunk, ';')) {
        chunk = trim(chunk);
        if (chunk.empty()) continue;
        const size_t colon = chunk.find(':');
        if (colon == std::string::npos) {
            bad.push_back(key + ": expected 'time: values' entries separated by ';'");
            return {};
        }
        try {
            const double t = std::stod(trim(chunk.substr(0, colon)));
            std::string rest = chunk.substr(colon + 1);
            std::replace(rest.begin(), rest.end(), ',', ' ');
            std::istringstream vin(rest);
            std::array<double, N> vals{};
            size_t count = 0;
            double x;
            while (vin >> x && count < N) vals[count++] = x;
            if (count == 0) throw std::invalid_argument("no values");
            out.push_back({t, vals});
        } catch (const std::exception&) {
            bad.push_back(key + ": malformed breakpoint (line " + std::to_string(raw.line_of(key)) + ")");
            return {};
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

std::array<bool, 4> parse_dirichlet(const RawConfig& raw, const std::string& key, int dim,
                                    std::vector<std::string>& bad) {
    std::array<bool, 4> mask{false, false, false, false};
    const std::string v = lower(raw.get(key, "all"));
    if (v == "all") {
        mask = {true, true, true, true};
        if (dim == 1) mask[2] = mask[3] = false;
        return mask;
    }
    if (v == "none") return mask;
    std::string s = v;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        if (tok == "xlo") mask[FaceXLo] = true;
        else if (tok == "xhi") mask[FaceXHi] = true;
        else if (tok == "ylo") mask[FaceYLo] = true;
        else if (tok == "yhi") mask[FaceYHi] = true;
        else bad.push_back(key + ": unknown face '" + tok + "'");
    }
    return mask;
}

} // namespace

ModelConfig parse_config_text(const std::string& text, const std::string& origin) {
    RawConfig raw = tokenize(text); // throws ConfigError with line info
    std::vector<std::string> bad;

    ModelConfig cfg;
    cfg.source_text = text;

    // --- grid ---
    const int dim = static_cast<int>(to_long(raw, "grid.dim", 1, bad));
    std::vector<double> cells_d = to_list(raw, "grid.cells", {32}, bad);
    std::vector<double> extent = to_list(raw, "grid.extent", {1.0}, bad);
    std::vector<int> cells;
    for (double c : cells_d) cells.push_back(static_cast<int>(std::llround(c)));
    if (dim == 2 && cells.size() == 1) cells.push_back(cells[0]);
    if (dim == 2 && extent.size() == 1) extent.push_back(extent[0]);
    const std::array<bool, 4> mask = parse_dirichlet(raw, "grid.dirichlet", dim, bad);
    try {
        cfg.setup.grid = make_grid(dim, cells, extent, mask);
    } catch (const std::exception& e) {
        bad.push_back(std::string("grid: ") + e.what());
    }

    // --- model ---
    const std::string mode_s = lower(raw.get("model.mode", "cahn-hilliard"));
    if (mode_s == "cahn-hilliard") cfg.setup.mode = Mode::CahnHilliard;
    else if (mode_s == "allen-cahn") cfg.setup.mode = Mode::AllenCahn;
    else bad.push_back("model.mode: expected cahn-hilliard or allen-cahn");

    MaterialParams& mp = cfg.setup.params;
    mp.dim = dim;
    mp.ncomp = static_cast<int>(to_long(raw, "model.components", 2, bad));
    if (mp.ncomp < 2) {
        bad.push_back("model.components: need at least 2");
        mp.ncomp = 2;
    }

    const std::string chem_s = lower(raw.get("model.chemical", "poly"));
    if (chem_s == "poly") mp.chem = ChemKind::Poly;
    else if (chem_s == "log") mp.chem = ChemKind::Log;
    else bad.push_back("model.chemical: expected poly or log");

    // --- chemistry ---
    const double gamma = to_double(raw, "chemistry.gamma", 1.0, bad);
    try {
        if (raw.has("chemistry.gamma_matrix")) {
            const auto gl = to_list(raw, "chemistry.gamma_matrix", {}, bad);
            if (static_cast<int>(gl.size()) != mp.ncomp * mp.ncomp) {
                bad.push_back("chemistry.gamma_matrix: need N*N entries");
            } else {
                DenseMat gm(mp.ncomp);
                gm.a = gl;
                mp.gamma = GradientTensor(gm);
            }
        } else {
            mp.gamma = GradientTensor::isotropic(gamma, mp.ncomp);
        }
    } catch (const std::exception& e) {
        bad.push_back(std::string("chemistry.gamma: ") + e.what());
    }
    mp.theta_w = to_double(raw, "chemistry.theta_w", 1.0, bad);
    mp.chem_offset = to_double(raw, "chemistry.offset", 0.0, bad);
    mp.theta = to_double(raw, "chemistry.theta", 1.0, bad);
    mp.delta = to_double(raw, "chemistry.delta", 0.01, bad);
    mp.delta0 = to_double(raw, "chemistry.delta0", 0.3, bad);
    {
        mp.A = DenseMat(mp.ncomp);
        const auto al = to_list(raw, "chemistry.a", {}, bad);
        if (!al.empty()) {
            if (static_cast<int>(al.size()) != mp.ncomp * mp.ncomp)
                bad.push_back("chemistry.A: need N*N entries");
            else
                mp.A.a = al;
        }
    }
    {
        const auto ml = to_list(raw, "chemistry.mobility", {}, bad);
        try {
            if (ml.empty()) {
                mp.mobility = Mobility::standard(mp.ncomp);
            } else if (static_cast<int>(ml.size()) != mp.ncomp * mp.ncomp) {
                bad.push_back("chemistry.mobility: need N*N entries");
                mp.mobility = Mobility::standard(mp.ncomp);
            } else {
                DenseMat mm(mp.ncomp);
                mm.a = ml;
                mp.mobility = Mobility(mm);
            }
        } catch (const std::exception& e) {
            bad.push_back(std::string("chemistry.mobility: ") + e.what());
        }
    }

    // --- damage ---
    mp.alpha = to_double(raw, "damage.alpha", 1.0, bad);
    mp.beta = to_double(raw, "damage.beta", 1.0, bad);
    mp.eta_tilde = to_double(raw, "damage.eta_tilde", 0.01, bad);
    {
        const std::string phi_s = lower(raw.get("damage.phi", "quadratic"));
        if (phi_s == "quadratic") mp.phi_kind = PhiKind::Quadratic;
        else if (phi_s == "linear") mp.phi_kind = PhiKind::Linear;
        else bad.push_back("damage.phi: expected quadratic or linear");
    }

    // --- regularization ---
    mp.epsilon = to_double(raw, "regularization.epsilon", 0.0, bad);
    mp.p = to_double(raw, "regularization.p", 4.0, bad);

    // --- elasticity ---
    {
        mp.mu = to_list(raw, "elasticity.mu", std::vector<double>(mp.ncomp, 0.5), bad);
        mp.lambda = to_list(raw, "elasticity.lambda", std::vector<double>(mp.ncomp, 0.0), bad);
        const auto es = to_list(raw, "elasticity.eigenstrain",
                                std::vector<double>(mp.ncomp, 0.0), bad);
        if (static_cast<int>(mp.mu.size()) != mp.ncomp)
            bad.push_back("elasticity.mu: need one value per phase");
        if (static_cast<int>(mp.lambda.size()) != mp.ncomp)
            bad.push_back("elasticity.lambda: need one value per phase");
        mp.estar.assign(mp.ncomp, SymTensor{0.0, 0.0, 0.0});
        if (static_cast<int>(es.size()) == mp.ncomp) {
            for (int k = 0; k < mp.ncomp; ++k)
                mp.estar[k] = SymTensor{es[k], dim == 2 ? es[k] : 0.0, 0.0}; // dilatational
        } else if (static_cast<int>(es.size()) == 3 * mp.ncomp) {
            for (int k = 0; k < mp.ncomp; ++k)
                mp.estar[k] = SymTensor{es[3 * k], es[3 * k + 1], es[3 * k + 2]};
        } else {
            bad.push_back("elasticity.eigenstrain: need one scalar or one xx,yy,xy triple per phase");
        }
        mp.mu.resize(mp.ncomp, 0.5);
        mp.lambda.resize(mp.ncomp, 0.0);
    }

    // --- time ---
    cfg.setup.horizon = to_double(raw, "time.horizon", 1.0, bad);
    cfg.setup.steps = static_cast<int>(to_long(raw, "time.steps", 1, bad));
    if (cfg.setup.steps < 0) bad.push_back("time.steps: must be nonnegative");
    if (cfg.setup.horizon <= 0.0) bad.push_back("time.horizon: must be positive");

    // --- boundary ---
    {
        BoundarySpec& bs = cfg.setup.boundary;
        const bool affine = raw.has("boundary.affine_a") || raw.has("boundary.affine_b");
        if (affine) {
            bs.affine = true;
            const auto av = to_breakpoints<2>(raw, "boundary.affine_a", bad);
            const auto bv = to_breakpoints<4>(raw, "boundary.affine_b", bad);
            std::vector<double> times;
            for (const auto& p : av) times.push_back(p.first);
            for (const auto& p : bv) times.push_back(p.first);
            std::sort(times.begin(), times.end());
            times.erase(std::unique(times.begin(), times.end()), times.end());
            if (times.empty()) times.push_back(0.0);
            auto eval2 = [&](const std::vector<std::pair<double, std::array<double, 2>>>& bp, double t) {
                std::array<double, 2> out{};
                if (bp.empty()) return out;
                if (t <= bp.front().first) return bp.front().second;
                if (t >= bp.back().first) return bp.back().second;
                size_t i = 0;
                while (i + 1 < bp.size() && bp[i + 1].first <= t) ++i;
                const double f = (t - bp[i].first) / (bp[i + 1].first - bp[i].first);
                for (int k = 0; k < 2; ++k)
                    out[k] = bp[i].second[k] + f * (bp[i + 1].second[k] - bp[i].second[k]);
                return out;
            };
            auto eval4 = [&](const std::vector<std::pair<double, std::array<double, 4>>>& bp, double t) {
                std::array<double, 4> out{};
                if (bp.empty()) return out;
                if (t <= bp.front().first) return bp.front().second;
                if (t >= bp.back().first) return bp.back().second;
                size_t i = 0;
                while (i + 1 < bp.size() && bp[i + 1].first <= t) ++i;
                const double f = (t - bp[i].first) / (bp[i + 1].first - bp[i].first);
                for (int k = 0; k < 4; ++k)
                    out[k] = bp[i].second[k] + f * (bp[i + 1].second[k] - bp[i].second[k]);
                return out;
            };
            for (double t : times) {
                const auto a = eval2(av, t);
                const auto B = eval4(bv, t);
                bs.affine_bp.push_back({t, {a[0], a[1], B[0], B[1], B[2], B[3]}});
            }
            for (const char* k : {"boundary.b_xlo", "boundary.b_xhi", "boundary.b_ylo", "boundary.b_yhi"})
                if (raw.has(k)) bad.push_back(std::string(k) + ": per-face values cannot be mixed with the affine form");
        } else {
            const char* keys[4] = {"boundary.b_xlo", "boundary.b_xhi", "boundary.b_ylo",
                                   "boundary.b_yhi"};
            for (int f = 0; f < 4; ++f) {
                auto bp = to_breakpoints<2>(raw, keys[f], bad);
                if (bp.empty()) bp.push_back({0.0, {0.0, 0.0}});
                bs.face_bp[f] = std::move(bp);
            }
            // a trace-consistent extension needs single-axis loading or equal values
            const Grid& g = cfg.setup.grid;
            const bool x_active = g.dirichlet[FaceXLo] || g.dirichlet[FaceXHi];
            const bool y_active = dim == 2 && (g.dirichlet[FaceYLo] || g.dirichlet[FaceYHi]);
            if (x_active && y_active) {
                bool all_equal = true;
                for (int f = 0; f < 4; ++f)
                    for (const auto& p : bs.face_bp[f])
                        for (const auto& q : bs.face_bp[0])
                            if (std::abs(p.second[0] - q.second[0]) > 0.0 ||
                                std::abs(p.second[1] - q.second[1]) > 0.0)
                                all_equal = false;
                if (!all_equal)
                    bad.push_back("boundary: per-face data on both axes must agree; "
                                  "use the affine form for multi-axis loading");
            }
        }
    }

    // --- solver ---
    cfg.setup.solver.tol = to_double(raw, "solver.tol", 1e-9, bad);
    cfg.setup.solver.max_outer = static_cast<int>(to_long(raw, "solver.max_outer", 200, bad));
    cfg.setup.solver.max_inner = static_cast<int>(to_long(raw, "solver.max_inner", 500, bad));
    cfg.setup.solver.cg_tol = to_double(raw, "solver.cg_tol", 1e-12, bad);
    cfg.setup.solver.cg_max_iter = static_cast<int>(to_long(raw, "solver.cg_max_iter", 0, bad));
    cfg.setup.solver.z_zero_tol = to_double(raw, "solver.z_zero_tol", 1e-10, bad);
    if (cfg.setup.solver.tol <= 0.0) bad.push_back("solver.tol: must be positive");
    cfg.audit_tol_factor = to_double(raw, "solver.audit_tol_factor", 10.0, bad);

    // --- output / run ---
    cfg.output_dir = raw.get("output.dir", "out");
    cfg.write_vtk = to_bool(raw, "output.write_vtk", false, bad);
    cfg.seed = static_cast<unsigned long>(to_long(raw, "run.seed", 0, bad));

    // --- initial data ---
    if (cfg.setup.grid.cells() > 0) {
        const Grid& g = cfg.setup.grid;
        cfg.setup.c0 = concentration_field(g, mp.ncomp);
        cfg.setup.z0 = scalar_field(g);

        auto c0v = to_list(raw, "initial.c0", std::vector<double>(mp.ncomp, 1.0 / mp.ncomp), bad);
        if (static_cast<int>(c0v.size()) != mp.ncomp) {
            bad.push_back("initial.c0: need one value per component");
            c0v.assign(mp.ncomp, 1.0 / mp.ncomp);
        }
        const double z0v = to_double(raw, "initial.z0", 1.0, bad);
        for (int cell = 0; cell < g.cells(); ++cell) {
            for (int k = 0; k < mp.ncomp; ++k) cfg.setup.c0(cell, k) = c0v[k];
            cfg.setup.z0(cell) = z0v;
        }

        const double amp = to_double(raw, "initial.c0_perturb", 0.0, bad);
        const std::string kind = lower(raw.get("initial.c0_perturb_kind", "sin"));
        if (amp != 0.0) {
            if (kind == "sin") {
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        double pat = std::cos(kTwoPi * g.xc(i) / g.lx);
                        if (dim == 2) pat *= std::cos(kTwoPi * g.yc(j) / g.ly);
                        const int cell = g.id(i, j);
                        cfg.setup.c0(cell, 0) += amp * pat;
                        cfg.setup.c0(cell, 1) -= amp * pat;
                    }
            } else if (kind == "random") {
                std::mt19937_64 rng(cfg.seed);
                std::uniform_real_distribution<double> uni(-1.0, 1.0);
                std::vector<double> pat(g.cells());
                double mean = 0.0;
                for (int cell = 0; cell < g.cells(); ++cell) {
                    pat[cell] = uni(rng);
                    mean += pat[cell];
                }
                mean /= g.cells();
                for (int cell = 0; cell < g.cells(); ++cell) {
                    cfg.setup.c0(cell, 0) += amp * (pat[cell] - mean);
                    cfg.setup.c0(cell, 1) -= amp * (pat[cell] - mean);
                }
            } else {
                bad.push_back("initial.c0_perturb_kind: expected sin or random");
            }
        }
    }

    // --- semantic validation (collect everything) ---
    if (cfg.setup.grid.cells() > 0) {
        const Grid& g = cfg.setup.grid;
        if (!g.any_dirichlet())
            bad.push_back("grid.dirichlet: elasticity is active, at least one face must be Dirichlet");
        if (mp.chem == ChemKind::Log && !g.all_dirichlet())
            bad.push_back("logarithmic chemistry requires the whole boundary to be Dirichlet");
        for (const auto& v : mp.validate()) bad.push_back("params: " + v);

        for (int cell = 0; cell < g.cells() && cfg.setup.z0.cells() == g.cells(); ++cell) {
            if (cfg.setup.z0(cell) < 0.0 || cfg.setup.z0(cell) > 1.0) {
                bad.push_back("initial.z0: damage out of [0,1]");
                break;
            }
        }
        if (cfg.setup.c0.cells() == g.cells()) {
            double defect = 0.0;
            double cmin = 1e300;
            for (int cell = 0; cell < g.cells(); ++cell) {
                double s = -1.0;
                for (int k = 0; k < mp.ncomp; ++k) {
                    s += cfg.setup.c0(cell, k);
                    cmin = std::min(cmin, cfg.setup.c0(cell, k));
                }
                defect = std::max(defect, std::abs(s));
            }
            if (defect > 1e-9) bad.push_back("initial.c0: concentrations must sum to 1");
            if (mp.chem == ChemKind::Log && cmin <= 0.0)
                bad.push_back("initial.c0: logarithmic chemistry requires strictly positive concentrations");
        }
    }

    if (!bad.empty()) {
        std::string msg = origin + ": invalid configuration:";
        for (const auto& b : bad) msg += "\n  - " + b;
        throw ConfigError(msg, 0, bad);
    }
    return cfg;
}

ModelConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace phasedam
