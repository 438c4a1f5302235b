#include "bosupp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>

#include <json.hpp>

#include "bosupp/analytics.hpp"
#include "bosupp/channels.hpp"
#include "bosupp/codes.hpp"
#include "bosupp/protocols.hpp"

namespace bosupp {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& s) {
    size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("'" + s + "' is not a number");
    }
    if (used != s.size()) throw std::invalid_argument("'" + s + "' is not a number");
    return v;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
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

}  // namespace

double Descriptor::num(const std::string& key, double fallback) const {
    auto it = named.find(key);
    if (it == named.end()) return fallback;
    return parse_number(it->second);
}

int Descriptor::integer(const std::string& key, int fallback) const {
    auto it = named.find(key);
    if (it == named.end()) return fallback;
    double v = parse_number(it->second);
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
        throw std::invalid_argument(name + "(" + key + "=...) expects an integer");
    return static_cast<int>(r);
}

std::string Descriptor::str(const std::string& key, const std::string& fallback) const {
    auto it = named.find(key);
    return it == named.end() ? fallback : it->second;
}

Descriptor parse_descriptor(const std::string& text) {
    Descriptor d;
    d.text = trim(text);
    const std::string& s = d.text;
    if (s.empty()) throw std::invalid_argument("empty descriptor");
    size_t open = s.find('(');
    if (open == std::string::npos) {
        d.name = s;
        return d;
    }
    if (s.back() != ')')
        throw std::invalid_argument("descriptor '" + s + "' is missing the closing ')'");
    d.name = trim(s.substr(0, open));
    if (d.name.empty()) throw std::invalid_argument("descriptor '" + s + "' has no name");
    std::string inner = trim(s.substr(open + 1, s.size() - open - 2));
    if (inner.empty()) return d;
    for (const std::string& piece_raw : split_commas(inner)) {
        std::string piece = trim(piece_raw);
        if (piece.empty())
            throw std::invalid_argument("descriptor '" + s + "' has an empty argument");
        size_t eq = piece.find('=');
        if (eq == std::string::npos) {
            d.positional.push_back(parse_number(piece));
        } else {
            std::string key = trim(piece.substr(0, eq));
            std::string val = trim(piece.substr(eq + 1));
            if (key.empty() || val.empty())
                throw std::invalid_argument("descriptor '" + s + "': bad argument '" + piece + "'");
            d.named[key] = val;
        }
    }
    return d;
}

std::string AveragingMode::describe() const {
    switch (kind) {
        case Kind::exact_haar:
            return "exact-haar";
        case Kind::monte_carlo:
            return "monte-carlo(n=" + std::to_string(samples) + ",seed=" + std::to_string(seed) +
                   ")";
        case Kind::fixed_state: {
            std::string s = "fixed-state(c0=" + fmt(c0.real()) + ",c1=" + fmt(c1.real());
            if (c0.imag() != 0.0) s += ",c0_im=" + fmt(c0.imag());
            if (c1.imag() != 0.0) s += ",c1_im=" + fmt(c1.imag());
            return s + ")";
        }
    }
    return "?";
}

namespace {

AveragingMode parse_averaging(const Descriptor& d) {
    AveragingMode av;
    if (d.name == "exact-haar") {
        av.kind = AveragingMode::Kind::exact_haar;
    } else if (d.name == "monte-carlo") {
        av.kind = AveragingMode::Kind::monte_carlo;
        av.samples = d.integer("n", d.integer("samples", 2000));
        if (av.samples < 1) throw std::invalid_argument("monte-carlo needs n >= 1");
        double sd = d.num("seed", 1.0);
        if (sd < 0) throw std::invalid_argument("monte-carlo seed must be non-negative");
        av.seed = static_cast<unsigned long long>(sd);
    } else if (d.name == "fixed-state") {
        av.kind = AveragingMode::Kind::fixed_state;
        av.c0 = cplx(d.num("c0", 1.0), d.num("c0_im", 0.0));
        av.c1 = cplx(d.num("c1", 0.0), d.num("c1_im", 0.0));
        double norm = std::sqrt(std::norm(av.c0) + std::norm(av.c1));
        if (norm < 1e-12) throw std::invalid_argument("fixed-state coefficients are all zero");
        av.c0 /= norm;
        av.c1 /= norm;
    } else {
        throw std::invalid_argument("unknown averaging mode '" + d.name +
                                    "' (exact-haar | monte-carlo | fixed-state)");
    }
    return av;
}

const std::vector<std::string> kAxes = {"mu", "eta", "nbar", "z", "p", "bell_p"};

SweepAxis parse_sweep(const std::string& val) {
    size_t colon = val.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("sweep expects 'param: v1, v2, ...'");
    SweepAxis axis;
    axis.param = trim(val.substr(0, colon));
    if (std::find(kAxes.begin(), kAxes.end(), axis.param) == kAxes.end())
        throw std::invalid_argument("unknown sweep parameter '" + axis.param +
                                    "' (mu, eta, nbar, z, p, bell_p)");
    for (const std::string& piece : split_commas(val.substr(colon + 1)))
        axis.grid.push_back(parse_number(trim(piece)));
    if (axis.grid.empty()) throw std::invalid_argument("sweep grid is empty");
    for (size_t i = 1; i < axis.grid.size(); ++i)
        if (!(axis.grid[i] > axis.grid[i - 1]))
            throw std::invalid_argument("sweep grid must be strictly increasing");
    return axis;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
    ExperimentConfig cfg;
    cfg.cv = parse_descriptor("none");
    cfg.dv = parse_descriptor("none");
    cfg.protocol = parse_descriptor("none");
    bool have_code = false, have_sweep = false;
    std::string line;
    int no = 0;
    auto fail = [&](const std::string& what) -> void {
        throw std::invalid_argument(origin + ":" + std::to_string(no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) fail("missing key before '='");
        try {
            if (key == "code") {
                cfg.code = parse_descriptor(val);
                have_code = true;
            } else if (key == "cv") {
                cfg.cv = parse_descriptor(val);
            } else if (key == "dv") {
                cfg.dv = parse_descriptor(val);
            } else if (key == "protocol") {
                cfg.protocol = parse_descriptor(val);
            } else if (key == "sweep") {
                cfg.sweep = parse_sweep(val);
                have_sweep = true;
            } else if (key == "averaging") {
                cfg.averaging = parse_averaging(parse_descriptor(val));
            } else if (key == "output") {
                cfg.output = val;
            } else if (key == "dim") {
                cfg.dim = static_cast<int>(parse_number(val));
            } else if (key == "guard") {
                cfg.guard = static_cast<int>(parse_number(val));
            } else if (key == "seed") {
                cfg.seed = static_cast<unsigned long long>(parse_number(val));
            } else if (key == "jobs") {
                cfg.jobs = static_cast<int>(parse_number(val));
            } else if (key == "assume") {
                cfg.assumptions.push_back(val);
            } else {
                fail("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            std::string what = e.what();
            if (what.rfind(origin, 0) == 0) throw;  // already carries context
            fail("field '" + key + "': " + what);
        }
    }
    if (!have_sweep) throw std::invalid_argument(origin + ": missing 'sweep'");
    if (!have_code && cfg.protocol.name != "teleport")
        throw std::invalid_argument(origin + ": missing 'code'");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

namespace {

// ---- descriptor resolution -------------------------------------------------

struct CvResolve {
    std::string kind;  // none | loss | thermal | gdn | muz
    double mu = 0.0;
    double G = 1.0;
    double eta = 0.0;   // thermal-family strength for the fidelity closed form
    double nbar = 0.0;
    double z = 0.0;
    bool has_params = true;
    bool thermal_like = false;
};

double require_arg(const Descriptor& d, const std::string& key) {
    if (!d.has(key))
        throw std::invalid_argument(d.name + "(...) needs " + key + "=");
    return d.num(key, 0.0);
}

CvResolve resolve_cv(const Descriptor& d, const std::string& axis, double v) {
    CvResolve r;
    r.kind = d.name;
    if (d.name == "none") {
        r.thermal_like = true;
        return r;
    }
    if (d.name == "loss") {
        double mu;
        if (axis == "mu" || axis == "eta") mu = v;
        else if (d.has("mu")) mu = d.num("mu", 0.0);
        else if (d.has("eta")) mu = d.num("eta", 0.0);
        else throw std::invalid_argument("loss(...) needs mu= (or eta=)");
        CvNoiseParams p = cv_params(mu, 1.0);
        r.mu = p.mu; r.G = p.G;
        r.thermal_like = true;
        r.eta = mu;
        return r;
    }
    if (d.name == "thermal") {
        double eta = axis == "eta" ? v : require_arg(d, "eta");
        double nbar = axis == "nbar" ? v : require_arg(d, "nbar");
        CvNoiseParams p = thermal_params(eta, nbar);
        r.mu = p.mu; r.G = p.G;
        r.thermal_like = true;
        r.eta = eta; r.nbar = nbar;
        return r;
    }
    if (d.name == "gdn") {
        double eta = axis == "eta" ? v : require_arg(d, "eta");
        CvNoiseParams p = gdn_params(eta);
        r.mu = p.mu; r.G = p.G;
        r.eta = eta;
        return r;
    }
    if (d.name == "muz") {
        double mu = axis == "mu" ? v : require_arg(d, "mu");
        double z = axis == "z" ? v : require_arg(d, "z");
        if (z < 0.0 || z >= 1.0) throw std::invalid_argument("muz needs 0 <= z < 1");
        CvNoiseParams p = cv_params(mu, 1.0 / (1.0 - z));
        r.mu = p.mu; r.G = p.G; r.z = z;
        return r;
    }
    throw std::invalid_argument("unknown cv channel '" + d.name +
                                "' (none, loss, thermal, gdn, muz)");
}

KrausChannel build_cv_channel(const CvResolve& r, const FockSpace& space) {
    if (r.kind == "none") return identity_channel(space.dim);
    if (r.kind == "loss") return loss_channel(r.mu, space);
    if (r.kind == "thermal") return thermal_channel(r.eta, r.nbar, space);
    if (r.kind == "gdn") return gdn_channel(r.eta, space);
    // muz: amplification after loss with independent parameters
    if (r.z > 1e-15) return compose(amp_channel(r.G, space), loss_channel(r.mu, space));
    return loss_channel(r.mu, space);
}

struct DvResolve {
    std::string kind;  // none | qubit_damp | qutrit_damp | depol
    double p = 0.0;
    QubitDampKind qubit_kind = QubitDampKind::composite;
    QutritDampKind qutrit_kind = QutritDampKind::composite;
    bool trivial = true;
};

DvResolve resolve_dv(const Descriptor& d, const std::string& axis, double v) {
    DvResolve r;
    r.kind = d.name;
    if (d.name == "none") return r;
    r.trivial = false;
    if (d.name == "qubit_damp" || d.name == "qutrit_damp") {
        r.p = axis == "p" ? v : require_arg(d, "p");
        if (r.p < 0.0 || r.p > 1.0)
            throw std::invalid_argument(d.name + " needs 0 <= p <= 1");
        std::string kind = d.str("kind", "composite");
        if (d.name == "qubit_damp") {
            if (kind == "amplitude") r.qubit_kind = QubitDampKind::amplitude;
            else if (kind == "phase") r.qubit_kind = QubitDampKind::phase;
            else if (kind == "composite") r.qubit_kind = QubitDampKind::composite;
            else throw std::invalid_argument("qubit_damp kind must be amplitude, phase or composite");
        } else {
            if (kind == "cascaded_ad") r.qutrit_kind = QutritDampKind::cascaded_ad;
            else if (kind == "mid_pd") r.qutrit_kind = QutritDampKind::mid_pd;
            else if (kind == "composite") r.qutrit_kind = QutritDampKind::composite;
            else throw std::invalid_argument(
                "qutrit_damp kind must be cascaded_ad, mid_pd or composite");
        }
        return r;
    }
    if (d.name == "depol") {
        r.p = axis == "p" ? v : require_arg(d, "eta");
        if (r.p < 0.0 || r.p > 1.0) throw std::invalid_argument("depol needs 0 <= eta <= 1");
        return r;
    }
    throw std::invalid_argument("unknown dv channel '" + d.name +
                                "' (none, qubit_damp, qutrit_damp, depol)");
}

KrausChannel build_dv_channel(const DvResolve& r) {
    if (r.kind == "none") return identity_channel(2);
    if (r.kind == "qubit_damp") return qubit_damping(r.p, r.qubit_kind);
    if (r.kind == "qutrit_damp") return qutrit_damping(r.p, r.qutrit_kind);
    return depolarizing(r.p);
}

Code build_code(const Descriptor& d, const FockSpace& space) {
    auto want = [&](size_t n) {
        if (d.positional.size() != n)
            throw std::invalid_argument("code " + d.name + " expects " + std::to_string(n) +
                                        " positional arguments");
    };
    auto as_int = [&](double v) {
        double r = std::round(v);
        if (std::abs(v - r) > 1e-9)
            throw std::invalid_argument("code " + d.text + ": expected an integer argument");
        return static_cast<int>(r);
    };
    if (d.name == "cat") {
        want(2);
        return cat_code(as_int(d.positional[0]), d.positional[1], space);
    }
    if (d.name == "bin") {
        want(2);
        return binomial_code(as_int(d.positional[0]), as_int(d.positional[1]), space);
    }
    if (d.name == "gkp") {
        want(1);
        return gkp_code(d.positional[0], space);
    }
    if (d.name == "sqcat") {
        want(3);
        return squeezed_cat(as_int(d.positional[0]), d.positional[1], d.positional[2], space);
    }
    throw std::invalid_argument("unknown code '" + d.name + "' (cat, bin, gkp, sqcat)");
}

// ---- experiment context ----------------------------------------------------

struct Context {
    const ExperimentConfig& cfg;
    FockSpace space;
    bool has_code = false;
    Code code;
    Mat c_l;
    CodeMoments mom{};
    ParityClass pc{};
    std::vector<PqpLayer> pqp_layers;

    Context(const ExperimentConfig& c, const FockSpace& s) : cfg(c), space(s) {}
};

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dim < 4) throw std::invalid_argument("dim must be at least 4");
    if (cfg.guard < 0 || cfg.guard >= cfg.dim)
        throw std::invalid_argument("guard must satisfy 0 <= guard < dim");
    if (cfg.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    const std::string& ax = cfg.sweep.param;
    for (double v : cfg.sweep.grid) {
        if ((ax == "p" || ax == "bell_p") && (v < 0.0 || v > 1.0))
            throw std::invalid_argument("sweep value " + fmt(v) + " outside [0, 1] for " + ax);
        if ((ax == "mu" || ax == "eta" || ax == "z") && (v < 0.0 || v >= 1.0))
            throw std::invalid_argument("sweep value " + fmt(v) + " outside [0, 1) for " + ax);
        if (ax == "nbar" && v < 0.0)
            throw std::invalid_argument("sweep value " + fmt(v) + " negative for nbar");
        resolve_cv(cfg.cv, ax, v);
        resolve_dv(cfg.dv, ax, v);
    }
    const std::string& pn = cfg.protocol.name;
    if (pn == "cf") {
        int K = cfg.protocol.integer("K", 1);
        if (K < 1 || K > 7) throw std::invalid_argument("cf supports K in 1..7");
    } else if (pn == "pqp") {
        int L = cfg.protocol.integer("L", 1);
        if (L < 0) throw std::invalid_argument("pqp needs L >= 0");
        if (ax != "p")
            throw std::invalid_argument("pqp sweeps the ancilla damping strength (sweep p)");
    } else if (pn == "qutrit") {
        int j = cfg.protocol.integer("herald", 0);
        if (j < 0 || j > 2) throw std::invalid_argument("qutrit herald must be 0, 1 or 2");
        if (cfg.dv.name != "none" && cfg.dv.name != "qutrit_damp")
            throw std::invalid_argument("qutrit protocol expects dv none or qutrit_damp");
        if (cfg.dv.name == "qutrit_damp" && cfg.dv.str("kind", "composite") != "composite")
            throw std::invalid_argument("qutrit protocol applies composite damping only");
    } else if (pn == "comm") {
        std::string h = cfg.protocol.str("herald", "00");
        if (h != "00" && h != "00_11")
            throw std::invalid_argument("comm herald must be 00 or 00_11");
    } else if (pn == "bypass") {
        if (cfg.protocol.integer("gates", 8) < 1)
            throw std::invalid_argument("bypass needs gates >= 1");
    } else if (pn != "none" && pn != "teleport") {
        throw std::invalid_argument("unknown protocol '" + pn +
                                    "' (none, cf, pqp, qutrit, comm, bypass, teleport)");
    }
    if (cfg.averaging.kind != AveragingMode::Kind::exact_haar && pn == "pqp")
        throw std::invalid_argument("pqp requires exact-haar averaging (the optimizer target)");
}

Context make_context(const ExperimentConfig& cfg) {
    Context ctx(cfg, FockSpace(cfg.dim, cfg.guard));
    if (cfg.protocol.name != "teleport") {
        ctx.code = build_code(cfg.code, ctx.space);
        ctx.c_l = codespace_identity(ctx.code);
        ctx.mom = moments(ctx.code);
        ctx.pc = parity_class(ctx.code);
        ctx.has_code = true;
    }
    if (cfg.protocol.name == "cf" && cfg.protocol.integer("shortcut", 0) != 0) {
        // surface an inapplicable shortcut as a config error, not a row abort
        parity_shortcut(ctx.code, cf_spec(cfg.protocol.integer("K", 1)));
    }
    if (cfg.protocol.name == "pqp") {
        int L = cfg.protocol.integer("L", 1);
        if (L > 0) {
            CvResolve cv = resolve_cv(cfg.cv, "", 0.0);
            KrausChannel chan = build_cv_channel(cv, ctx.space);
            unsigned seed = static_cast<unsigned>(cfg.protocol.integer("opt_seed", 17));
            PqpOptResult opt = optimize_pqp(ctx.code, chan, L, seed);
            ctx.pqp_layers = opt.layers;
        }
    }
    return ctx;
}

// ---- row evaluation --------------------------------------------------------

constexpr double kStarveFloor = 1e-12;

struct Averaged {
    double f = 0.0;
    double p = 0.0;
    double leak = 0.0;
    double se = 0.0;
};

Averaged average_runner(const Context& ctx, const std::function<Mat(const Mat&)>& runner,
                        int row_index) {
    const AveragingMode& av = ctx.cfg.averaging;
    Averaged out;
    if (av.kind == AveragingMode::Kind::exact_haar) {
        HaarAverages ha = haar_averaged_fidelity(ctx.code, runner);
        if (ha.p < kStarveFloor)
            throw std::runtime_error("herald starvation: average success probability below 1e-12");
        Mat avg = runner(ctx.c_l);
        out.f = ha.fidelity;
        out.p = ha.p;
        out.leak = leakage_weight(avg, ctx.space) / std::max(avg.trace().real(), kStarveFloor);
        return out;
    }
    if (av.kind == AveragingMode::Kind::fixed_state) {
        State in = logical_state(ctx.code, av.c0, av.c1);
        Mat o = runner(in.rho);
        double w = o.trace().real();
        if (w < kStarveFloor)
            throw std::runtime_error("herald starvation: success probability below 1e-12");
        out.p = w;
        out.f = (in.rho * o).trace().real() / w;
        out.leak = leakage_weight(o, ctx.space) / w;
        return out;
    }
    double sum_f = 0.0, sum_f2 = 0.0, sum_p = 0.0, sum_leak = 0.0;
    for (int i = 0; i < av.samples; ++i) {
        unsigned long long seed = av.seed * 0x9e3779b97f4a7c15ULL +
                                  static_cast<unsigned long long>(row_index) * 1000003ULL +
                                  static_cast<unsigned long long>(i);
        State in = haar_sample(ctx.code, static_cast<unsigned long>(seed));
        Mat o = runner(in.rho);
        double ft = (in.rho * o).trace().real();
        sum_f += ft;
        sum_f2 += ft * ft;
        sum_p += o.trace().real();
        sum_leak += leakage_weight(o, ctx.space);
    }
    double mp = sum_p / av.samples;
    if (mp < kStarveFloor)
        throw std::runtime_error("herald starvation: average success probability below 1e-12");
    double mf = sum_f / av.samples;
    out.f = mf / mp;
    out.p = mp;
    out.leak = (sum_leak / av.samples) / mp;
    double var = std::max(0.0, sum_f2 / av.samples - mf * mf);
    out.se = std::sqrt(var / av.samples) / mp;
    return out;
}

Mat herald_block(const Mat& joint, int d_anc, int j) {
    int n = static_cast<int>(joint.rows()) / d_anc;
    Mat out(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out(r, c) = joint(r * d_anc + j, c * d_anc + j);
    return out;
}

bool flat_code(const Context& ctx, int K) {
    if (!ctx.has_code) return false;
    if (ctx.pc.kind != ParityKind::like_even && ctx.pc.kind != ParityKind::like_odd) return false;
    return ctx.pc.rotation_order > 0 && ctx.pc.rotation_order % (1 << K) == 0;
}

ResultRow eval_row(const Context& ctx, int row_index) {
    const ExperimentConfig& cfg = ctx.cfg;
    const std::string& axis = cfg.sweep.param;
    const double v = cfg.sweep.grid[row_index];
    ResultRow row;
    row.sweep_value = v;

    const std::string& pname = cfg.protocol.name;
    if (pname == "teleport") {
        double f = teleportation_fidelity(v);
        row.f_supp = f;
        row.f_unsupp = f;
        row.p_succ = 1.0;
        return row;
    }

    CvResolve cv = resolve_cv(cfg.cv, axis, v);
    DvResolve dv = resolve_dv(cfg.dv, axis, v);
    KrausChannel cv_chan = build_cv_channel(cv, ctx.space);
    KrausChannel dv_chan = build_dv_channel(dv);

    // hoisted so the runner lambdas (by-reference captures) stay valid
    ProtocolSpec spec;
    GateNoise gate_noise;
    KrausChannel idle_dv;
    int K = 0;
    double bell_p = 0.0;
    CommHerald comm_herald = CommHerald::accept_00;
    bool closed_p_ok = false, closed_f_ok = false;

    std::function<Mat(const Mat&)> runner;
    if (pname == "none") {
        runner = [&](const Mat& m) { return apply_raw(cv_chan, m); };
    } else if (pname == "cf") {
        K = cfg.protocol.integer("K", 1);
        spec = cf_spec(K);
        bool shortcut = cfg.protocol.integer("shortcut", 0) != 0;
        if (shortcut) spec = parity_shortcut(ctx.code, spec);
        double gate_loss = cfg.protocol.num("gate_loss", 0.0);
        bool gate_dv = cfg.protocol.integer("gate_dv", 0) != 0;
        bool per_gate = gate_loss > 0.0 || gate_dv;
        if (per_gate) {
            gate_noise.cv = gate_loss > 0.0 ? loss_channel(gate_loss, ctx.space)
                                            : identity_channel(ctx.space.dim);
            gate_noise.dv = gate_dv ? dv_chan : identity_channel(2);
            idle_dv = gate_dv ? identity_channel(2) : dv_chan;
            runner = [&](const Mat& m) {
                return suppress_cf_raw(m, cv_chan, idle_dv, spec, ctx.space, &gate_noise);
            };
        } else if (dv.trivial && cv.has_params && !shortcut) {
            // noiseless ancillas admit the single-mode filtered-Kraus route
            runner = [&](const Mat& m) {
                return suppress_analytic_raw(m, cv.mu, cv.G, K, ctx.space);
            };
        } else {
            if (K > 4)
                throw std::runtime_error(
                    "joint simulation supports K <= 4; use noiseless ancillas for larger K");
            runner = [&](const Mat& m) {
                return suppress_cf_raw(m, cv_chan, dv_chan, spec, ctx.space);
            };
        }
        closed_p_ok = !per_gate && cv.has_params && (dv.trivial || flat_code(ctx, K));
        closed_f_ok = !per_gate && dv.trivial && cv.thermal_like;
    } else if (pname == "pqp") {
        runner = [&](const Mat& m) {
            return pqp_condrot_raw(m, cv_chan, dv_chan, ctx.pqp_layers, ctx.space);
        };
    } else if (pname == "qutrit") {
        int herald_j = cfg.protocol.integer("herald", 0);
        runner = [&, herald_j](const Mat& m) {
            Mat joint = qutrit_joint_output(m, cv_chan, dv.p, ctx.space);
            return herald_block(joint, 3, herald_j);
        };
    } else if (pname == "comm") {
        comm_herald = cfg.protocol.str("herald", "00") == "00" ? CommHerald::accept_00
                                                               : CommHerald::accept_00_11;
        bell_p = axis == "bell_p" ? v : cfg.protocol.num("p", 0.0);
        runner = [&](const Mat& m) {
            return comm_protocol_raw(m, cv_chan, bell_p, comm_herald, ctx.space);
        };
        closed_p_ok = cv.has_params;
    } else if (pname == "bypass") {
        int gates = cfg.protocol.integer("gates", 8);
        double gate_loss = cfg.protocol.num("gate_loss", 0.0);
        gate_noise.cv = gate_loss > 0.0 ? loss_channel(gate_loss, ctx.space)
                                        : identity_channel(ctx.space.dim);
        gate_noise.dv = dv_chan;
        runner = [&, gates](const Mat& m) {
            return bypass_reference(m, gate_noise, gates, ctx.space);
        };
    }

    Averaged sup = average_runner(ctx, runner, row_index);
    Averaged unsup =
        average_runner(ctx, [&](const Mat& m) { return apply_raw(cv_chan, m); }, row_index);
    row.f_supp = sup.f;
    row.p_succ = sup.p;
    row.leakage = sup.leak;
    row.mc_stderr = sup.se;
    row.f_unsupp = unsup.f;

    if (row.f_supp < -1e-10 || row.f_supp > 1.0 + 1e-10 || row.p_succ < 0.0 ||
        row.p_succ > 1.0 + 1e-10 || row.f_unsupp < -1e-10 || row.f_unsupp > 1.0 + 1e-10)
        throw std::runtime_error("row invariant violated: fidelity or p_succ out of [0, 1]");

    // closed-form companion columns and their per-formula gates
    bool haar = cfg.averaging.kind == AveragingMode::Kind::exact_haar;
    bool fixed = cfg.averaging.kind == AveragingMode::Kind::fixed_state;
    if ((haar || fixed) && (closed_p_ok || closed_f_ok)) {
        Mat rho_cv = haar ? ctx.c_l : logical_state(ctx.code, cfg.averaging.c0, cfg.averaging.c1).rho;
        if (closed_p_ok) {
            double pc = pname == "comm"
                            ? comm_psucc_closed(rho_cv, cv.mu, cv.G, bell_p,
                                                comm_herald == CommHerald::accept_00
                                                    ? CommOutcome::out_00
                                                    : CommOutcome::both)
                            : psucc_closed(rho_cv, cv.mu, cv.G, K);
            row.p_closed = pc;
            double tol = std::max(1e-9, 10.0 * cv_chan.deficit);
            if (std::abs(row.p_succ - pc) > tol)
                row.error = "p_succ deviates from the closed form by " +
                            fmt(std::abs(row.p_succ - pc)) + " (tolerance " + fmt(tol) + ")";
        }
        if (closed_f_ok && haar) {
            double fc = avg_fidelity_suppressed(ctx.mom, cv.eta, cv.nbar);
            row.f_closed = fc;
            double tol = 100.0 * std::pow(1.0 + cv.nbar, 3) * std::max(ctx.mom.n2, 1.0) *
                             std::pow(cv.eta, 3) +
                         1e-9;
            if (std::abs(row.f_supp - fc) > tol && row.error.empty())
                row.error = "f_supp deviates from the closed form by " +
                            fmt(std::abs(row.f_supp - fc)) + " (tolerance " + fmt(tol) + ")";
        }
    }
    return row;
}

}  // namespace

RunReport evaluate(const ExperimentConfig& config) {
    validate_config(config);
    Context ctx = make_context(config);
    const int n = static_cast<int>(config.sweep.grid.size());
    RunReport report;
    report.rows.resize(n);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                report.rows[i] = eval_row(ctx, i);
            } catch (const std::exception& e) {
                ResultRow r;
                r.sweep_value = config.sweep.grid[i];
                r.aborted = true;
                r.error = e.what();
                report.rows[i] = r;
            }
        }
    };
    int jobs = std::min(config.jobs, n);
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    bool tolerance = false, aborted = false;
    for (int i = 0; i < n; ++i) {
        const ResultRow& r = report.rows[i];
        if (r.aborted) {
            aborted = true;
            report.messages.push_back("row " + std::to_string(i) + " (" + config.sweep.param +
                                      "=" + fmt(r.sweep_value) + ") aborted: " + r.error);
        } else if (!r.error.empty()) {
            tolerance = true;
            report.messages.push_back("row " + std::to_string(i) + " (" + config.sweep.param +
                                      "=" + fmt(r.sweep_value) + "): " + r.error);
        }
    }
    report.exit_code = tolerance ? 3 : aborted ? 4 : 0;
    return report;
}

std::string csv_text(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
    std::string s = "sweep_param,sweep_value,f_supp,f_unsupp,p_succ,f_closed,p_closed,leakage\n";
    for (const ResultRow& r : rows) {
        s += config.sweep.param;
        s += ',';
        s += fmt(r.sweep_value);
        if (r.aborted) {
            s += ",,,,,,\n";
            continue;
        }
        s += ',';
        s += fmt(r.f_supp);
        s += ',';
        s += fmt(r.f_unsupp);
        s += ',';
        s += fmt(r.p_succ);
        s += ',';
        if (r.f_closed) s += fmt(*r.f_closed);
        s += ',';
        if (r.p_closed) s += fmt(*r.p_closed);
        s += ',';
        s += fmt(r.leakage);
        s += '\n';
    }
    return s;
}

std::string metadata_text(const ExperimentConfig& config, const RunReport& report) {
    nlohmann::ordered_json j;
    j["tool"] = "bosupp";
    j["version"] = kSweepVersion;
    j["csv_schema"] = kCsvSchema;
    j["code"] = config.code.text;
    j["cv"] = config.cv.text;
    j["dv"] = config.dv.text;
    j["protocol"] = config.protocol.text;
    j["sweep_param"] = config.sweep.param;
    j["grid"] = config.sweep.grid;
    j["averaging"] = config.averaging.describe();
    j["dim"] = config.dim;
    j["guard"] = config.guard;
    j["seed"] = config.seed;
    j["assumptions"] = config.assumptions;
    j["rows"] = report.rows.size();
    int aborted = 0;
    double max_se = 0.0, max_dp = -1.0, max_df = -1.0;
    for (const ResultRow& r : report.rows) {
        if (r.aborted) ++aborted;
        max_se = std::max(max_se, r.mc_stderr);
        if (r.p_closed) max_dp = std::max(max_dp, std::abs(r.p_succ - *r.p_closed));
        if (r.f_closed) max_df = std::max(max_df, std::abs(r.f_supp - *r.f_closed));
    }
    j["aborted_rows"] = aborted;
    if (config.averaging.kind == AveragingMode::Kind::monte_carlo) j["mc_max_stderr"] = max_se;
    if (max_dp >= 0.0) j["max_p_closed_diff"] = max_dp;
    if (max_df >= 0.0) j["max_f_closed_diff"] = max_df;
    j["messages"] = report.messages;
    return j.dump(2) + "\n";
}

RunReport run_experiment(const ExperimentConfig& config) {
    if (config.output.empty())
        throw std::invalid_argument("config has no output path");
    RunReport report = evaluate(config);
    std::ofstream out(config.output, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + config.output + "'");
    out << csv_text(config, report.rows);
    out.close();
    std::ofstream meta(config.output + ".meta.json", std::ios::binary);
    if (!meta) throw std::runtime_error("cannot write '" + config.output + ".meta.json'");
    meta << metadata_text(config, report);
    return report;
}

// ---- bundled figure configs ------------------------------------------------

namespace {

struct FigureConfig {
    std::string stem;
    std::string text;
};

std::string cfg_text(std::initializer_list<std::pair<const char*, std::string>> kv) {
    std::string s;
    for (const auto& [k, v] : kv) {
        s += k;
        s += " = ";
        s += v;
        s += '\n';
    }
    return s;
}

const std::string kDampGrid = "p: 0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3";

std::vector<FigureConfig> figure_texts(const std::string& name) {
    std::vector<FigureConfig> out;
    if (name == "fig3") {
        // like-parity vs opposite-parity code under ancilla damping
        const std::pair<const char*, const char*> codes[] = {{"bin_2_4", "bin(2,4)"},
                                                             {"cat_6", "cat(6,1.916)"}};
        for (const auto& [stem, code] : codes)
            out.push_back({"fig3_" + std::string(stem),
                           cfg_text({{"code", code},
                                     {"cv", "loss(mu=0.05)"},
                                     {"dv", "qubit_damp(kind=composite)"},
                                     {"protocol", "cf(K=1)"},
                                     {"sweep", kDampGrid},
                                     {"averaging", "exact-haar"},
                                     {"dim", "40"},
                                     {"guard", "8"},
                                     {"jobs", "2"},
                                     {"assume",
                                      "idle qumode channel fixed to loss(mu=0.05); the plotted "
                                      "reference does not state it"}})});
        return out;
    }
    if (name == "fig4") {
        // 2^(K+1)-component cats stay flat under ancilla damping
        const std::tuple<const char*, const char*, const char*> rows[] = {
            {"K1_cat4", "cat(4,2)", "cf(K=1)"},
            {"K2_cat8", "cat(8,2)", "cf(K=2)"},
            {"K3_cat16", "cat(16,2)", "cf(K=3)"}};
        for (const auto& [stem, code, proto] : rows)
            out.push_back({"fig4_" + std::string(stem),
                           cfg_text({{"code", code},
                                     {"cv", "loss(mu=0.05)"},
                                     {"dv", "qubit_damp(kind=composite)"},
                                     {"protocol", proto},
                                     {"sweep", kDampGrid},
                                     {"averaging", "exact-haar"},
                                     {"dim", "40"},
                                     {"guard", "8"},
                                     {"jobs", "2"},
                                     {"assume", "cat amplitude alpha fixed to 2"}})});
        return out;
    }
    if (name == "fig5") {
        // independent loss/gain grid for plain and squeezed cats
        const std::pair<const char*, const char*> codes[] = {{"cat22", "cat(2,2)"},
                                                             {"sqcat", "sqcat(2,2,6)"}};
        const std::pair<const char*, const char*> zs[] = {
            {"z000", "0"}, {"z002", "0.02"}, {"z004", "0.04"}};
        for (const auto& [cstem, code] : codes)
            for (const auto& [zstem, z] : zs)
                out.push_back(
                    {"fig5_" + std::string(cstem) + "_" + zstem,
                     cfg_text({{"code", code},
                               {"cv", std::string("muz(mu=0, z=") + z + ")"},
                               {"dv", "none"},
                               {"protocol", "cf(K=1)"},
                               {"sweep", "mu: 0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06"},
                               {"averaging", "exact-haar"},
                               {"dim", "128"},
                               {"guard", "24"},
                               {"jobs", "4"},
                               {"assume", "squeezed cat fixed to sqcat(2,2,6): 6 dB along the "
                                          "cat axis, re-orthonormalized after truncation"}})});
        return out;
    }
    if (name == "fig6") {
        // optimized displacement layers vs the plain conditional-Fourier gate
        const std::string opt_note =
            "layer parameters optimized once for noiseless ancillas (5-restart Nelder-Mead "
            "seeded at the conditional-Fourier point), then evaluated under damping";
        out.push_back({"fig6_cf_loss", cfg_text({{"code", "cat(2,2)"},
                                                 {"cv", "loss(mu=0.05)"},
                                                 {"dv", "qubit_damp(kind=composite)"},
                                                 {"protocol", "cf(K=1)"},
                                                 {"sweep", kDampGrid},
                                                 {"averaging", "exact-haar"},
                                                 {"dim", "28"},
                                                 {"guard", "6"},
                                                 {"jobs", "2"},
                                                 {"assume", "code fixed to cat(2,2)"}})});
        for (int L = 1; L <= 2; ++L)
            out.push_back({"fig6_pqp" + std::to_string(L) + "_loss",
                           cfg_text({{"code", "cat(2,2)"},
                                     {"cv", "loss(mu=0.05)"},
                                     {"dv", "qubit_damp(kind=composite)"},
                                     {"protocol", "pqp(L=" + std::to_string(L) + ",opt_seed=11)"},
                                     {"sweep", kDampGrid},
                                     {"averaging", "exact-haar"},
                                     {"dim", "28"},
                                     {"guard", "6"},
                                     {"jobs", "2"},
                                     {"assume", "code fixed to cat(2,2)"},
                                     {"assume", opt_note}})});
        out.push_back({"fig6_cf_thermal", cfg_text({{"code", "cat(2,2)"},
                                                    {"cv", "thermal(eta=0.05, nbar=0.5)"},
                                                    {"dv", "qubit_damp(kind=composite)"},
                                                    {"protocol", "cf(K=1)"},
                                                    {"sweep", kDampGrid},
                                                    {"averaging", "exact-haar"},
                                                    {"dim", "40"},
                                                    {"guard", "8"},
                                                    {"jobs", "2"},
                                                    {"assume", "code fixed to cat(2,2)"}})});
        out.push_back({"fig6_pqp1_thermal",
                       cfg_text({{"code", "cat(2,2)"},
                                 {"cv", "thermal(eta=0.05, nbar=0.5)"},
                                 {"dv", "qubit_damp(kind=composite)"},
                                 {"protocol", "pqp(L=1,opt_seed=11)"},
                                 {"sweep", kDampGrid},
                                 {"averaging", "exact-haar"},
                                 {"dim", "40"},
                                 {"guard", "8"},
                                 {"jobs", "2"},
                                 {"assume", "code fixed to cat(2,2)"},
                                 {"assume", opt_note}})});
        return out;
    }
    if (name == "fig7") {
        // gate-count comparison: 2 noisy conditional gates vs 8
        const std::string model =
            "bypass modeled as an ideal identity circuit paying 8 noisy gate applications; "
            "its internal construction is out of scope";
        out.push_back({"fig7_cf", cfg_text({{"code", "cat(4,2)"},
                                            {"cv", "none"},
                                            {"dv", "qubit_damp(kind=composite)"},
                                            {"protocol", "cf(K=1, gate_loss=0.01, gate_dv=1)"},
                                            {"sweep", kDampGrid},
                                            {"averaging", "exact-haar"},
                                            {"dim", "40"},
                                            {"guard", "8"},
                                            {"jobs", "2"},
                                            {"assume", "every entangling gate adds 1% loss plus "
                                                       "composite damping of strength p"}})});
        out.push_back({"fig7_bypass", cfg_text({{"code", "cat(4,2)"},
                                                {"cv", "none"},
                                                {"dv", "qubit_damp(kind=composite)"},
                                                {"protocol", "bypass(gates=8, gate_loss=0.01)"},
                                                {"sweep", kDampGrid},
                                                {"averaging", "exact-haar"},
                                                {"dim", "40"},
                                                {"guard", "8"},
                                                {"jobs", "2"},
                                                {"assume", model}})});
        return out;
    }
    if (name == "fig8") {
        // qubit vs qutrit ancilla under thermal noise
        const std::tuple<const char*, const char*, const char*, const char*> codes[] = {
            {"bin24", "bin(2,4)", "40", "8"},
            {"cat22", "cat(2,2)", "40", "8"},
            {"gkp", "gkp(0.3)", "128", "24"}};
        for (const auto& [stem, code, dim, guard] : codes) {
            out.push_back({"fig8_" + std::string(stem) + "_d2",
                           cfg_text({{"code", code},
                                     {"cv", "thermal(eta=0.05, nbar=0.5)"},
                                     {"dv", "qubit_damp(kind=composite)"},
                                     {"protocol", "cf(K=1)"},
                                     {"sweep", "p: 0, 0.1, 0.2, 0.3, 0.4, 0.5"},
                                     {"averaging", "exact-haar"},
                                     {"dim", dim},
                                     {"guard", guard},
                                     {"jobs", "4"},
                                     {"assume", "code selection ours; the plotted reference "
                                                "does not list its codes"}})});
            out.push_back({"fig8_" + std::string(stem) + "_d3",
                           cfg_text({{"code", code},
                                     {"cv", "thermal(eta=0.05, nbar=0.5)"},
                                     {"dv", "qutrit_damp(kind=composite)"},
                                     {"protocol", "qutrit(herald=0)"},
                                     {"sweep", "p: 0, 0.1, 0.2, 0.3, 0.4, 0.5"},
                                     {"averaging", "exact-haar"},
                                     {"dim", dim},
                                     {"guard", guard},
                                     {"jobs", "4"},
                                     {"assume", "code selection ours; the plotted reference "
                                                "does not list its codes"}})});
        }
        return out;
    }
    if (name == "fig9") {
        // convergence in the number of ancillas, noiseless ancillas
        const std::pair<const char*, int> rows[] = {
            {"K1", 1}, {"K2", 2}, {"K3", 3}, {"Kinf", 7}};
        for (const auto& [stem, K] : rows) {
            std::vector<std::pair<const char*, std::string>> kv = {
                {"code", "cat(2,2)"},
                {"cv", "loss(eta=0)"},
                {"dv", "none"},
                {"protocol", "cf(K=" + std::to_string(K) + ")"},
                {"sweep", "eta: 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1"},
                {"averaging", "exact-haar"},
                {"dim", "40"},
                {"guard", "8"},
                {"jobs", "2"},
                {"assume", "code fixed to cat(2,2)"}};
            if (K == 7)
                kv.push_back({"assume",
                              "K=7 realizes the fully filtered limit exactly at this truncation "
                              "(2^7 exceeds every possible net jump)"});
            std::string text;
            for (const auto& [k, v] : kv) text += std::string(k) + " = " + v + "\n";
            out.push_back({"fig9_" + std::string(stem), text});
        }
        return out;
    }
    if (name == "fig10c") {
        // remote suppression with a shared damped Bell pair
        const std::tuple<const char*, const char*, const char*, const char*, const char*>
            codes[] = {{"bin24", "bin(2,4)", "40", "8", "bell_p: 0, 0.1, 0.2, 0.3, 0.4, 0.5"},
                       {"cat22", "cat(2,2)", "40", "8", "bell_p: 0, 0.1, 0.2, 0.3, 0.4, 0.5"},
                       {"gkp", "gkp(0.3)", "128", "24", "bell_p: 0, 0.2, 0.4"}};
        const std::pair<const char*, const char*> chans[] = {
            {"loss", "loss(mu=0.05)"}, {"th", "thermal(eta=0.05, nbar=0.5)"}};
        const std::pair<const char*, const char*> heralds[] = {{"00", "comm(herald=00)"},
                                                               {"0011", "comm(herald=00_11)"}};
        for (const auto& [cstem, code, dim, guard, grid] : codes)
            for (const auto& [hstem, chan] : chans)
                for (const auto& [hergroup, proto] : heralds)
                    out.push_back({"fig10c_" + std::string(cstem) + "_" + hstem + "_" + hergroup,
                                   cfg_text({{"code", code},
                                             {"cv", chan},
                                             {"dv", "none"},
                                             {"protocol", proto},
                                             {"sweep", grid},
                                             {"averaging", "exact-haar"},
                                             {"dim", dim},
                                             {"guard", guard},
                                             {"jobs", "3"},
                                             {"assume", "code selection ours; gkp uses a "
                                                        "coarser grid to bound runtime"}})});
        out.push_back({"fig10c_teleport",
                       cfg_text({{"protocol", "teleport"},
                                 {"sweep", "bell_p: 0, 0.1, 0.2, 0.3, 0.4, 0.5"},
                                 {"averaging", "exact-haar"},
                                 {"assume", "plain teleportation through the same damped Bell "
                                            "pair, no bosonic mode involved"}})});
        return out;
    }
    throw std::invalid_argument("unknown figure '" + name +
                                "' (fig3, fig4, fig5, fig6, fig7, fig8, fig9, fig10c)");
}

}  // namespace

std::vector<ExperimentConfig> figure_bundle(const std::string& name, const std::string& out_dir) {
    std::vector<ExperimentConfig> out;
    for (const FigureConfig& fc : figure_texts(name)) {
        std::istringstream in(fc.text);
        ExperimentConfig cfg = parse_config(in, fc.stem);
        cfg.output = out_dir + "/" + fc.stem + ".csv";
        out.push_back(std::move(cfg));
    }
    return out;
}

int run_figure(const std::string& name, const std::string& out_dir, int jobs_override) {
    std::vector<FigureConfig> texts = figure_texts(name);
    std::filesystem::create_directories(out_dir);
    bool tolerance = false, aborted = false;
    for (const FigureConfig& fc : texts) {
        std::string conf_path = out_dir + "/" + fc.stem + ".conf";
        {
            std::ofstream conf(conf_path, std::ios::binary);
            if (!conf) throw std::runtime_error("cannot write '" + conf_path + "'");
            conf << fc.text;
        }
        std::istringstream in(fc.text);
        ExperimentConfig cfg = parse_config(in, fc.stem);
        cfg.output = out_dir + "/" + fc.stem + ".csv";
        if (jobs_override > 0) cfg.jobs = jobs_override;
        RunReport rep = run_experiment(cfg);
        for (const std::string& m : rep.messages) std::cerr << fc.stem << ": " << m << "\n";
        std::cerr << fc.stem << ": " << rep.rows.size() << " rows, exit " << rep.exit_code
                  << "\n";
        if (rep.exit_code == 3) tolerance = true;
        if (rep.exit_code == 4) aborted = true;
    }
    return tolerance ? 3 : aborted ? 4 : 0;
}

}  // namespace bosupp
