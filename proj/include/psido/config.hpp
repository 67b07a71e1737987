#pragma once

// Pipeline configuration: sectioned INI text, parsed with boost::property_tree.
// Keys are validated against a fixed schema; see docs/config.md.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "psido/approximation.hpp"
#include "psido/hpf1.hpp"
#include "psido/lbfgs.hpp"
#include "psido/quadratic_model.hpp"

namespace psido {

struct LowRankSettings {
    int rank = 20;
    int oversample = 10;
    int power_iters = 2;
};

struct LaplaceSettings {
    int correction_rank = 30;
    int oversample = 10;
    int power_iters = 2;
};

struct ChainSettings {
    int n_samples = 20000;
    int burn_in = -1;
    int thin = 10;
    double beta = 0.0;  // 0: tune by pilot runs
    int pilot_length = 1000;
    double accept_lo = 0.2;
    double accept_hi = 0.4;
    std::vector<std::pair<int, int>> probe_points;  // (ix, iz); empty: defaults
};

struct PipelineConfig {
    QuadraticModelParams model;
    ApproxConfig probe;
    LowRankSettings lowrank;
    LaplaceSettings laplace;
    LbfgsConfig lbfgs;
    ChainSettings chain;
    std::filesystem::path output_dir = "out";
    std::uint64_t global_seed = 0;
    bool target_seed_given = false;
    std::filesystem::path target_file;
    std::filesystem::path prior_mean_file;
};

namespace detail {

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "run.output_dir", "run.seed",
        "model.nx", "model.nz", "model.dx", "model.dz", "model.n_modes", "model.mode_decay", "model.mode_weight_max",
        "model.mode_weight_min", "model.band_fraction", "model.taper_side", "model.taper_top", "model.misfit_scale",
        "model.target_file", "model.target_seed",
        "prior.delta", "prior.gamma", "prior.mean_file",
        "probe.psf.points_x", "probe.psf.points_z", "probe.psf.radius",
        "probe.pdo.n_angles", "probe.pdo.rho0", "probe.pdo.rho0_fraction", "probe.pdo.mask_rolloff", "probe.pdo.order",
        "probe.pdo.sqrt_order", "probe.pdo.band.f_min", "probe.pdo.band.f_max", "probe.pdo.band.c_min", "probe.pdo.band.c_max",
        "probe.highpass.cutoff_frac", "probe.highpass.width_frac",
        "probe.psfplus.basis_rank", "probe.psfplus.sv_threshold",
        "probe.factor.stride", "probe.factor.compress_tol", "probe.factor.max_rank",
        "lowrank.rank", "lowrank.oversample", "lowrank.power_iters",
        "laplace.correction_rank", "laplace.oversample", "laplace.power_iters",
        "lbfgs.memory", "lbfgs.max_iters", "lbfgs.grad_tol", "lbfgs.c1", "lbfgs.c2", "lbfgs.max_line_search", "lbfgs.snapshot_steps",
        "chain.n_samples", "chain.burn_in", "chain.thin", "chain.beta", "chain.pilot_length", "chain.accept_lo", "chain.accept_hi",
        "chain.probe_points",
    };
    return keys;
}

class KeyValues {
public:
    explicit KeyValues(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    [[nodiscard]] bool has(const std::string& k) const { return kv_.count(k) > 0; }

    template <class T>
    void get(const std::string& k, T& out) const {
        auto it = kv_.find(k);
        if (it == kv_.end()) return;
        std::istringstream is(it->second);
        T v{};
        is >> v;
        if (is.fail() || !(is >> std::ws).eof()) throw ConfigError("config: bad value for " + k + ": '" + it->second + "'");
        out = v;
    }

    void get(const std::string& k, std::string& out) const {
        auto it = kv_.find(k);
        if (it != kv_.end()) out = it->second;
    }

    [[nodiscard]] std::vector<std::string> list(const std::string& k) const {
        std::vector<std::string> out;
        auto it = kv_.find(k);
        if (it == kv_.end()) return out;
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto b = item.find_first_not_of(" \t");
            const auto e = item.find_last_not_of(" \t");
            if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
        }
        return out;
    }

private:
    std::map<std::string, std::string> kv_;
};

inline int parse_int(const std::string& s, const std::string& key) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer in " + key + ": '" + s + "'");
    }
    if (pos != s.size()) throw ConfigError("config: bad integer in " + key + ": '" + s + "'");
    return v;
}

}  // namespace detail

inline void validate(const PipelineConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError("config: " + msg);
    };
    need(c.model.nx >= 4 && c.model.nz >= 4, "model.nx and model.nz must be >= 4");
    need(c.model.dx > 0.0 && c.model.dz > 0.0, "model.dx and model.dz must be positive");
    need(c.model.n_modes >= 0, "model.n_modes must be >= 0");
    need(c.model.prior_delta > 0.0 && c.model.prior_gamma > 0.0, "prior.delta and prior.gamma must be positive");
    need(c.model.misfit_scale > 0.0, "model.misfit_scale must be positive");
    need(c.probe.psf_points_x >= 1 && c.probe.psf_points_z >= 1, "probe.psf.points_x/points_z must be >= 1");
    need(c.probe.n_angles >= 2 && c.probe.n_angles % 2 == 0, "probe.pdo.n_angles must be even and >= 2");
    need(c.probe.rho0 >= 0.0, "probe.pdo.rho0 must be >= 0");
    need(c.probe.rho0_fraction > 0.0 && c.probe.rho0_fraction < 1.0, "probe.pdo.rho0_fraction must lie in (0, 1)");
    need(c.probe.highpass_cutoff > 0.0 && c.probe.highpass_width >= 0.0, "probe.highpass.cutoff_frac > 0 and width_frac >= 0");
    need(c.probe.psfplus.basis_rank >= 0 && c.probe.psfplus.sv_threshold > 0.0, "probe.psfplus settings out of range");
    need(c.probe.factor.stride >= 1 && c.probe.factor.compress_tol > 0.0, "probe.factor settings out of range");
    need(c.lowrank.rank >= 1 && c.lowrank.oversample >= 0 && c.lowrank.power_iters >= 0, "lowrank settings out of range");
    need(c.laplace.correction_rank >= 0 && c.laplace.oversample >= 0 && c.laplace.power_iters >= 0, "laplace settings out of range");
    need(c.chain.n_samples >= 1 && c.chain.thin >= 1, "chain.n_samples and chain.thin must be >= 1");
    need(c.chain.burn_in < c.chain.n_samples, "chain.burn_in must be < chain.n_samples");
    need(c.chain.beta >= 0.0 && c.chain.beta < 1.0, "chain.beta must lie in [0, 1)");
    need(c.chain.pilot_length >= 100, "chain.pilot_length must be >= 100");
    need(0.0 < c.chain.accept_lo && c.chain.accept_lo < c.chain.accept_hi && c.chain.accept_hi < 1.0, "chain.accept_lo/accept_hi out of range");
    for (auto [ix, iz] : c.chain.probe_points)
        need(ix >= 0 && ix < c.model.nx && iz >= 0 && iz < c.model.nz, "chain.probe_points outside the grid");
    try {
        c.lbfgs.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

/// Parses INI text. `base_dir` resolves relative file references.
inline PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = ".") {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    std::map<std::string, std::string> flat;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            if (!detail::config_keys().count(full)) throw ConfigError("config: unknown key '" + full + "'");
            flat[full] = value.get_value<std::string>();
        }
    }
    const detail::KeyValues kv(std::move(flat));

    PipelineConfig c;
    std::string out_dir = c.output_dir.string();
    kv.get("run.output_dir", out_dir);
    c.output_dir = out_dir;
    kv.get("run.seed", c.global_seed);

    QuadraticModelParams& m = c.model;
    kv.get("model.nx", m.nx);
    kv.get("model.nz", m.nz);
    kv.get("model.dx", m.dx);
    kv.get("model.dz", m.dz);
    kv.get("model.n_modes", m.n_modes);
    kv.get("model.mode_decay", m.mode_decay);
    kv.get("model.mode_weight_max", m.mode_weight_max);
    kv.get("model.mode_weight_min", m.mode_weight_min);
    kv.get("model.band_fraction", m.band_fraction);
    kv.get("model.taper_side", m.taper_side);
    kv.get("model.taper_top", m.taper_top);
    kv.get("model.misfit_scale", m.misfit_scale);
    c.target_seed_given = kv.has("model.target_seed");
    kv.get("model.target_seed", m.target_seed);
    std::string file;
    kv.get("model.target_file", file);
    if (!file.empty()) c.target_file = base_dir / file;
    file.clear();
    kv.get("prior.mean_file", file);
    if (!file.empty()) c.prior_mean_file = base_dir / file;
    kv.get("prior.delta", m.prior_delta);
    kv.get("prior.gamma", m.prior_gamma);

    ApproxConfig& p = c.probe;
    kv.get("probe.psf.points_x", p.psf_points_x);
    kv.get("probe.psf.points_z", p.psf_points_z);
    kv.get("probe.psf.radius", p.psf_radius);
    kv.get("probe.pdo.n_angles", p.n_angles);
    kv.get("probe.pdo.rho0", p.rho0);
    kv.get("probe.pdo.rho0_fraction", p.rho0_fraction);
    kv.get("probe.pdo.mask_rolloff", p.mask_rolloff);
    kv.get("probe.pdo.order", p.pdo_order);
    kv.get("probe.pdo.sqrt_order", p.pdo_sqrt_order);
    const char* band_keys[] = {"probe.pdo.band.f_min", "probe.pdo.band.f_max", "probe.pdo.band.c_min", "probe.pdo.band.c_max"};
    int n_band = 0;
    for (const char* k : band_keys) n_band += kv.has(k) ? 1 : 0;
    if (n_band != 0 && n_band != 4) throw ConfigError("config: probe.pdo.band needs all of f_min, f_max, c_min, c_max");
    if (n_band == 4) {
        if (kv.has("probe.pdo.rho0")) throw ConfigError("config: give either probe.pdo.rho0 or probe.pdo.band, not both");
        FrequencyBand b;
        kv.get("probe.pdo.band.f_min", b.f_min);
        kv.get("probe.pdo.band.f_max", b.f_max);
        kv.get("probe.pdo.band.c_min", b.c_min);
        kv.get("probe.pdo.band.c_max", b.c_max);
        p.band = b;
    }
    kv.get("probe.highpass.cutoff_frac", p.highpass_cutoff);
    kv.get("probe.highpass.width_frac", p.highpass_width);
    kv.get("probe.psfplus.basis_rank", p.psfplus.basis_rank);
    kv.get("probe.psfplus.sv_threshold", p.psfplus.sv_threshold);
    kv.get("probe.factor.stride", p.factor.stride);
    kv.get("probe.factor.compress_tol", p.factor.compress_tol);
    kv.get("probe.factor.max_rank", p.factor.max_rank);

    kv.get("lowrank.rank", c.lowrank.rank);
    kv.get("lowrank.oversample", c.lowrank.oversample);
    kv.get("lowrank.power_iters", c.lowrank.power_iters);
    kv.get("laplace.correction_rank", c.laplace.correction_rank);
    kv.get("laplace.oversample", c.laplace.oversample);
    kv.get("laplace.power_iters", c.laplace.power_iters);

    kv.get("lbfgs.memory", c.lbfgs.memory);
    kv.get("lbfgs.max_iters", c.lbfgs.max_iters);
    kv.get("lbfgs.grad_tol", c.lbfgs.grad_reduction_tol);
    kv.get("lbfgs.c1", c.lbfgs.c1);
    kv.get("lbfgs.c2", c.lbfgs.c2);
    kv.get("lbfgs.max_line_search", c.lbfgs.max_line_search);
    for (const auto& s : kv.list("lbfgs.snapshot_steps")) c.lbfgs.snapshot_steps.push_back(detail::parse_int(s, "lbfgs.snapshot_steps"));

    kv.get("chain.n_samples", c.chain.n_samples);
    kv.get("chain.burn_in", c.chain.burn_in);
    kv.get("chain.thin", c.chain.thin);
    kv.get("chain.beta", c.chain.beta);
    kv.get("chain.pilot_length", c.chain.pilot_length);
    kv.get("chain.accept_lo", c.chain.accept_lo);
    kv.get("chain.accept_hi", c.chain.accept_hi);
    for (const auto& s : kv.list("chain.probe_points")) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) throw ConfigError("config: chain.probe_points entries look like ix:iz, got '" + s + "'");
        c.chain.probe_points.emplace_back(detail::parse_int(s.substr(0, colon), "chain.probe_points"),
                                          detail::parse_int(s.substr(colon + 1), "chain.probe_points"));
    }
    validate(c);
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    return parse_config(in, path.parent_path());
}

/// Scales nx, nz by `s` keeping the physical extent; probe points move with the grid.
inline void apply_grid_scale(PipelineConfig& c, double s) {
    if (!(s > 0.0)) throw ConfigError("config: --grid-scale must be positive");
    if (s == 1.0) return;
    QuadraticModelParams& m = c.model;
    const int nx = std::max(4, static_cast<int>(std::lround(m.nx * s)));
    const int nz = std::max(4, static_cast<int>(std::lround(m.nz * s)));
    for (auto& [ix, iz] : c.chain.probe_points) {
        ix = std::min(nx - 1, static_cast<int>(std::lround(ix * (nx - 1.0) / (m.nx - 1.0))));
        iz = std::min(nz - 1, static_cast<int>(std::lround(iz * (nz - 1.0) / (m.nz - 1.0))));
    }
    m.dx *= static_cast<double>(m.nx) / nx;
    m.dz *= static_cast<double>(m.nz) / nz;
    m.nx = nx;
    m.nz = nz;
}

/// Resolves seeds and optional files into a ready model description.
inline QuadraticModelParams resolve_model(const PipelineConfig& c) {
    QuadraticModelParams m = c.model;
    const Grid2D g(m.nx, m.nz, m.dx, m.dz);
    if (!c.target_seed_given) m.target_seed = derive_seed(c.global_seed, "model.target");
    for (const auto& f : {c.target_file, c.prior_mean_file})
        if (!f.empty() && !std::filesystem::exists(f)) throw ConfigError("config: file not found: " + f.string());
    if (!c.target_file.empty()) m.target = hpf1::read_field(c.target_file, g);
    if (!c.prior_mean_file.empty()) m.prior_mean = hpf1::read_field(c.prior_mean_file, g);
    return m;
}

}  // namespace psido
