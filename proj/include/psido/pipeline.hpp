#pragma once

// Pipeline stages behind the command-line driver. Each stage reads the
// config, recomputes or reloads what it needs, and writes artifacts below
// output_dir. All randomness comes from derive_seed(global_seed, stage).

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>

#include "psido/config.hpp"
#include "psido/mcmc.hpp"

namespace psido {

namespace fs = std::filesystem;

inline const std::vector<std::string>& preconditioner_names() {
    static const std::vector<std::string> names = {"none", "prior", "psf", "pdo", "psfplus"};
    return names;
}

namespace detail {

inline void write_json(const fs::path& p, const nlohmann::json& j) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw MissingArtifacts("missing artifact " + p.string());
    return nlohmann::json::parse(is);
}

inline std::ofstream open_csv(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    os << std::setprecision(17);
    return os;
}

/// Numeric CSV with one header line.
inline std::vector<RealVector> read_csv_columns(const fs::path& p, std::vector<std::string>* header = nullptr) {
    std::ifstream is(p);
    if (!is) throw MissingArtifacts("missing artifact " + p.string());
    std::string line;
    std::getline(is, line);
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) names.push_back(cell);
    }
    std::vector<std::vector<double>> cols(names.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',') && c < cols.size()) cols[c++].push_back(std::stod(cell));
        if (c != cols.size()) throw FormatError("ragged csv row in " + p.string());
    }
    if (header) *header = names;
    std::vector<RealVector> out;
    for (auto& c : cols) out.push_back(Eigen::Map<RealVector>(c.data(), static_cast<Eigen::Index>(c.size())));
    return out;
}

inline LinearOperator counting(const LinearOperator& op, std::shared_ptr<long> counter) {
    return LinearOperator(op.grid(), [op, counter](const Field& v) {
        ++*counter;
        return op.apply(v);
    });
}

}  // namespace detail

struct Pipeline {
    PipelineConfig cfg;
    QuadraticProblem problem;

    explicit Pipeline(PipelineConfig c) : cfg(std::move(c)), problem(resolve_model(cfg)) {}
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    [[nodiscard]] const Grid2D& grid() const { return problem.grid(); }
    [[nodiscard]] const BiharmonicPrior& prior() const { return problem.prior(); }
    [[nodiscard]] fs::path dir(const std::string& stage) const { return cfg.output_dir / stage; }
    [[nodiscard]] std::uint64_t seed(std::string_view stage, std::uint64_t counter = 0) const {
        return derive_seed(cfg.global_seed, stage, counter);
    }

    [[nodiscard]] std::vector<int> probe_points() const {
        if (cfg.chain.probe_points.empty()) return default_probe_points(grid());
        std::vector<int> out;
        for (auto [ix, iz] : cfg.chain.probe_points) out.push_back(grid().index(ix, iz));
        return out;
    }

    // ------------------------------------------------------------- approx

    struct ApproxOutput {
        ProbeData data;
        long matvecs = 0;
        std::map<Method, double> errors;
    };

    ApproxOutput approx(bool write = true) const {
        auto counter = std::make_shared<long>(0);
        ApproxOutput out;
        out.data = probe_hessian(detail::counting(problem.data_hessian(), counter), cfg.probe);
        out.matvecs = *counter;
        const LinearOperator filtered = wrap_highpass(problem.data_hessian(), out.data.highpass);
        const auto probes = band_limited_probes(grid(), out.data.highpass, 10, seed("approx.error_probes"));
        const int batches = static_cast<int>(out.data.psfs.plan.batches.size());
        const std::map<Method, int> budget = {{Method::psf, batches}, {Method::pdo, 1}, {Method::psfplus, batches + 1}};
        std::ofstream csv;
        if (write) {
            csv = detail::open_csv(dir("approx") / "errors.csv");
            csv << "method,matvecs,median_relative_error\n";
        }
        for (Method m : {Method::psf, Method::pdo, Method::psfplus}) {
            const LowRankSymbol sym = approximate_symbol(out.data, m, false, cfg.probe);
            out.errors[m] = median_relative_error(as_operator(sym), filtered, probes);
            if (write) {
                save_symbol(dir("approx") / to_string(m), sym, {{"method", to_string(m)}});
                csv << to_string(m) << ',' << budget.at(m) << ',' << out.errors[m] << '\n';
            }
        }
        if (write) {
            const fs::path pd = dir("approx") / "probes";
            fs::create_directories(pd);
            for (std::size_t k = 0; k < out.data.psfs.psfs.size(); ++k)
                hpf1::write_field(pd / ("psf_" + std::to_string(k) + ".hpf"), out.data.psfs.psfs[k]);
            const Field vp = build_sinusoid_probe(out.data.columns.plan, grid());
            hpf1::write_field(pd / "sinusoid_probe.hpf", vp);
            hpf1::write(pd / "sinusoid_probe_spectrum.hpf", hpf1::from_complex_field(grid(), forward_transform(vp).values));
            hpf1::write(pd / "sinusoid_response_spectrum.hpf",
                        hpf1::from_complex_field(grid(), forward_transform(filtered.apply(vp)).values));
            const auto& plan = out.data.columns.plan;
            detail::write_json(dir("approx") / "manifest.json",
                               {{"matvecs_total", out.matvecs},
                                {"matvecs", {{"psf", batches}, {"pdo", 1}, {"psfplus", batches + 1}}},
                                {"psf_points", out.data.psfs.plan.points.size()},
                                {"rho0", plan.rho0},
                                {"mask_radius", plan.mask_radius},
                                {"highpass_cutoff", out.data.highpass.cutoff},
                                {"highpass_width", out.data.highpass.transition_width},
                                {"seed_error_probes", seed("approx.error_probes")}});
        }
        return out;
    }

    /// h0 for L-BFGS by preconditioner name.
    [[nodiscard]] LinearOperator preconditioner(const std::string& name) const {
        if (name == "none") return {};
        if (name == "prior") return prior().power_operator(-1.0);
        const Method m = parse_method(name);
        const ProbeData d = probe_hessian(problem.data_hessian(), cfg.probe);
        return make_laplace(Field(grid()), approximate_factor(d, m, prior(), problem.window(), cfg.probe)).approximate_inverse_operator();
    }

    // ------------------------------------------------------------- invert

    LbfgsResult invert(const std::string& precond, bool write = true) const {
        const auto& names = preconditioner_names();
        if (std::find(names.begin(), names.end(), precond) == names.end())
            throw ConfigError("unknown preconditioner '" + precond + "'");
        const LbfgsResult r = minimize(problem, preconditioner(precond), cfg.lbfgs, prior().mean(), problem.target());
        if (!write) return r;
        const fs::path d = dir("invert") / precond;
        std::ofstream csv = detail::open_csv(d / "record.csv");
        csv << "iter,objective,misfit,gradnorm,solerr\n";
        const RunRecord& rec = r.record;
        for (std::size_t i = 0; i < rec.objective.size(); ++i)
            csv << i << ',' << rec.objective[i] << ',' << rec.misfit[i] << ',' << rec.grad_norm[i] << ',' << rec.solution_error[i] << '\n';
        for (const auto& [it, f] : rec.snapshots) hpf1::write_field(d / ("snapshot_" + std::to_string(it) + ".hpf"), f);
        hpf1::write_field(d / "solution.hpf", r.solution);
        detail::write_json(d / "summary.json", {{"preconditioner", precond},
                                                {"iterations", rec.iterations},
                                                {"converged", rec.converged},
                                                {"grad_reduction", rec.grad_norm.back() / rec.grad_norm.front()}});
        return r;
    }

    // ------------------------------------------------------------- sample

    /// MAP point by one preconditioned CG solve of the Newton system (the objective is quadratic).
    Field map_point(bool write = true) const {
        const Field m0 = prior().mean();
        const Field rhs = -1.0 * problem.gradient(m0);
        const CgResult r = pcg(problem.full_hessian(), rhs, prior().power_operator(-1.0), 1e-12, 2000);
        Field m = m0 + r.solution;
        if (write) {
            fs::create_directories(dir("sample"));
            hpf1::write_field(dir("sample") / "m_map.hpf", m);
        }
        return m;
    }

    /// Gaussian reference for gpCN with a given Hessian approximation ("lr", "psf", "pdo", "psfplus").
    GaussianReference reference(const std::string& hessian, const Field& m_map, bool write = true) const {
        if (hessian == "lr") {
            const GenEigPairs pairs = randomized_gen_eig(problem.misfit_hessian(), prior(), cfg.lowrank.rank, cfg.lowrank.oversample,
                                                         cfg.lowrank.power_iters, seed("lowrank"));
            if (write) save_eigenpairs(dir("sample") / "lowrank", pairs, grid());
            return lowrank_reference(m_map, pairs, prior());
        }
        const Method m = parse_method(hessian);
        const ProbeData d = probe_hessian(problem.data_hessian(), cfg.probe);
        LaplaceApproximation la = build_laplace(m_map, approximate_factor(d, m, prior(), problem.window(), cfg.probe),
                                                problem.full_hessian(), cfg.laplace.correction_rank, seed("laplace.correction"));
        if (write) save_laplace(dir("sample") / ("laplace_" + hessian), la, {{"seed", seed("laplace.correction")}});
        return laplace_reference(la);
    }

    static std::string run_name(const std::string& method, const std::string& hessian) {
        return method == "pcn" ? "pcn" : method + "-" + hessian;
    }

    Chain sample(const std::string& method, const std::string& hessian, bool write = true) const {
        if (method != "pcn" && method != "gpcn") throw ConfigError("unknown sampler '" + method + "'");
        const std::string name = run_name(method, hessian);
        const Field m_map = map_point(write);
        ChainConfig cc;
        cc.n_samples = cfg.chain.n_samples;
        cc.burn_in = cfg.chain.burn_in;
        cc.thin = cfg.chain.thin;
        cc.probe_points = probe_points();
        cc.seed = seed("chain." + name);
        std::function<Chain(const ChainConfig&)> run;
        if (method == "pcn") {
            run = [this, m_map](const ChainConfig& c) { return run_pcn(problem, prior(), c, m_map); };
        } else {
            const GaussianReference ref = reference(hessian, m_map, write);
            run = [this, ref](const ChainConfig& c) { return run_gpcn(problem, ref, c); };
        }
        if (cfg.chain.beta > 0.0) {
            cc.beta = cfg.chain.beta;
        } else {
            int round = 0;
            cc.beta = tune_beta([&](double beta) {
                ChainConfig pilot = cc;
                pilot.beta = beta;
                pilot.n_samples = cfg.chain.pilot_length;
                pilot.burn_in = 0;
                pilot.keep_samples = false;
                pilot.seed = seed("chain.pilot." + name, static_cast<std::uint64_t>(round++));
                return run(pilot).acceptance_rate();
            }, cfg.chain.accept_lo, cfg.chain.accept_hi);
        }
        Chain ch = run(cc);
        if (write) write_chain(name, ch);
        return ch;
    }

    void write_chain(const std::string& name, const Chain& ch) const {
        const fs::path d = dir("sample") / name;
        std::ofstream csv = detail::open_csv(d / "traces.csv");
        csv << "step";
        for (std::size_t i = 0; i < ch.probe_traces.size(); ++i) csv << ",x" << (i + 1);
        csv << '\n';
        for (int k = 0; k < ch.config.n_samples; ++k) {
            csv << k;
            for (const RealVector& t : ch.probe_traces) csv << ',' << t[k];
            csv << '\n';
        }
        const ChainStatistics st = chain_statistics(ch);
        hpf1::write_field(d / "mean.hpf", st.mean);
        hpf1::write_field(d / "std.hpf", st.stddev);
        nlohmann::json j = {{"run", name},
                            {"beta", ch.config.beta},
                            {"n_samples", ch.config.n_samples},
                            {"burn_in", ch.config.effective_burn_in()},
                            {"seed", ch.config.seed},
                            {"acceptance_rate", ch.acceptance_rate()},
                            {"probe_points", ch.config.probe_points},
                            {"ess", st.ess}};
        detail::write_json(d / "summary.json", j);
        std::ofstream txt(d / "summary.txt");
        txt << "run " << name << "\nbeta " << ch.config.beta << "\nacceptance_rate " << ch.acceptance_rate() << "\n";
        for (std::size_t i = 0; i < st.ess.size(); ++i) txt << "ess x" << (i + 1) << ' ' << st.ess[i] << '\n';
    }

    // ------------------------------------------------------------- diagnose

    [[nodiscard]] std::vector<std::string> sample_runs() const {
        std::vector<std::string> runs;
        if (!fs::exists(dir("sample"))) return runs;
        for (const auto& e : fs::directory_iterator(dir("sample")))
            if (e.is_directory() && fs::exists(e.path() / "traces.csv")) runs.push_back(e.path().filename().string());
        std::sort(runs.begin(), runs.end());
        return runs;
    }

    /// Relative L2 error and mean ratio of a std field against the oracle.
    static std::pair<double, double> std_error(const Field& est, const Field& exact) {
        const double rel = (est.values - exact.values).norm() / exact.values.norm();
        const double ratio = (est.values.array() / exact.values.array()).mean();
        return {rel, ratio};
    }

    void diagnose() const {
        const auto runs = sample_runs();
        if (runs.empty()) throw MissingArtifacts("diagnose: no sample runs under " + dir("sample").string());
        const bool have_oracle = fs::exists(dir("oracle") / "std.hpf");
        const int burn_default = cfg.chain.burn_in;
        for (const auto& run : runs) {
            const fs::path src = dir("sample") / run;
            const nlohmann::json summary = detail::read_json(src / "summary.json");
            const int burn = summary.value("burn_in", burn_default < 0 ? 0 : burn_default);
            const auto cols = detail::read_csv_columns(src / "traces.csv");
            const fs::path d = dir("diagnose") / run;
            std::ofstream acf_csv = detail::open_csv(d / "autocorrelation.csv");
            std::ofstream hist_csv = detail::open_csv(d / "histograms.csv");
            std::ofstream ess_csv = detail::open_csv(d / "ess.csv");
            acf_csv << "probe,lag,rho\n";
            hist_csv << "probe,bin_lo,bin_hi,count\n";
            ess_csv << "probe,ess\n";
            for (std::size_t i = 1; i < cols.size(); ++i) {
                const RealVector post = cols[i].tail(cols[i].size() - burn);
                const RealVector acf = autocorrelation(post);
                for (Eigen::Index k = 0; k < std::min<Eigen::Index>(acf.size(), 500); ++k) acf_csv << i << ',' << k << ',' << acf[k] << '\n';
                const Histogram h = histogram(post);
                for (std::size_t b = 0; b < h.counts.size(); ++b)
                    hist_csv << i << ',' << h.lo + b * h.width << ',' << h.lo + (b + 1) * h.width << ',' << h.counts[b] << '\n';
                ess_csv << i << ',' << ess(post) << '\n';
            }
            if (have_oracle) {
                const auto [rel, ratio] = std_error(hpf1::read_field(src / "std.hpf", grid()), hpf1::read_field(dir("oracle") / "std.hpf", grid()));
                detail::write_json(d / "std_error.json", {{"relative_l2_error", rel}, {"mean_std_ratio", ratio}});
            }
        }
    }

    // ------------------------------------------------------------- oracle

    ExactPosterior oracle(bool write = true) const {
        const ExactPosterior post = exact_posterior(problem);
        if (!write) return post;
        const fs::path d = dir("oracle");
        fs::create_directories(d);
        const RealMatrix h = dense_materialize(problem.full_hessian());
        hpf1::write(d / "hessian.hpf", hpf1::from_matrix(h));
        hpf1::write_field(d / "mean.hpf", post.mean);
        hpf1::write_field(d / "std.hpf", post.stddev);
        const RealMatrix hd = dense_materialize(problem.misfit_hessian());
        const RealMatrix r = dense_materialize(prior().precision_operator());
        Eigen::GeneralizedSelfAdjointEigenSolver<RealMatrix> ges(0.5 * (hd + hd.transpose()), 0.5 * (r + r.transpose()));
        hpf1::write_vector(d / "gen_eigenvalues.hpf", ges.eigenvalues().reverse());
        detail::write_json(d / "manifest.json", {{"nx", grid().nx}, {"nz", grid().nz}, {"dx", grid().dx}, {"dz", grid().dz},
                                                 {"target_seed", problem.params().target_seed}});
        return post;
    }

    // ------------------------------------------------------------- report

    void report() const {
        bool any = false;
        const fs::path d = dir("report");
        std::vector<std::pair<std::string, nlohmann::json>> inv;
        for (const auto& p : preconditioner_names())
            if (fs::exists(dir("invert") / p / "summary.json")) inv.emplace_back(p, detail::read_json(dir("invert") / p / "summary.json"));
        if (!inv.empty()) {
            any = true;
            std::ofstream csv = detail::open_csv(d / "lbfgs.csv");
            csv << "preconditioner,iterations,converged\n";
            for (const auto& [p, j] : inv) csv << p << ',' << j.at("iterations").get<int>() << ',' << (j.at("converged").get<bool>() ? 1 : 0) << '\n';
        }
        const auto runs = sample_runs();
        if (!runs.empty()) {
            any = true;
            std::ofstream csv = detail::open_csv(d / "ess.csv");
            const std::size_t np = probe_points().size();
            csv << "run,acceptance_rate";
            for (std::size_t i = 0; i < np; ++i) csv << ",x" << (i + 1);
            csv << '\n';
            for (const auto& run : runs) {
                const nlohmann::json j = detail::read_json(dir("sample") / run / "summary.json");
                csv << run << ',' << j.at("acceptance_rate").get<double>();
                for (double e : j.at("ess")) csv << ',' << e;
                csv << '\n';
            }
            if (fs::exists(dir("oracle") / "std.hpf")) {
                std::ofstream sc = detail::open_csv(d / "std_error.csv");
                sc << "run,relative_l2_error,mean_std_ratio\n";
                const Field exact = hpf1::read_field(dir("oracle") / "std.hpf", grid());
                for (const auto& run : runs) {
                    const auto [rel, ratio] = std_error(hpf1::read_field(dir("sample") / run / "std.hpf", grid()), exact);
                    sc << run << ',' << rel << ',' << ratio << '\n';
                }
            }
        }
        if (!any) throw MissingArtifacts("report: no invert or sample artifacts under " + cfg.output_dir.string());
    }
};

}  // namespace psido
