// psido: command-line driver for the quadratic benchmark pipeline.
//
//   psido approx   --config run.ini
//   psido invert   --config run.ini --precond psfplus
//   psido sample   --config run.ini --method gpcn --hessian psfplus
//   psido diagnose --config run.ini
//   psido oracle   --config run.ini
//   psido report   --config run.ini
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "psido/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct CommonArgs {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
    double grid_scale = 1.0;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config, "INI configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", a.output, "output directory (overrides run.output_dir)");
    sub->add_option("--seed", a.seed, "global seed (overrides run.seed)");
    sub->add_option("--grid-scale", a.grid_scale, "scale nx and nz, keeping the physical extent")->check(CLI::PositiveNumber);
}

psido::PipelineConfig make_config(const CommonArgs& a) {
    psido::PipelineConfig c = psido::load_config(a.config);
    if (!a.output.empty()) c.output_dir = a.output;
    if (a.seed) c.global_seed = *a.seed;
    psido::apply_grid_scale(c, a.grid_scale);
    psido::validate(c);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hessian approximation, preconditioned inversion and MCMC sampling on the quadratic benchmark"};
    app.require_subcommand(1);
    CommonArgs common;

    auto* approx = app.add_subcommand("approx", "probe the data Hessian and build PSF, PDO and PSF+ symbols");
    add_common(approx, common);

    std::string precond = "psfplus";
    auto* invert = app.add_subcommand("invert", "run L-BFGS with a chosen initial inverse Hessian");
    add_common(invert, common);
    invert->add_option("--precond", precond, "none | prior | psf | pdo | psfplus")
        ->check(CLI::IsMember({"none", "prior", "psf", "pdo", "psfplus"}));

    std::string method = "gpcn";
    std::string hessian = "psfplus";
    auto* sample = app.add_subcommand("sample", "run a pCN or gpCN chain");
    add_common(sample, common);
    sample->add_option("--method", method, "pcn | gpcn")->check(CLI::IsMember({"pcn", "gpcn"}));
    sample->add_option("--hessian", hessian, "lr | psf | pdo | psfplus (gpcn only)")->check(CLI::IsMember({"lr", "psf", "pdo", "psfplus"}));

    auto* diagnose = app.add_subcommand("diagnose", "autocorrelation, histograms and ESS for every sample run");
    add_common(diagnose, common);
    auto* oracle = app.add_subcommand("oracle", "dense Hessian, exact posterior and generalized eigenvalues (N <= 4096)");
    add_common(oracle, common);
    auto* report = app.add_subcommand("report", "summary tables from earlier runs");
    add_common(report, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        const psido::Pipeline p(make_config(common));
        if (approx->parsed()) {
            const auto out = p.approx();
            std::cout << "matvecs " << out.matvecs << '\n';
            for (const auto& [m, e] : out.errors) std::cout << psido::to_string(m) << " median_relative_error " << e << '\n';
        } else if (invert->parsed()) {
            const auto r = p.invert(precond);
            std::cout << precond << " iterations " << r.record.iterations << (r.record.converged ? " converged" : " not converged") << '\n';
        } else if (sample->parsed()) {
            const psido::Chain ch = p.sample(method, hessian);
            std::cout << psido::Pipeline::run_name(method, hessian) << " beta " << ch.config.beta << " acceptance "
                      << ch.acceptance_rate() << '\n';
        } else if (diagnose->parsed()) {
            p.diagnose();
        } else if (oracle->parsed()) {
            p.oracle();
        } else if (report->parsed()) {
            p.report();
        }
    } catch (const psido::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const psido::MissingArtifacts& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const psido::Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalError;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kNumericalError;
    }
    return kOk;
}
