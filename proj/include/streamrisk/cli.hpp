#pragma once

// Command-line front end. run_cli() is the whole program; tools/streamrisk.cpp only forwards to it.
//
// Exit codes: 0 success, 2 usage or config error, 3 runtime failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "streamrisk/asymptotics.hpp"
#include "streamrisk/distributions.hpp"
#include "streamrisk/errors.hpp"
#include "streamrisk/experiments.hpp"
#include "streamrisk/io.hpp"
#include "streamrisk/svg.hpp"

namespace streamrisk {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

struct CliConfig {
    std::string command;
    std::optional<std::string> config_path;
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<unsigned> threads;
    std::optional<std::string> dist;
    std::optional<double> alpha;
};

// Thrown for errors that should end in exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace cli_detail {

inline unsigned resolve_threads(const CliConfig& cli) {
    if (cli.threads) {
        if (*cli.threads == 0) throw UsageError("--threads must be a positive integer");
        return *cli.threads;
    }
    if (const char* env = std::getenv("STREAMRISK_THREADS"); env && *env) {
        std::uint64_t v = 0;
        try {
            v = io::parse_u64(env);
        } catch (const ParseError&) {
            throw UsageError("STREAMRISK_THREADS must be a positive integer");
        }
        if (v == 0 || v > 4096) throw UsageError("STREAMRISK_THREADS must be a positive integer");
        return static_cast<unsigned>(v);
    }
    return 1;
}

// Config file (if any) with command-line overrides applied, then validated.
inline ExperimentConfig resolve_config(const CliConfig& cli, std::size_t min_replicates = 0) {
    ExperimentConfig c;
    try {
        if (cli.config_path) c = load_config(*cli.config_path);
        if (cli.dist) c.model = parse_distribution(*cli.dist);
        if (cli.alpha) c.alpha = *cli.alpha;
        if (cli.seed_override) c.master_seed = *cli.seed_override;
        if (c.replicates < min_replicates)
            throw UsageError("replicates ≥ " + std::to_string(min_replicates) + " required");
        validate(c);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    return c;
}

inline std::filesystem::path output_dir(const CliConfig& cli) {
    std::filesystem::path dir(cli.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

// Six significant digits for console tables; files keep full precision.
inline std::string brief(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string brief(const std::optional<double>& v) { return v ? brief(*v) : std::string("n/a"); }

inline double relative_gap(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace cli_detail

inline int cmd_oracle(const CliConfig& cli, std::ostream& out) {
    DistributionModel model = DistributionModel::uniform(0.0, 1.0);
    double alpha = cli.alpha.value_or(0.5);
    try {
        if (cli.config_path) {
            const auto c = load_config(*cli.config_path);
            model = c.model;
            if (!cli.alpha) alpha = c.alpha;
        }
        if (cli.dist) model = parse_distribution(*cli.dist);
        detail::require_alpha(alpha);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }

    const RiskOracle closed = oracle(model, alpha);
    const RiskOracle quad = numeric_oracle(model, alpha);
    auto row = [](const RiskOracle& o) {
        return std::array<double, 5>{o.theta_alpha, o.vartheta_alpha, o.density_at_quantile, o.v_alpha,
                                     o.vartheta_alpha / o.theta_alpha};
    };
    const auto a = row(closed), b = row(quad);
    std::array<double, 5> gap{};
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = cli_detail::relative_gap(a[i], b[i]);

    const std::array<const char*, 5> names{"theta_alpha", "vartheta_alpha", "density", "v_alpha", "ratio"};
    out << model.to_string() << "  alpha=" << io::format_double(alpha) << '\n';
    out << std::left << std::setw(16) << "quantity" << std::setw(24) << "closed_form" << std::setw(24)
        << "quadrature" << "rel_discrepancy\n";
    for (std::size_t i = 0; i < names.size(); ++i)
        out << std::setw(16) << names[i] << std::setw(24) << io::format_double(a[i]) << std::setw(24)
            << io::format_double(b[i]) << io::format_double(gap[i]) << '\n';

    auto file = cli_detail::open_output(cli_detail::output_dir(cli) / "oracle.csv");
    write_comment(file, "streamrisk oracle; dist=" + model.to_string() + "; alpha=" + io::format_double(alpha));
    file << "source,alpha,theta_alpha,vartheta_alpha,density,v_alpha,ratio\n";
    auto emit = [&](const char* source, const std::array<double, 5>& v) {
        file << source << ',' << io::format_double(alpha);
        for (double x : v) file << ',' << io::format_double(x);
        file << '\n';
    };
    emit("closed_form", a);
    emit("quadrature", b);
    emit("rel_discrepancy", gap);
    return kExitOk;
}

inline int cmd_asymptotics(const CliConfig& cli, std::ostream& out) {
    const ExperimentConfig c = cli_detail::resolve_config(cli);
    const RiskOracle o = oracle(c.model, c.alpha);
    AsymptoticReport r;
    try {
        r = asymptotic_report(o, c.schedule);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    const auto opt = [](const std::optional<double>& v) { return io::format_optional(v); };
    const std::vector<std::pair<std::string, std::string>> rows{
        {"quantile_clt_var", io::format_double(r.quantile_clt_var)},
        {"sq_var_slow", io::format_double(r.sq_var_slow)},
        {"s2_11", opt(r.s2 ? std::optional(r.s2->xx) : std::nullopt)},
        {"s2_12", opt(r.s2 ? std::optional(r.s2->xy) : std::nullopt)},
        {"s2_22", opt(r.s2 ? std::optional(r.s2->yy) : std::nullopt)},
        {"c_alpha_b1", opt(r.c_alpha_b1)},
        {"tau_alpha_sq", io::format_double(r.tau_alpha_sq)},
        {"gamma_vartheta", io::format_double(r.gamma_vartheta)},
        {"b1_threshold", io::format_double(r.b1_threshold)},
        {"averaged_quantile_remainder_exponent", io::format_double(r.averaged_quantile_remainder_exponent)},
        {"embedded_remainder_exponent", io::format_double(r.embedded_remainder_exponent)},
        {"verdict", r.verdict ? std::string(to_string(*r.verdict)) : std::string("n/a")},
        {"degenerate", r.degenerate ? "true" : "false"},
    };
    for (const auto& [k, v] : rows) out << std::left << std::setw(40) << k << v << '\n';
    for (const auto& w : c.schedule.validate().violations) out << "warning: " << w << '\n';

    auto file = cli_detail::open_output(cli_detail::output_dir(cli) / "asymptotics.csv");
    write_comment(file, "streamrisk asymptotics; " + describe(c));
    for (std::size_t i = 0; i < rows.size(); ++i) file << (i ? "," : "") << rows[i].first;
    file << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) file << (i ? "," : "") << rows[i].second;
    file << '\n';
    return kExitOk;
}

inline int cmd_rates(const CliConfig& cli, std::ostream& out) {
    const ExperimentConfig c = cli_detail::resolve_config(cli);
    const unsigned threads = cli_detail::resolve_threads(cli);
    const auto dir = cli_detail::output_dir(cli);
    const ExperimentResult res = run_experiment(c, threads);
    const std::string header = "streamrisk rates; " + describe(c);

    const auto mse = mse_table(res);
    const auto fits = ratefit_table(res);
    {
        auto f = cli_detail::open_output(dir / "mse.csv");
        write_comment(f, header);
        write_csv(f, mse);
    }
    {
        auto f = cli_detail::open_output(dir / "ratefit.csv");
        write_comment(f, header);
        write_csv(f, fits);
    }

    std::vector<svg::Curve> curves;
    for (Series s : reported_series(c)) {
        svg::Curve emp{std::string(to_string(s)), {}, false, true};
        for (const auto& row : mse)
            if (row.variant == to_string(s)) emp.points.emplace_back(static_cast<double>(row.n), row.mse);
        curves.push_back(std::move(emp));
    }
    svg::Curve theory{"embedded first order", {}, true, false};
    for (const auto& row : mse)
        if (row.variant == to_string(Series::Embedded) && row.theory_first_order)
            theory.points.emplace_back(static_cast<double>(row.n), *row.theory_first_order);
    if (!theory.points.empty()) curves.push_back(std::move(theory));
    {
        auto f = cli_detail::open_output(dir / "rates.svg");
        f << "<!-- " << header << " -->\n";
        svg::loglog_plot(f, curves, "MSE vs n, " + c.model.to_string() + ", alpha=" + io::format_double(c.alpha),
                         "n", "MSE");
    }

    out << std::left << std::setw(20) << "variant" << std::setw(24) << "slope" << std::setw(24) << "r2"
        << "theory_slope\n";
    for (const auto& r : fits)
        out << std::setw(20) << r.variant << std::setw(24) << cli_detail::brief(r.slope) << std::setw(24)
            << cli_detail::brief(r.r2) << cli_detail::brief(r.theory_slope) << '\n';
    return kExitOk;
}

inline int cmd_clt(const CliConfig& cli, std::ostream& out) {
    const ExperimentConfig c = cli_detail::resolve_config(cli, 30);
    const unsigned threads = cli_detail::resolve_threads(cli);
    const auto dir = cli_detail::output_dir(cli);
    const ExperimentResult res = run_experiment(c, threads);
    const std::string header = "streamrisk clt; " + describe(c);

    const auto rows = clt_table(res);
    {
        auto f = cli_detail::open_output(dir / "clt.csv");
        write_comment(f, header);
        write_csv(f, rows);
    }
    const auto& last = rows.back();
    std::optional<SymMatrix2> ellipse;
    if (last.theory11 && last.theory22) ellipse = SymMatrix2{*last.theory11, last.theory12.value_or(0.0), *last.theory22};
    {
        auto f = cli_detail::open_output(dir / "clt.svg");
        f << "<!-- " << header << " -->\n";
        const auto samples = res.clt_samples(res.checkpoints() - 1);
        svg::clt_scatter(f, samples, ellipse, "rescaled errors at n=" + std::to_string(last.n));
    }

    out << std::left << std::setw(10) << "n" << std::setw(28) << "s2_11" << std::setw(28) << "s2_12"
        << "s2_22\n";
    for (const auto& r : rows) {
        auto cell = [](double v, double se) { return cli_detail::brief(v) + " +- " + cli_detail::brief(se); };
        out << std::setw(10) << r.n << std::setw(28) << cell(r.s11, r.se11) << std::setw(28)
            << cell(r.s12, r.se12) << cell(r.s22, r.se22) << '\n';
    }
    out << std::setw(10) << "theory" << std::setw(28) << cli_detail::brief(last.theory11) << std::setw(28)
        << cli_detail::brief(last.theory12) << cli_detail::brief(last.theory22) << '\n';
    return kExitOk;
}

inline int cmd_compare(const CliConfig& cli, std::ostream& out) {
    const ExperimentConfig c = cli_detail::resolve_config(cli);
    {
        auto variants = c.variants;
        std::sort(variants.begin(), variants.end());
        if (std::unique(variants.begin(), variants.end()) - variants.begin() < 2)
            throw UsageError("compare needs at least two variants");
    }
    const unsigned threads = cli_detail::resolve_threads(cli);
    const auto dir = cli_detail::output_dir(cli);
    const ExperimentResult res = run_experiment(c, threads);
    const auto cmp = compare_variants(res);
    const std::string header = "streamrisk compare; " + describe(c);
    {
        auto f = cli_detail::open_output(dir / "compare.csv");
        write_comment(f, header);
        write_csv(f, compare_table(cmp));
    }
    out << "predicted: " << (cmp.theory ? to_string(cmp.theory->verdict) : std::string_view("n/a"));
    if (cmp.theory)
        out << " (b1=" << io::format_double(c.schedule.b1)
            << ", threshold=" << io::format_double(cmp.theory->b1_threshold) << ")";
    out << '\n';
    for (const auto& row : cmp.rows) {
        if (row.n != res.checkpoint_n(res.checkpoints() - 1)) continue;
        out << to_string(row.numerator) << '/' << to_string(row.denominator)
            << " mse ratio " << cli_detail::brief(row.ratio.ratio) << " [" << cli_detail::brief(row.ratio.ci_lo)
            << ", " << cli_detail::brief(row.ratio.ci_hi) << "] " << pair_verdict(row)
            << '\n';
    }
    return kExitOk;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Streaming joint quantile / superquantile estimation experiments", "streamrisk"};
    app.require_subcommand(1);
    CliConfig cli;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    const std::array<std::pair<const char*, const char*>, 5> commands{{
        {"oracle", "closed-form vs quadrature risk quantities"},
        {"asymptotics", "limiting variances, MSE constants and the variance verdict"},
        {"rates", "Monte-Carlo MSE per checkpoint and fitted log-log slopes"},
        {"clt", "empirical limiting covariance against theory"},
        {"compare", "paired MSE ratios between superquantile variants"},
    }};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", cli.config_path, "config file (key = value)");
        sub->add_option("--out", cli.output_dir, "output directory (created if absent)");
        sub->add_option("--seed", seed, "master seed override");
        sub->add_option("--threads", threads, "worker threads (default $STREAMRISK_THREADS or 1)");
        sub->add_option("--dist", cli.dist, "distribution, e.g. exponential:1 or pareto:1,2.2");
        sub->add_option("--alpha", cli.alpha, "risk level in (0,1)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    cli.command = app.get_subcommands().front()->get_name();
    cli.seed_override = seed;
    cli.threads = threads;

    try {
        if (cli.command == "oracle") return cmd_oracle(cli, out);
        if (cli.command == "asymptotics") return cmd_asymptotics(cli, out);
        if (cli.command == "rates") return cmd_rates(cli, out);
        if (cli.command == "clt") return cmd_clt(cli, out);
        return cmd_compare(cli, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace streamrisk
