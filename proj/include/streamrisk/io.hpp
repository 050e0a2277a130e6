#pragma once

// Experiment config files and CSV result tables.
//
// Config: one `key = value` per line, `#` starts a comment, no nesting.
//
//   dist        = exponential rate=1.0      (or exponential:1.0)
//   alpha       = 0.9
//   a1, a, b1, b                             gain multipliers and exponents
//   n_grid      = 1000,10000,100000          (or logspace:1000,1000000,7)
//   replicates  = 400
//   seed        = 12345
//   experiment  = 0
//   warm_start  = false
//   variants    = embedded,classical,bardou
//
// CSV numbers use the shortest decimal that round-trips; missing values are `n/a`.
// Every file starts with a `#` line holding the resolved config and seed.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "streamrisk/errors.hpp"
#include "streamrisk/experiments.hpp"

namespace streamrisk {

// Malformed config or CSV text.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io {

inline std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const auto next = s.find(sep, pos);
        out.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) return out;
        pos = next + 1;
    }
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("n/a");
}

inline double parse_double(std::string_view s) {
    s = trim(s);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("invalid number '" + std::string(s) + "'");
    return v;
}

inline std::optional<double> parse_optional(std::string_view s) {
    if (trim(s) == "n/a") return std::nullopt;
    return parse_double(s);
}

inline std::uint64_t parse_u64(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        // Accept integral values written in floating notation, e.g. 1e6.
        const double d = parse_double(s);
        if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
            throw ParseError("invalid non-negative integer '" + std::string(s) + "'");
        return static_cast<std::uint64_t>(d);
    }
    return v;
}

inline bool parse_bool(std::string_view s) {
    s = trim(s);
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError("invalid boolean '" + std::string(s) + "'");
}

// Ascending, de-duplicated, rounded log-spaced grid.
inline std::vector<std::uint64_t> logspace_grid(std::uint64_t lo, std::uint64_t hi, std::size_t count) {
    if (lo == 0 || hi < lo || count < 1) throw ParseError("logspace needs 0 < lo <= hi and count >= 1");
    std::vector<std::uint64_t> grid;
    if (count == 1) return {hi};
    const double l0 = std::log10(static_cast<double>(lo));
    const double l1 = std::log10(static_cast<double>(hi));
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(count - 1);
        const auto v = static_cast<std::uint64_t>(std::llround(std::pow(10.0, l0 + t * (l1 - l0))));
        if (grid.empty() || v > grid.back()) grid.push_back(v);
    }
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

inline std::vector<std::uint64_t> parse_grid(std::string_view s) {
    s = trim(s);
    if (s.starts_with("logspace:")) {
        const auto parts = split(s.substr(9), ',');
        if (parts.size() != 3) throw ParseError("logspace expects lo,hi,count");
        return logspace_grid(parse_u64(parts[0]), parse_u64(parts[1]), parse_u64(parts[2]));
    }
    std::vector<std::uint64_t> grid;
    for (auto part : split(s, ',')) grid.push_back(parse_u64(part));
    return grid;
}

inline std::string format_grid(const std::vector<std::uint64_t>& grid) {
    std::string out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(grid[i]);
    }
    return out;
}

}  // namespace io

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    std::map<std::string, std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = io::trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key(io::trim(view.substr(0, eq)));
        const std::string_view value = io::trim(view.substr(eq + 1));
        if (seen.count(key)) throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        seen[key] = std::string(value);
        try {
            if (key == "dist") c.model = parse_distribution(value);
            else if (key == "alpha") c.alpha = io::parse_double(value);
            else if (key == "a1") c.schedule.a1 = io::parse_double(value);
            else if (key == "a") c.schedule.a_exp = io::parse_double(value);
            else if (key == "b1") c.schedule.b1 = io::parse_double(value);
            else if (key == "b") c.schedule.b_exp = io::parse_double(value);
            else if (key == "n_grid") c.n_grid = io::parse_grid(value);
            else if (key == "replicates") c.replicates = io::parse_u64(value);
            else if (key == "seed") c.master_seed = io::parse_u64(value);
            else if (key == "experiment") c.experiment_id = io::parse_u64(value);
            else if (key == "warm_start") c.warm_start = io::parse_bool(value);
            else if (key == "variants") {
                c.variants.clear();
                for (auto name : io::split(value, ',')) {
                    const auto s = parse_series(io::trim(name));
                    if (!s || !is_superquantile(*s))
                        throw ParseError("unknown variant '" + std::string(io::trim(name)) + "'");
                    c.variants.push_back(*s);
                }
            } else {
                throw ParseError("unknown key '" + key + "'");
            }
        } catch (const DomainError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            const std::string msg = e.what();
            if (msg.starts_with("line ")) throw;
            throw ParseError("line " + std::to_string(lineno) + ": " + msg);
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    return parse_config(in);
}

// Resolved config as ordered (key, value) pairs in config-file syntax.
inline std::vector<std::pair<std::string, std::string>> config_fields(const ExperimentConfig& c) {
    std::string variants;
    for (std::size_t i = 0; i < c.variants.size(); ++i) {
        if (i) variants += ',';
        variants += to_string(c.variants[i]);
    }
    using io::format_double;
    return {{"dist", c.model.to_string()},
            {"alpha", format_double(c.alpha)},
            {"a1", format_double(c.schedule.a1)},
            {"a", format_double(c.schedule.a_exp)},
            {"b1", format_double(c.schedule.b1)},
            {"b", format_double(c.schedule.b_exp)},
            {"n_grid", io::format_grid(c.n_grid)},
            {"replicates", std::to_string(c.replicates)},
            {"seed", std::to_string(c.master_seed)},
            {"experiment", std::to_string(c.experiment_id)},
            {"warm_start", c.warm_start ? "true" : "false"},
            {"variants", variants}};
}

// Single-line `key=value; ...` rendering used in output headers.
inline std::string describe(const ExperimentConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_fields(c)) out += (out.empty() ? "" : "; ") + k + "=" + v;
    return out;
}

// The same config as a parseable config file.
inline std::string describe_as_config(const ExperimentConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_fields(c)) out += k + " = " + v + "\n";
    return out;
}

// ---- result schemas -------------------------------------------------------

struct MseRow {
    std::string variant;
    std::uint64_t n = 0;
    double mse = 0.0;
    double stderr_ = 0.0;
    std::optional<double> theory_first_order;

    friend bool operator==(const MseRow&, const MseRow&) = default;
};

struct RateRow {
    std::string variant;
    std::optional<double> slope;
    std::optional<double> intercept;
    std::optional<double> r2;
    std::optional<double> theory_slope;

    friend bool operator==(const RateRow&, const RateRow&) = default;
};

struct CltRow {
    std::uint64_t n = 0;
    double s11 = 0.0, s12 = 0.0, s22 = 0.0;
    double se11 = 0.0, se12 = 0.0, se22 = 0.0;
    std::optional<double> theory11, theory12, theory22;

    friend bool operator==(const CltRow&, const CltRow&) = default;
};

struct CompareRow {
    std::uint64_t n = 0;
    std::string numerator;
    std::string denominator;
    double ratio = 1.0;
    double stderr_ = 0.0;
    double ci_lo = 1.0;
    double ci_hi = 1.0;
    std::string empirical;
    std::string predicted;  // "n/a" unless the row compares embedded with a competitor

    friend bool operator==(const CompareRow&, const CompareRow&) = default;
};

inline constexpr std::string_view kMseHeader = "variant,n,mse,stderr,theory_first_order";
inline constexpr std::string_view kRateHeader = "variant,slope,intercept,r2,theory_slope";
inline constexpr std::string_view kCltHeader =
    "n,s2_11,s2_12,s2_22,se_11,se_12,se_22,theory_11,theory_12,theory_22";
inline constexpr std::string_view kCompareHeader =
    "n,numerator,denominator,ratio,stderr,ci_lo,ci_hi,empirical,predicted";

inline void write_comment(std::ostream& out, std::string_view text) { out << "# " << text << '\n'; }

inline void write_csv(std::ostream& out, const std::vector<MseRow>& rows) {
    using io::format_double;
    out << kMseHeader << '\n';
    for (const auto& r : rows)
        out << r.variant << ',' << r.n << ',' << format_double(r.mse) << ',' << format_double(r.stderr_)
            << ',' << io::format_optional(r.theory_first_order) << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<RateRow>& rows) {
    out << kRateHeader << '\n';
    for (const auto& r : rows)
        out << r.variant << ',' << io::format_optional(r.slope) << ',' << io::format_optional(r.intercept)
            << ',' << io::format_optional(r.r2) << ',' << io::format_optional(r.theory_slope) << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<CltRow>& rows) {
    using io::format_double;
    out << kCltHeader << '\n';
    for (const auto& r : rows)
        out << r.n << ',' << format_double(r.s11) << ',' << format_double(r.s12) << ','
            << format_double(r.s22) << ',' << format_double(r.se11) << ',' << format_double(r.se12)
            << ',' << format_double(r.se22) << ',' << io::format_optional(r.theory11) << ','
            << io::format_optional(r.theory12) << ',' << io::format_optional(r.theory22) << '\n';
}

inline void write_csv(std::ostream& out, const std::vector<CompareRow>& rows) {
    using io::format_double;
    out << kCompareHeader << '\n';
    for (const auto& r : rows)
        out << r.n << ',' << r.numerator << ',' << r.denominator << ',' << format_double(r.ratio) << ','
            << format_double(r.stderr_) << ',' << format_double(r.ci_lo) << ','
            << format_double(r.ci_hi) << ',' << r.empirical << ',' << r.predicted << '\n';
}

namespace io {

// Data lines of a CSV stream after checking its header; `#` lines are skipped.
inline std::vector<std::vector<std::string>> read_table(std::istream& in, std::string_view header) {
    std::string line;
    bool have_header = false;
    std::vector<std::vector<std::string>> rows;
    const std::size_t width = split(header, ',').size();
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            if (line != header) throw ParseError("unexpected CSV header '" + line + "'");
            have_header = true;
            continue;
        }
        auto fields = split(line, ',');
        if (fields.size() != width) throw ParseError("wrong field count in CSV line '" + line + "'");
        rows.emplace_back(fields.begin(), fields.end());
    }
    if (!have_header) throw ParseError("missing CSV header");
    return rows;
}

}  // namespace io

inline std::vector<MseRow> read_mse_csv(std::istream& in) {
    std::vector<MseRow> out;
    for (const auto& f : io::read_table(in, kMseHeader))
        out.push_back({f[0], io::parse_u64(f[1]), io::parse_double(f[2]), io::parse_double(f[3]),
                       io::parse_optional(f[4])});
    return out;
}

inline std::vector<RateRow> read_ratefit_csv(std::istream& in) {
    std::vector<RateRow> out;
    for (const auto& f : io::read_table(in, kRateHeader))
        out.push_back({f[0], io::parse_optional(f[1]), io::parse_optional(f[2]), io::parse_optional(f[3]),
                       io::parse_optional(f[4])});
    return out;
}

inline std::vector<CltRow> read_clt_csv(std::istream& in) {
    std::vector<CltRow> out;
    for (const auto& f : io::read_table(in, kCltHeader)) {
        CltRow r;
        r.n = io::parse_u64(f[0]);
        r.s11 = io::parse_double(f[1]);
        r.s12 = io::parse_double(f[2]);
        r.s22 = io::parse_double(f[3]);
        r.se11 = io::parse_double(f[4]);
        r.se12 = io::parse_double(f[5]);
        r.se22 = io::parse_double(f[6]);
        r.theory11 = io::parse_optional(f[7]);
        r.theory12 = io::parse_optional(f[8]);
        r.theory22 = io::parse_optional(f[9]);
        out.push_back(r);
    }
    return out;
}

inline std::vector<CompareRow> read_compare_csv(std::istream& in) {
    std::vector<CompareRow> out;
    for (const auto& f : io::read_table(in, kCompareHeader))
        out.push_back({io::parse_u64(f[0]), f[1], f[2], io::parse_double(f[3]), io::parse_double(f[4]),
                       io::parse_double(f[5]), io::parse_double(f[6]), f[7], f[8]});
    return out;
}

// ---- building tables from results ------------------------------------------

// Series whose first-order MSE is known: averaged quantile and every configured variant.
inline std::vector<Series> reported_series(const ExperimentConfig& c) {
    std::vector<Series> out{Series::AveragedQuantile};
    auto variants = c.variants;
    std::sort(variants.begin(), variants.end());
    variants.erase(std::unique(variants.begin(), variants.end()), variants.end());
    out.insert(out.end(), variants.begin(), variants.end());
    return out;
}

inline std::optional<double> theory_first_order(const ExperimentResult& res, Series s, std::uint64_t n) {
    const auto& sched = res.config().schedule;
    const auto& o = res.truth();
    try {
        switch (s) {
            case Series::AveragedQuantile:
                return mse_bound_averaged_quantile(o, sched, n).first_order;
            case Series::Embedded:
                return mse_bound_embedded(o, sched, n).first_order;
            case Series::Classical:
            case Series::Bardou: {
                const auto cmp = variance_comparison(o, sched.b1, sched.b_exp);
                return cmp.gamma_vartheta * std::pow(static_cast<double>(n), -sched.b_exp);
            }
            case Series::Quantile: return std::nullopt;
        }
    } catch (const DomainError&) {
    }
    return std::nullopt;
}

inline double theory_slope(const ExperimentConfig& c, Series s) {
    return s == Series::AveragedQuantile ? -1.0 : -c.schedule.b_exp;
}

inline std::vector<MseRow> mse_table(const ExperimentResult& res) {
    std::vector<MseRow> rows;
    for (Series s : reported_series(res.config()))
        for (std::size_t g = 0; g < res.checkpoints(); ++g) {
            const auto e = res.mse(s, g);
            const auto n = res.checkpoint_n(g);
            rows.push_back({std::string(to_string(s)), n, e.mse, e.stderr_, theory_first_order(res, s, n)});
        }
    return rows;
}

inline std::vector<RateRow> ratefit_table(const ExperimentResult& res) {
    std::vector<RateRow> rows;
    for (Series s : reported_series(res.config())) {
        RateRow row{std::string(to_string(s)), {}, {}, {}, theory_slope(res.config(), s)};
        try {
            const auto fit = fit_rate(res, s);
            row.slope = fit.slope;
            row.intercept = fit.intercept;
            row.r2 = fit.r2;
        } catch (const DomainError&) {
        }
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<CltRow> clt_table(const ExperimentResult& res) {
    const auto& sched = res.config().schedule;
    const auto& o = res.truth();
    std::optional<double> t11 = quantile_clt_variance(o), t12, t22;
    if (sched.fast_regime()) {
        if (sched.b1 > 0.5) {
            const auto s2 = clt_covariance_fast(o, sched.b1);
            t12 = s2.xy;
            t22 = s2.yy;
        }
    } else {
        t22 = clt_variance_slow(o);  // marginal statement only; no joint covariance
    }
    std::vector<CltRow> rows;
    for (std::size_t g = 0; g < res.checkpoints(); ++g) {
        const auto est = empirical_clt_cov(res, g);
        rows.push_back({res.checkpoint_n(g), est.cov.xx, est.cov.xy, est.cov.yy, est.stderr_.xx,
                        est.stderr_.xy, est.stderr_.yy, t11, t12, t22});
    }
    return rows;
}

// Verdict words are phrased for embedded vs a competitor; other pairs say which side won.
inline std::string pair_verdict(const ComparisonRow& r) {
    const Verdict v = empirical_verdict(r.ratio);
    if (r.numerator == Series::Embedded || v == Verdict::Tie) return std::string(to_string(v));
    return v == Verdict::EmbeddedBetter ? "numerator-better" : "denominator-better";
}

inline std::vector<CompareRow> compare_table(const VariantComparison& cmp) {
    std::vector<CompareRow> rows;
    for (const auto& r : cmp.rows) {
        const bool vs_embedded = r.numerator == Series::Embedded;
        rows.push_back({r.n, std::string(to_string(r.numerator)), std::string(to_string(r.denominator)),
                        r.ratio.ratio, r.ratio.stderr_, r.ratio.ci_lo, r.ratio.ci_hi,
                        pair_verdict(r),
                        vs_embedded && cmp.theory ? std::string(to_string(cmp.theory->verdict))
                                                  : std::string("n/a")});
    }
    return rows;
}

}  // namespace streamrisk
