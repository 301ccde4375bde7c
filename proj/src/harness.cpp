#include "lrsm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lrsm/errors.hpp"
#include "lrsm/extremal.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/scoring.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lrsm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

double get_num(const std::map<std::string, std::string>& cfg,
               const std::string& key, double fallback) {
    auto it = cfg.find(key);
    return it == cfg.end() ? fallback : std::stod(it->second);
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

}  // namespace

BackendSettings BackendSettings::parse(const std::string& text) {
    BackendSettings b;
    const auto colon = text.find(':');
    const std::string name = trim(text.substr(0, colon));
    if (name == "full") b.kind = Full;
    else if (name == "vecchia") b.kind = Vecchia;
    else if (name == "taper") b.kind = Taper;
    else if (name == "lowrank") b.kind = LowRank;
    else throw std::invalid_argument("unknown backend: " + name);
    if (colon == std::string::npos) return b;
    for (const auto& kv : split(text.substr(colon + 1), ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("bad backend option: " + kv);
        const std::string key = trim(kv.substr(0, eq));
        const double val = std::stod(kv.substr(eq + 1));
        if (key == "m") b.m = static_cast<int>(val);
        else if (key == "sparsity") b.sparsity = val;
        else if (key == "psi") b.psi = val;
        else if (key == "k") b.k = static_cast<int>(val);
        else if (key == "tau2") b.tau2 = val;
        else throw std::invalid_argument("unknown backend option: " + key);
    }
    return b;
}

std::string BackendSettings::label() const {
    switch (kind) {
        case Full: return "full";
        case Vecchia: return "vecchia_m" + std::to_string(m);
        case Taper:
            return psi > 0.0 ? "taper_psi" + fmt(psi, 3)
                             : "taper_s" + fmt(sparsity, 2);
        case LowRank: return "lowrank_k" + std::to_string(k);
    }
    return "backend";
}

std::string BackendSettings::display() const {
    switch (kind) {
        case Full: return "Full GP";
        case Vecchia: return "Vecchia (m=" + std::to_string(m) + ")";
        case Taper:
            return psi > 0.0
                       ? "Taper (psi=" + fmt(psi, 3) + ")"
                       : "Taper (" + fmt(100.0 * sparsity, 0) + "% sparse)";
        case LowRank: return "Low Rank (" + std::to_string(k) + ")";
    }
    return "?";
}

LikelihoodBackend build_backend(const BackendSettings& settings,
                                const SiteSet& train_sites) {
    switch (settings.kind) {
        case BackendSettings::Full:
            return LikelihoodBackend::full_gp();
        case BackendSettings::Vecchia:
            return LikelihoodBackend::vecchia(
                build_vecchia_plan(train_sites, settings.m));
        case BackendSettings::Taper: {
            const double psi =
                settings.psi > 0.0
                    ? settings.psi
                    : taper_range_for_sparsity(train_sites, settings.sparsity);
            return LikelihoodBackend::taper(TaperSpec{psi});
        }
        case BackendSettings::LowRank: {
            // reference field for the eigenbasis: nu = 0.5, rho = 0.5
            BasisExpansion basis = eigenbasis(
                train_sites, settings.k, MaternParams{0.5, 0.5}, settings.tau2);
            return LikelihoodBackend::low_rank(std::move(basis));
        }
    }
    throw std::logic_error("unreachable");
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(lineno) +
                            " is not key = value: " + line);
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

Dataset simulate_dataset(const SimulateOptions& opt) {
    if (opt.n < 4) throw std::invalid_argument("simulate: need n >= 4");
    if (opt.T < 1) throw std::invalid_argument("simulate: need T >= 1");
    if (!(opt.holdout_fraction > 0.0 && opt.holdout_fraction < 1.0))
        throw std::invalid_argument("simulate: holdout fraction in (0,1)");

    SiteSet all = sample_uniform_sites(opt.n, Rng::derive(opt.seed, {11}));
    LrsmSimulation sim = simulate_lrsm(all, MaternParams{opt.rho, opt.nu},
                                       opt.alpha, opt.T,
                                       Rng::derive(opt.seed, {12}));

    // random holdout split
    std::vector<int> idx(opt.n);
    for (int i = 0; i < opt.n; ++i) idx[i] = i;
    Rng rng(Rng::derive(opt.seed, {13}));
    for (int i = opt.n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform() * (i + 1));
        std::swap(idx[i], idx[j]);
    }
    const int n_test =
        std::max(1, static_cast<int>(std::lround(opt.n * opt.holdout_fraction)));
    Dataset ds;
    ds.meta.test_indices.assign(idx.begin(), idx.begin() + n_test);
    ds.meta.train_indices.assign(idx.begin() + n_test, idx.end());
    std::sort(ds.meta.test_indices.begin(), ds.meta.test_indices.end());
    std::sort(ds.meta.train_indices.begin(), ds.meta.train_indices.end());

    auto subset = [&](const std::vector<int>& which) {
        std::vector<Point> pts;
        pts.reserve(which.size());
        for (int i : which) pts.push_back(all[i]);
        return SiteSet(std::move(pts));
    };
    ds.train_sites = subset(ds.meta.train_indices);
    ds.test_sites = subset(ds.meta.test_indices);

    auto rows = [&](const std::vector<int>& which) {
        ReplicateMatrix m;
        m.scale = Scale::UniformU;
        m.values.resize(static_cast<int>(which.size()), opt.T);
        for (std::size_t r = 0; r < which.size(); ++r)
            m.values.row(static_cast<int>(r)) = sim.u.values.row(which[r]);
        return m;
    };
    ds.u_train = rows(ds.meta.train_indices);
    ds.u_test = rows(ds.meta.test_indices);

    ds.meta.n = opt.n;
    ds.meta.T = opt.T;
    ds.meta.alpha = opt.alpha;
    ds.meta.rho = opt.rho;
    ds.meta.nu = opt.nu;
    ds.meta.holdout_fraction = opt.holdout_fraction;
    ds.meta.seed = opt.seed;
    return ds;
}

void cmd_simulate(const std::string& config_path, const std::string& out_dir) {
    auto cfg = parse_config_file(config_path);
    SimulateOptions opt;
    opt.n = static_cast<int>(get_num(cfg, "n", opt.n));
    opt.T = static_cast<int>(get_num(cfg, "T", opt.T));
    opt.alpha = get_num(cfg, "alpha", opt.alpha);
    opt.rho = get_num(cfg, "rho", opt.rho);
    opt.nu = get_num(cfg, "nu", opt.nu);
    opt.holdout_fraction =
        get_num(cfg, "holdout_fraction", opt.holdout_fraction);
    opt.seed = static_cast<std::uint64_t>(get_num(cfg, "seed", 1));
    write_dataset(simulate_dataset(opt), out_dir);
}

void cmd_fit(const std::string& dataset_dir, const FitOptions& opt,
             const std::string& out_dir) {
    Dataset ds = read_dataset(dataset_dir);
    const long clamped = clamp_uniforms(ds.u_train.values);
    if (clamped > 0)
        std::cerr << "warning: clamped " << clamped
                  << " uniform values away from {0,1}\n";

    LikelihoodBackend backend = build_backend(opt.backend, ds.train_sites);
    PosteriorChain chain = run_mcmc(ds.u_train, backend, ds.train_sites,
                                    ds.meta.nu, opt.mcmc);
    ChainSummary summary = summarize(chain);

    fs::create_directories(out_dir);
    write_chain_csv(chain, out_dir + "/chain.csv");
    write_rdraws_csv(chain, out_dir + "/rdraws.csv");
    write_summary_json(summary, out_dir + "/summary.json");
    json meta{{"backend", opt.backend.label()},
              {"backend_display", opt.backend.display()},
              {"m", opt.backend.m},
              {"sparsity", opt.backend.sparsity},
              {"psi", opt.backend.psi},
              {"k", opt.backend.k},
              {"tau2", opt.backend.tau2},
              {"kind", static_cast<int>(opt.backend.kind)},
              {"nu", ds.meta.nu},
              {"iters", opt.mcmc.n_iter},
              {"burn_in", opt.mcmc.burn_in},
              {"store_r_every", opt.mcmc.store_r_every},
              {"seed", opt.mcmc.seed},
              {"walltime_sec", chain.walltime_sec}};
    std::ofstream f(out_dir + "/fit_meta.json");
    f << meta.dump(2) << "\n";
}

namespace {

struct FitMeta {
    BackendSettings backend;
    double nu = 0.5;
    double burn_in = 0.5;
};

FitMeta read_fit_meta(const std::string& fit_dir) {
    std::ifstream f(fit_dir + "/fit_meta.json");
    if (!f) throw DataError("cannot open " + fit_dir + "/fit_meta.json");
    json j;
    f >> j;
    FitMeta m;
    m.backend.kind =
        static_cast<BackendSettings::Kind>(j.at("kind").get<int>());
    m.backend.m = j.at("m");
    m.backend.sparsity = j.at("sparsity");
    m.backend.psi = j.at("psi");
    m.backend.k = j.at("k");
    m.backend.tau2 = j.at("tau2");
    m.nu = j.at("nu");
    m.burn_in = j.at("burn_in");
    return m;
}

}  // namespace

void cmd_predict(const std::string& dataset_dir, const std::string& fit_dir,
                 const PredictConfig& cfg) {
    Dataset ds = read_dataset(dataset_dir);
    clamp_uniforms(ds.u_train.values);
    FitMeta meta = read_fit_meta(fit_dir);
    PosteriorChain chain = read_chain(fit_dir + "/chain.csv",
                                      fit_dir + "/rdraws.csv", meta.burn_in);
    LikelihoodBackend backend = build_backend(meta.backend, ds.train_sites);
    PredictiveSamples pred = conditional_simulate(
        ds.u_train, ds.train_sites, ds.test_sites, chain, backend, meta.nu, cfg);
    write_predictive_csv(pred, fit_dir + "/predictive.csv");
}

ScoreReport cmd_score(const std::string& dataset_dir,
                      const std::string& fit_dir) {
    Dataset ds = read_dataset(dataset_dir);
    ChainSummary summary = read_summary_json(fit_dir + "/summary.json");
    PredictiveSamples pred = read_predictive_csv(fit_dir + "/predictive.csv");

    constexpr double alpha_star = 0.05;
    const bool alpha_cov = ds.meta.alpha >= summary.alpha.ci_low &&
                           ds.meta.alpha <= summary.alpha.ci_high;
    const bool rho_cov = ds.meta.rho >= summary.rho.ci_low &&
                         ds.meta.rho <= summary.rho.ci_high;
    const double is_alpha = interval_score(
        summary.alpha.ci_low, summary.alpha.ci_high, ds.meta.alpha, alpha_star);
    const double is_rho = interval_score(summary.rho.ci_low, summary.rho.ci_high,
                                         ds.meta.rho, alpha_star);

    // twCRPS cutoffs from the training data
    std::vector<double> train(ds.u_train.values.data(),
                              ds.u_train.values.data() + ds.u_train.values.size());
    const double a_cut = quantile_type7(train, 0.5);
    double mean = 0.0;
    for (double v : train) mean += v;
    mean /= static_cast<double>(train.size());
    double ss = 0.0;
    for (double v : train) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(train.size() - 1));

    auto units = twcrps_inputs(pred, ds.u_test.values);
    double tw1 = 0.0, tw2 = 0.0, tw3 = 0.0;
    long degenerate = 0;
    for (const auto& unit : units) {
        auto r1 = twcrps(unit.samples, unit.truth,
                         TwcrpsWeight::lower_tail(a_cut));
        auto r2 = twcrps(unit.samples, unit.truth,
                         TwcrpsWeight::gaussian_cdf(mean, sd));
        const double a80 = quantile_type7(unit.samples, 0.8);
        auto r3 =
            twcrps(unit.samples, unit.truth, TwcrpsWeight::upper_tail(a80));
        tw1 += r1.score;
        tw2 += r2.score;
        tw3 += r3.score;
        degenerate += r1.degenerate_weight + r2.degenerate_weight +
                      r3.degenerate_weight;
    }
    const double nu_units = static_cast<double>(units.size());
    tw1 /= nu_units;
    tw2 /= nu_units;
    tw3 /= nu_units;
    if (degenerate > 0)
        std::cerr << "warning: " << degenerate
                  << " twCRPS weights fell outside the integration grid\n";

    json j{{"alpha",
            {{"covered", alpha_cov},
             {"interval_score", is_alpha},
             {"truth", ds.meta.alpha}}},
           {"rho",
            {{"covered", rho_cov},
             {"interval_score", is_rho},
             {"truth", ds.meta.rho}}},
           {"twcrps", {{"w1", tw1}, {"w2", tw2}, {"w3", tw3}}},
           {"cutoffs", {{"a", a_cut}, {"mu", mean}, {"sigma", sd}}},
           {"walltime_sec", summary.walltime_sec}};
    std::ofstream f(fit_dir + "/scores.json");
    f << j.dump(2) << "\n";

    ScoreReport rep;
    rep.coverage = alpha_cov ? 1.0 : 0.0;
    rep.mean_interval_score = 0.5 * alpha_star * is_alpha;
    rep.twcrps_1 = tw1;
    rep.twcrps_2 = tw2;
    rep.twcrps_3 = tw3;
    rep.walltime_sec = summary.walltime_sec;
    return rep;
}

void cmd_diagnose(const std::string& dataset_dir, const DiagnoseOptions& opt,
                  const std::string& out_dir) {
    Dataset ds = read_dataset(dataset_dir);
    clamp_uniforms(ds.u_train.values);
    fs::create_directories(out_dir);

    std::vector<double> grid;
    for (double u = 0.80; u < 0.991; u += 0.01) grid.push_back(u);
    grid.push_back(0.995);
    ChiEstimate chi = empirical_chi(ds.u_train, ds.train_sites, opt.lag_h,
                                    opt.lag_tol, grid, opt.n_boot, opt.seed);
    {
        std::ofstream f(out_dir + "/chi_curves.csv");
        f.precision(10);
        f << "u,chi,lo,hi\n";
        for (std::size_t g = 0; g < grid.size(); ++g)
            f << chi.u_grid[g] << "," << chi.chi_hat[g] << "," << chi.ci_low[g]
              << "," << chi.ci_high[g] << "\n";
    }

    std::vector<int> all(ds.train_sites.n());
    for (int i = 0; i < ds.train_sites.n(); ++i) all[i] = i;
    MaxStabTestResult ms =
        max_stability_test(ds.u_train, all, opt.n_boot, opt.seed);
    {
        json j{{"ad_statistic", ms.ad_statistic},
               {"p_value", ms.p_value},
               {"n_bootstrap", ms.n_bootstrap},
               {"gumbel_location_hat", ms.gumbel_location_hat},
               {"clamped", ms.clamped}};
        std::ofstream f(out_dir + "/maxstab.json");
        f << j.dump(2) << "\n";
    }

    if (opt.fit_gev) {
        // unit-Frechet view of the uniforms gives a known-truth GEV check
        std::ofstream f(out_dir + "/gev_fits.csv");
        f.precision(10);
        f << "site_id,mu,sigma,xi,ad_p\n";
        for (int i = 0; i < ds.train_sites.n(); ++i) {
            std::vector<double> x(ds.u_train.T());
            for (int t = 0; t < ds.u_train.T(); ++t)
                x[t] = -1.0 / std::log(ds.u_train.values(i, t));
            GevParams p;
            try {
                p = gev_fit_mle(x);
            } catch (const EstimationError& e) {
                p = e.best();
            }
            std::vector<double> pit(x.size());
            for (std::size_t t = 0; t < x.size(); ++t)
                pit[t] = gev_cdf(x[t], p);
            const GofResult gof = anderson_darling_gof(pit);
            f << i << "," << p.mu << "," << p.sigma << "," << p.xi << ","
              << gof.p_value << "\n";
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

struct StudyCell {
    SimulateOptions scenario;
    int scenario_id = 0;
    int rep = 0;
    BackendSettings backend;
    std::string dir;
};

struct CellScores {
    bool ok = false;
    bool alpha_cov = false, rho_cov = false;
    double is_alpha = 0.0, is_rho = 0.0;
    double tw1 = 0.0, tw2 = 0.0, tw3 = 0.0;
    double walltime_sec = 0.0;
};

CellScores read_cell_scores(const std::string& dir) {
    CellScores c;
    std::ifstream f(dir + "/scores.json");
    if (!f) return c;
    try {
        json j;
        f >> j;
        c.alpha_cov = j.at("alpha").at("covered");
        c.rho_cov = j.at("rho").at("covered");
        c.is_alpha = j.at("alpha").at("interval_score");
        c.is_rho = j.at("rho").at("interval_score");
        c.tw1 = j.at("twcrps").at("w1");
        c.tw2 = j.at("twcrps").at("w2");
        c.tw3 = j.at("twcrps").at("w3");
        c.walltime_sec = j.at("walltime_sec");
        c.ok = true;
    } catch (const std::exception&) {
        c.ok = false;
    }
    return c;
}

}  // namespace

StudyResult cmd_study(const std::string& config_path,
                      const std::string& out_dir, bool resume) {
    auto cfg = parse_config_file(config_path);

    SimulateOptions base;
    base.n = static_cast<int>(get_num(cfg, "n", 60));
    base.T = static_cast<int>(get_num(cfg, "T", 30));
    base.nu = get_num(cfg, "nu", 0.5);
    base.holdout_fraction = get_num(cfg, "holdout_fraction", 0.25);
    const std::uint64_t seed0 =
        static_cast<std::uint64_t>(get_num(cfg, "seed", 1));

    std::vector<double> alphas, rhos;
    for (const auto& tok : split(cfg.count("alpha") ? cfg.at("alpha") : "0.3", ','))
        alphas.push_back(std::stod(tok));
    for (const auto& tok : split(cfg.count("rho") ? cfg.at("rho") : "0.05", ','))
        rhos.push_back(std::stod(tok));
    const int n_reps = static_cast<int>(get_num(cfg, "repetitions", 10));

    std::vector<BackendSettings> backends;
    for (const auto& tok :
         split(cfg.count("backends") ? cfg.at("backends") : "full", ','))
        backends.push_back(BackendSettings::parse(tok));
    if (backends.empty() || alphas.empty() || rhos.empty() || n_reps < 1)
        throw std::invalid_argument("study: empty grid");

    McmcConfig mcmc;
    mcmc.n_iter = static_cast<long>(get_num(cfg, "iters", 2000));
    mcmc.burn_in = get_num(cfg, "burn_in", 0.5);
    mcmc.adapt_every = static_cast<int>(get_num(cfg, "adapt_every", 200));
    mcmc.store_r_every = static_cast<int>(get_num(cfg, "store_r_every", 50));
    if (mcmc.n_iter < 1) throw std::invalid_argument("study: iters >= 1");

    PredictConfig pcfg;
    pcfg.n_retain = static_cast<int>(get_num(cfg, "n_retain", 200));
    pcfg.draws_per_sample = static_cast<int>(get_num(cfg, "draws_per_sample", 1));

    const int jobs = std::max(1, static_cast<int>(get_num(cfg, "jobs", 1)));

    // scenario grid = alpha x rho
    std::vector<SimulateOptions> scenarios;
    for (double rho : rhos)
        for (double alpha : alphas) {
            SimulateOptions s = base;
            s.alpha = alpha;
            s.rho = rho;
            scenarios.push_back(s);
        }

    std::vector<StudyCell> cells;
    for (std::size_t si = 0; si < scenarios.size(); ++si)
        for (int rep = 0; rep < n_reps; ++rep)
            for (const auto& bk : backends) {
                StudyCell c;
                c.scenario = scenarios[si];
                c.scenario.seed = Rng::derive(
                    seed0, {static_cast<std::uint64_t>(si),
                            static_cast<std::uint64_t>(rep)});
                c.scenario_id = static_cast<int>(si);
                c.rep = rep;
                c.backend = bk;
                c.dir = out_dir + "/cells/s" + std::to_string(si) + "_rep" +
                        std::to_string(rep) + "_" + bk.label();
                cells.push_back(c);
            }

    StudyResult result;
    result.cells_total = static_cast<int>(cells.size());
    std::atomic<int> next{0};
    std::atomic<int> ran{0}, skipped{0}, failed{0};

#ifdef _OPENMP
    if (jobs > 1) omp_set_num_threads(1);
#endif

    auto worker = [&]() {
        while (true) {
            const int idx = next.fetch_add(1);
            if (idx >= static_cast<int>(cells.size())) return;
            const StudyCell& cell = cells[idx];
            if (resume && read_cell_scores(cell.dir).ok) {
                ++skipped;
                continue;
            }
            try {
                fs::create_directories(cell.dir);
                const std::string data_dir = cell.dir + "/data";
                write_dataset(simulate_dataset(cell.scenario), data_dir);
                FitOptions fopt;
                fopt.backend = cell.backend;
                fopt.mcmc = mcmc;
                fopt.mcmc.seed = Rng::derive(
                    cell.scenario.seed,
                    {0xf17u, static_cast<std::uint64_t>(cell.rep)});
                cmd_fit(data_dir, fopt, cell.dir);
                PredictConfig pc = pcfg;
                pc.vecchia_m = cell.backend.m;
                pc.seed = Rng::derive(cell.scenario.seed, {0x9dcu});
                cmd_predict(data_dir, cell.dir, pc);
                cmd_score(data_dir, cell.dir);
                ++ran;
            } catch (const std::exception& e) {
                std::ofstream err(cell.dir + "/error.txt");
                err << e.what() << "\n";
                ++failed;
            }
        }
    };

    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    result.cells_run = ran;
    result.cells_skipped = skipped;
    result.cells_failed = failed;

    // aggregate from the per-cell score files
    std::ostringstream table;
    constexpr double alpha_star = 0.05;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const auto& sc = scenarios[si];
        table << "Scenario " << si << ": n=" << sc.n << " T=" << sc.T
              << " nu=" << sc.nu << " rho=" << sc.rho << " alpha=" << sc.alpha
              << " reps=" << n_reps << "\n";
        table << "  " << std::left << std::setw(22) << "Method"
              << std::right << std::setw(8) << "Cov a" << std::setw(8)
              << "Cov rho" << std::setw(11) << "IS a" << std::setw(11)
              << "IS rho" << std::setw(10) << "twCRPS1" << std::setw(10)
              << "twCRPS2" << std::setw(10) << "twCRPS3" << std::setw(10)
              << "Wall(min)" << "\n";
        for (const auto& bk : backends) {
            int n_ok = 0;
            double cov_a = 0, cov_r = 0, is_a = 0, is_r = 0, t1 = 0, t2 = 0,
                   t3 = 0, wt = 0;
            for (const auto& cell : cells) {
                if (cell.scenario_id != static_cast<int>(si) ||
                    cell.backend.label() != bk.label())
                    continue;
                CellScores cs = read_cell_scores(cell.dir);
                if (!cs.ok) continue;
                ++n_ok;
                cov_a += cs.alpha_cov;
                cov_r += cs.rho_cov;
                is_a += cs.is_alpha;
                is_r += cs.is_rho;
                t1 += cs.tw1;
                t2 += cs.tw2;
                t3 += cs.tw3;
                wt += cs.walltime_sec;
            }
            table << "  " << std::left << std::setw(22) << bk.display()
                  << std::right;
            if (n_ok == 0) {
                table << std::setw(8) << "--" << std::setw(8) << "--"
                      << std::setw(11) << "--" << std::setw(11) << "--"
                      << std::setw(10) << "--" << std::setw(10) << "--"
                      << std::setw(10) << "--" << std::setw(10) << "--"
                      << "   (0/" << n_reps << " reps)\n";
                continue;
            }
            const double d = n_ok;
            table << std::setw(8) << fmt(cov_a / d, 2) << std::setw(8)
                  << fmt(cov_r / d, 2) << std::setw(11)
                  << fmt(0.5 * alpha_star * is_a / d, 4) << std::setw(11)
                  << fmt(0.5 * alpha_star * is_r / d, 4) << std::setw(10)
                  << fmt(t1 / d, 4) << std::setw(10) << fmt(t2 / d, 4)
                  << std::setw(10) << fmt(t3 / d, 4) << std::setw(10)
                  << fmt(wt / d / 60.0, 2);
            if (n_ok < n_reps) table << "   (" << n_ok << "/" << n_reps << ")";
            table << "\n";
        }
        table << "\n";
    }
    result.table_text = table.str();

    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/results.txt");
        f << result.table_text;
    }
    {
        std::ofstream f(out_dir + "/results.csv");
        f << "scenario,alpha,rho,nu,backend,n_ok,cov_alpha,cov_rho,is_alpha,"
             "is_rho,twcrps1,twcrps2,twcrps3,walltime_min\n";
        for (std::size_t si = 0; si < scenarios.size(); ++si)
            for (const auto& bk : backends) {
                int n_ok = 0;
                double cov_a = 0, cov_r = 0, is_a = 0, is_r = 0, t1 = 0, t2 = 0,
                       t3 = 0, wt = 0;
                for (const auto& cell : cells) {
                    if (cell.scenario_id != static_cast<int>(si) ||
                        cell.backend.label() != bk.label())
                        continue;
                    CellScores cs = read_cell_scores(cell.dir);
                    if (!cs.ok) continue;
                    ++n_ok;
                    cov_a += cs.alpha_cov;
                    cov_r += cs.rho_cov;
                    is_a += cs.is_alpha;
                    is_r += cs.is_rho;
                    t1 += cs.tw1;
                    t2 += cs.tw2;
                    t3 += cs.tw3;
                    wt += cs.walltime_sec;
                }
                const double d = std::max(1, n_ok);
                f << si << "," << scenarios[si].alpha << ","
                  << scenarios[si].rho << "," << scenarios[si].nu << ","
                  << bk.label() << "," << n_ok << "," << cov_a / d << ","
                  << cov_r / d << "," << 0.5 * alpha_star * is_a / d << ","
                  << 0.5 * alpha_star * is_r / d << "," << t1 / d << ","
                  << t2 / d << "," << t3 / d << "," << wt / d / 60.0 << "\n";
            }
    }
    return result;
}

}  // namespace lrsm
