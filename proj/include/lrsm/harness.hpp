#pragma once

#include <map>
#include <string>
#include <vector>

#include "lrsm/inference.hpp"
#include "lrsm/io.hpp"
#include "lrsm/likelihood.hpp"
#include "lrsm/prediction.hpp"
#include "lrsm/scoring.hpp"

namespace lrsm {

// "full" | "vecchia:m=10" | "taper:sparsity=0.9" | "taper:psi=0.3" |
// "lowrank:k=20" (optionally ",tau2=1e-6")
struct BackendSettings {
    enum Kind { Full, Vecchia, Taper, LowRank } kind = Full;
    int m = 10;
    double sparsity = 0.9;
    double psi = -1.0;  // explicit taper range overrides sparsity
    int k = 100;
    double tau2 = 1e-6;

    static BackendSettings parse(const std::string& text);
    std::string label() const;    // filesystem-safe
    std::string display() const;  // table row name
};

LikelihoodBackend build_backend(const BackendSettings& settings,
                                const SiteSet& train_sites);

// line-oriented `key = value` config text; '#' starts a comment
std::map<std::string, std::string> parse_config_file(const std::string& path);

struct SimulateOptions {
    int n = 100;
    int T = 50;
    double alpha = 0.3;
    double rho = 0.05;
    double nu = 0.5;
    double holdout_fraction = 0.25;
    std::uint64_t seed = 1;
};

Dataset simulate_dataset(const SimulateOptions& opt);
void cmd_simulate(const std::string& config_path, const std::string& out_dir);

struct FitOptions {
    BackendSettings backend;
    McmcConfig mcmc;
};

void cmd_fit(const std::string& dataset_dir, const FitOptions& opt,
             const std::string& out_dir);

void cmd_predict(const std::string& dataset_dir, const std::string& fit_dir,
                 const PredictConfig& cfg);

ScoreReport cmd_score(const std::string& dataset_dir,
                      const std::string& fit_dir);

struct DiagnoseOptions {
    double lag_h = 0.177;
    double lag_tol = 0.02;
    int n_boot = 200;
    std::uint64_t seed = 1;
    bool fit_gev = true;
};

void cmd_diagnose(const std::string& dataset_dir, const DiagnoseOptions& opt,
                  const std::string& out_dir);

struct StudyResult {
    int cells_total = 0;
    int cells_run = 0;
    int cells_skipped = 0;
    int cells_failed = 0;
    std::string table_text;
};

StudyResult cmd_study(const std::string& config_path,
                      const std::string& out_dir, bool resume);

}  // namespace lrsm
