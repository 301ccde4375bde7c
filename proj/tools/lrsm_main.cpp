// Command line front end: simulate | fit | predict | score | diagnose | study
// Exit codes: 0 success, 2 usage, 3 data, 4 numerical.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lrsm/errors.hpp"
#include "lrsm/harness.hpp"

namespace {

int dispatch(int argc, char** argv) {
    CLI::App app{"Levy random scale mixture toolkit for spatial extremes"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand(
        "simulate", "Draw a dataset and write it with a train/test split");
    std::string sim_config, sim_out;
    sim->add_option("--config", sim_config, "key = value scenario file")
        ->required()
        ->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "output dataset directory")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Run MCMC on a simulated dataset");
    std::string fit_data, fit_out, fit_backend = "full";
    lrsm::McmcConfig mcmc;  // library defaults: 50k iterations, 0.5 burn-in
    fit->add_option("--data", fit_data, "dataset directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    fit->add_option("--out", fit_out, "fit output directory")->required();
    fit->add_option("--backend", fit_backend,
                    "full | vecchia | taper | lowrank");
    int fit_m = 10, fit_k = 100;
    double fit_sparsity = 0.9, fit_psi = -1.0, fit_tau2 = 1e-6;
    fit->add_option("--m", fit_m, "Vecchia conditioning size");
    fit->add_option("--sparsity", fit_sparsity, "taper target sparsity");
    fit->add_option("--psi", fit_psi, "explicit taper range");
    fit->add_option("--k", fit_k, "low-rank basis size");
    fit->add_option("--tau2", fit_tau2, "low-rank nugget");
    fit->add_option("--iters", mcmc.n_iter, "MCMC iterations")
        ->check(CLI::PositiveNumber);
    fit->add_option("--burnin", mcmc.burn_in, "burn-in fraction");
    fit->add_option("--adapt-every", mcmc.adapt_every, "LAP batch length");
    fit->add_option("--store-r-every", mcmc.store_r_every,
                    "latent scale thinning");
    fit->add_option("--seed", mcmc.seed, "MCMC seed");

    // predict
    auto* pred = app.add_subcommand(
        "predict", "Posterior-predictive draws at held-out sites");
    std::string pred_data, pred_fit;
    lrsm::PredictConfig pcfg;
    pred->add_option("--data", pred_data)->required()
        ->check(CLI::ExistingDirectory);
    pred->add_option("--fit", pred_fit)->required()
        ->check(CLI::ExistingDirectory);
    pred->add_option("--retain", pcfg.n_retain, "posterior draws retained");
    pred->add_option("--draws-per-sample", pcfg.draws_per_sample);
    pred->add_option("--vecchia-m", pcfg.vecchia_m,
                     "conditioning size for Vecchia prediction");
    pred->add_option("--seed", pcfg.seed);

    // score
    auto* sc = app.add_subcommand(
        "score", "Coverage, interval scores and twCRPS for a finished fit");
    std::string sc_data, sc_fit;
    sc->add_option("--data", sc_data)->required()
        ->check(CLI::ExistingDirectory);
    sc->add_option("--fit", sc_fit)->required()
        ->check(CLI::ExistingDirectory);

    // diagnose
    auto* diag = app.add_subcommand(
        "diagnose", "Empirical chi curves, max-stability test, GEV fits");
    std::string diag_data, diag_out;
    lrsm::DiagnoseOptions dopt;
    diag->add_option("--data", diag_data)->required()
        ->check(CLI::ExistingDirectory);
    diag->add_option("--out", diag_out)->required();
    diag->add_option("--lag", dopt.lag_h, "spatial lag for chi");
    diag->add_option("--tol", dopt.lag_tol, "lag window half-width");
    diag->add_option("--boot", dopt.n_boot, "bootstrap iterations");
    diag->add_option("--seed", dopt.seed);
    diag->add_flag("--no-gev", [&dopt](std::int64_t) { dopt.fit_gev = false; },
                   "skip per-site GEV fits");

    // study
    auto* study = app.add_subcommand(
        "study", "Scenario grid: simulate, fit, predict, score, aggregate");
    std::string study_config, study_out;
    bool resume = false;
    study->add_option("--config", study_config)->required()
        ->check(CLI::ExistingFile);
    study->add_option("--out", study_out)->required();
    study->add_flag("--resume", resume, "skip cells with finished scores");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    if (sim->parsed()) {
        lrsm::cmd_simulate(sim_config, sim_out);
        std::cout << "dataset written to " << sim_out << "\n";
    } else if (fit->parsed()) {
        lrsm::FitOptions opt;
        opt.backend = lrsm::BackendSettings::parse(fit_backend);
        opt.backend.m = fit_m;
        opt.backend.sparsity = fit_sparsity;
        opt.backend.psi = fit_psi;
        opt.backend.k = fit_k;
        opt.backend.tau2 = fit_tau2;
        opt.mcmc = mcmc;
        lrsm::cmd_fit(fit_data, opt, fit_out);
        std::cout << "fit written to " << fit_out << "\n";
    } else if (pred->parsed()) {
        lrsm::cmd_predict(pred_data, pred_fit, pcfg);
        std::cout << "predictive draws written to " << pred_fit
                  << "/predictive.csv\n";
    } else if (sc->parsed()) {
        lrsm::ScoreReport rep = lrsm::cmd_score(sc_data, sc_fit);
        std::cout << "scores written to " << sc_fit << "/scores.json"
                  << " (twCRPS " << rep.twcrps_1 << " " << rep.twcrps_2 << " "
                  << rep.twcrps_3 << ")\n";
    } else if (diag->parsed()) {
        lrsm::cmd_diagnose(diag_data, dopt, diag_out);
        std::cout << "diagnostics written to " << diag_out << "\n";
    } else if (study->parsed()) {
        lrsm::StudyResult r = lrsm::cmd_study(study_config, study_out, resume);
        std::cout << r.table_text;
        std::cout << "cells: " << r.cells_run << " run, " << r.cells_skipped
                  << " skipped, " << r.cells_failed << " failed (of "
                  << r.cells_total << ")\n";
        if (r.cells_failed > 0) return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const lrsm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const lrsm::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
