#include "lrsm/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lrsm/errors.hpp"

namespace lrsm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw DataError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

void save_json(const json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
    fs::create_directories(dir);
    write_sites_csv(ds.train_sites, dir + "/sites.csv");
    write_sites_csv(ds.test_sites, dir + "/test_sites.csv");
    write_replicates_csv(ds.u_train, dir + "/u_train.csv");
    write_replicates_csv(ds.u_test, dir + "/u_test.csv");
    json j{{"n", ds.meta.n},
           {"T", ds.meta.T},
           {"alpha", ds.meta.alpha},
           {"rho", ds.meta.rho},
           {"nu", ds.meta.nu},
           {"holdout_fraction", ds.meta.holdout_fraction},
           {"seed", ds.meta.seed},
           {"scale", "uniform"},
           {"train_indices", ds.meta.train_indices},
           {"test_indices", ds.meta.test_indices}};
    save_json(j, dir + "/meta.json");
}

Dataset read_dataset(const std::string& dir) {
    Dataset ds;
    ds.train_sites = read_sites_csv(dir + "/sites.csv");
    ds.test_sites = read_sites_csv(dir + "/test_sites.csv");
    ds.u_train = read_replicates_csv(dir + "/u_train.csv", Scale::UniformU);
    ds.u_test = read_replicates_csv(dir + "/u_test.csv", Scale::UniformU);
    json j = load_json(dir + "/meta.json");
    ds.meta.n = j.at("n");
    ds.meta.T = j.at("T");
    ds.meta.alpha = j.at("alpha");
    ds.meta.rho = j.at("rho");
    ds.meta.nu = j.at("nu");
    ds.meta.holdout_fraction = j.at("holdout_fraction");
    ds.meta.seed = j.at("seed");
    ds.meta.train_indices = j.at("train_indices").get<std::vector<int>>();
    ds.meta.test_indices = j.at("test_indices").get<std::vector<int>>();
    if (ds.u_train.n() != ds.train_sites.n() ||
        ds.u_test.n() != ds.test_sites.n() ||
        ds.u_train.T() != ds.u_test.T())
        throw DataError("inconsistent dataset in " + dir);
    return ds;
}

void write_chain_csv(const PosteriorChain& chain, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.precision(17);
    f << "iter,alpha,rho\n";
    for (std::size_t i = 0; i < chain.alpha_draws.size(); ++i)
        f << i << "," << chain.alpha_draws[i] << "," << chain.rho_draws[i]
          << "\n";
}

void write_rdraws_csv(const PosteriorChain& chain, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.precision(17);
    f << "iter,t,value\n";
    for (long row = 0; row < chain.r_draws.rows(); ++row)
        for (long t = 0; t < chain.r_draws.cols(); ++t)
            f << chain.r_store_iters[row] << "," << t << ","
              << chain.r_draws(row, t) << "\n";
}

PosteriorChain read_chain(const std::string& chain_csv,
                          const std::string& rdraws_csv, double burn_in) {
    PosteriorChain chain;
    chain.burn_in = burn_in;
    {
        std::ifstream f(chain_csv);
        if (!f) throw DataError("cannot open: " + chain_csv);
        std::string line;
        if (!std::getline(f, line) || line.rfind("iter,alpha,rho", 0) != 0)
            throw DataError("bad chain header in " + chain_csv);
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            std::getline(ss, tok, ',');
            chain.alpha_draws.push_back(std::stod(tok));
            std::getline(ss, tok, ',');
            chain.rho_draws.push_back(std::stod(tok));
        }
    }
    {
        std::ifstream f(rdraws_csv);
        if (!f) throw DataError("cannot open: " + rdraws_csv);
        std::string line;
        if (!std::getline(f, line) || line.rfind("iter,t,value", 0) != 0)
            throw DataError("bad rdraws header in " + rdraws_csv);
        std::vector<std::tuple<long, int, double>> rows;
        long max_t = -1;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string tok;
            std::getline(ss, tok, ',');
            const long iter = std::stol(tok);
            std::getline(ss, tok, ',');
            const int t = std::stoi(tok);
            std::getline(ss, tok, ',');
            rows.emplace_back(iter, t, std::stod(tok));
            max_t = std::max<long>(max_t, t);
        }
        for (auto& [iter, t, v] : rows) {
            if (chain.r_store_iters.empty() ||
                chain.r_store_iters.back() != iter)
                chain.r_store_iters.push_back(iter);
            (void)t;
            (void)v;
        }
        chain.r_draws.resize(static_cast<long>(chain.r_store_iters.size()),
                             max_t + 1);
        std::size_t row = 0;
        for (auto& [iter, t, v] : rows) {
            while (chain.r_store_iters[row] != iter) ++row;
            chain.r_draws(static_cast<long>(row), t) = v;
        }
    }
    return chain;
}

void write_summary_json(const ChainSummary& summary, const std::string& path) {
    auto param = [](const ParamSummary& p) {
        return json{{"mean", p.mean},
                    {"median", p.median},
                    {"ci_low", p.ci_low},
                    {"ci_high", p.ci_high},
                    {"bm_se", p.bm_se}};
    };
    json j{{"alpha", param(summary.alpha)},
           {"rho", param(summary.rho)},
           {"accept_rates",
            {{"alpha", summary.accept_alpha},
             {"rho", summary.accept_rho},
             {"r_mean", summary.accept_r_mean}}},
           {"walltime_sec", summary.walltime_sec},
           {"n_draws_used", summary.n_draws_used}};
    save_json(j, path);
}

ChainSummary read_summary_json(const std::string& path) {
    json j = load_json(path);
    auto param = [&](const char* key) {
        ParamSummary p;
        p.mean = j.at(key).at("mean");
        p.median = j.at(key).at("median");
        p.ci_low = j.at(key).at("ci_low");
        p.ci_high = j.at(key).at("ci_high");
        p.bm_se = j.at(key).at("bm_se");
        return p;
    };
    ChainSummary s;
    s.alpha = param("alpha");
    s.rho = param("rho");
    s.accept_alpha = j.at("accept_rates").at("alpha");
    s.accept_rho = j.at("accept_rates").at("rho");
    s.accept_r_mean = j.at("accept_rates").at("r_mean");
    s.walltime_sec = j.at("walltime_sec");
    s.n_draws_used = j.at("n_draws_used");
    return s;
}

void write_predictive_csv(const PredictiveSamples& pred,
                          const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.precision(17);
    f << "site_id,t,draw,value\n";
    for (int d = 0; d < pred.n_draws(); ++d)
        for (int t = 0; t < pred.T(); ++t)
            for (int i = 0; i < pred.n_targets(); ++i)
                f << i << "," << t << "," << d << "," << pred.draws[d](i, t)
                  << "\n";
}

PredictiveSamples read_predictive_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("site_id,t,draw,value", 0) != 0)
        throw DataError("bad predictive header in " + path);
    std::vector<std::tuple<int, int, int, double>> rows;
    int max_i = -1, max_t = -1, max_d = -1;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        const int i = std::stoi(tok);
        std::getline(ss, tok, ',');
        const int t = std::stoi(tok);
        std::getline(ss, tok, ',');
        const int d = std::stoi(tok);
        std::getline(ss, tok, ',');
        rows.emplace_back(i, t, d, std::stod(tok));
        max_i = std::max(max_i, i);
        max_t = std::max(max_t, t);
        max_d = std::max(max_d, d);
    }
    if (rows.empty()) throw DataError("empty predictive file: " + path);
    PredictiveSamples pred;
    pred.draws.assign(max_d + 1, Eigen::MatrixXd::Zero(max_i + 1, max_t + 1));
    for (auto& [i, t, d, v] : rows) pred.draws[d](i, t) = v;
    return pred;
}

}  // namespace lrsm
