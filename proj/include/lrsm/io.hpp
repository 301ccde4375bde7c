#pragma once

#include <string>
#include <vector>

#include "lrsm/fields.hpp"
#include "lrsm/inference.hpp"
#include "lrsm/prediction.hpp"
#include "lrsm/sites.hpp"

namespace lrsm {

// Scenario / dataset metadata; also the truth record for scoring.
struct DatasetMeta {
    int n = 0;           // total sites before the split
    int T = 0;
    double alpha = 0.3;
    double rho = 0.05;
    double nu = 0.5;
    double holdout_fraction = 0.25;
    std::uint64_t seed = 1;
    std::vector<int> train_indices;
    std::vector<int> test_indices;
};

struct Dataset {
    SiteSet train_sites;
    SiteSet test_sites;
    ReplicateMatrix u_train;
    ReplicateMatrix u_test;
    DatasetMeta meta;
};

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

void write_chain_csv(const PosteriorChain& chain, const std::string& path);
void write_rdraws_csv(const PosteriorChain& chain, const std::string& path);
// Rebuilds the chain pieces needed for prediction from fit outputs.
PosteriorChain read_chain(const std::string& chain_csv,
                          const std::string& rdraws_csv, double burn_in);

void write_summary_json(const ChainSummary& summary, const std::string& path);
ChainSummary read_summary_json(const std::string& path);

void write_predictive_csv(const PredictiveSamples& pred,
                          const std::string& path);
PredictiveSamples read_predictive_csv(const std::string& path);

}  // namespace lrsm
