#include "lrsm/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "lrsm/errors.hpp"
#include "lrsm/marginal.hpp"
#include "lrsm/rng.hpp"
#include "lrsm/special.hpp"

namespace lrsm {

LevyDraws sample_levy(int T, std::uint64_t seed) {
    if (T < 1) throw std::invalid_argument("sample_levy: T >= 1");
    LevyDraws out;
    out.r.resize(T);
    Rng rng(Rng::derive(seed, {0x1e71u}));
    for (int t = 0; t < T; ++t) out.r[t] = levy_quantile(rng.uniform());
    return out;
}

ReplicateMatrix sample_gp(const SiteSet& s, const MaternParams& p, int T,
                          std::uint64_t seed) {
    if (T < 1) throw std::invalid_argument("sample_gp: T >= 1");
    const int n = s.n();
    Eigen::MatrixXd c = covariance_matrix(s, p);
    Eigen::MatrixXd L = checked_llt(c, "sample_gp").matrixL();

    ReplicateMatrix out;
    out.scale = Scale::GaussianZ;
    out.values.resize(n, T);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; ++t) {
        Rng col(Rng::derive(seed, {0x69u, static_cast<std::uint64_t>(t)}));
        Eigen::VectorXd e(n);
        for (int i = 0; i < n; ++i) e(i) = col.normal();
        out.values.col(t) = L * e;
    }
    return out;
}

namespace ref {
Eigen::MatrixXd lrsm_uniforms(const Eigen::MatrixXd& z,
                              const std::vector<double>& levy_r, double alpha) {
    Eigen::MatrixXd u(z.rows(), z.cols());
    MarginalBulk marg(alpha);
    for (int t = 0; t < z.cols(); ++t) {
        const double ra = std::pow(levy_r[t], alpha);
        for (int i = 0; i < z.rows(); ++i)
            u(i, t) = alpha == 0.0 ? norm_cdf(z(i, t))
                                   : marg.cdf(ra * pareto_g(z(i, t)));
    }
    return u;
}
}  // namespace ref

LrsmSimulation simulate_lrsm(const SiteSet& s, const MaternParams& p,
                             double alpha, int T, std::uint64_t seed) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("simulate_lrsm: alpha >= 0");
    LrsmSimulation sim;
    sim.z = sample_gp(s, p, T, Rng::derive(seed, {1}));
    sim.r = sample_levy(T, Rng::derive(seed, {2}));
    sim.u.scale = Scale::UniformU;
    sim.u.values.resize(s.n(), T);
    MarginalBulk marg(alpha);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; ++t) {
        const double ra = std::pow(sim.r.r[t], alpha);
        for (int i = 0; i < s.n(); ++i)
            sim.u.values(i, t) = alpha == 0.0
                                     ? norm_cdf(sim.z.values(i, t))
                                     : marg.cdf(ra * pareto_g(sim.z.values(i, t)));
    }
    return sim;
}

void write_replicates_csv(const ReplicateMatrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.precision(17);
    f << "site_id,t,value\n";
    for (int t = 0; t < m.T(); ++t)
        for (int i = 0; i < m.n(); ++i)
            f << i << "," << t << "," << m.values(i, t) << "\n";
}

ReplicateMatrix read_replicates_csv(const std::string& path, Scale scale) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("site_id,t,value", 0) != 0)
        throw DataError("bad replicates header in " + path);
    int max_i = -1, max_t = -1;
    std::vector<std::tuple<int, int, double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("bad replicates row: " + line);
        const int i = std::stoi(line.substr(0, c1));
        const int t = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
        const double v = std::stod(line.substr(c2 + 1));
        rows.emplace_back(i, t, v);
        max_i = std::max(max_i, i);
        max_t = std::max(max_t, t);
    }
    if (max_i < 0 || max_t < 0) throw DataError("empty replicates file: " + path);
    ReplicateMatrix out;
    out.scale = scale;
    out.values = Eigen::MatrixXd::Constant(max_i + 1, max_t + 1,
                                           std::numeric_limits<double>::quiet_NaN());
    for (auto& [i, t, v] : rows) out.values(i, t) = v;
    if (out.values.hasNaN()) throw DataError("missing cells in " + path);
    return out;
}

}  // namespace lrsm
