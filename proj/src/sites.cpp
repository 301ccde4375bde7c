#include "lrsm/sites.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "lrsm/errors.hpp"
#include "lrsm/rng.hpp"

namespace lrsm {

SiteSet::SiteSet(std::vector<Point> pts) : pts_(std::move(pts)) {
    if (pts_.empty()) throw std::invalid_argument("SiteSet: need n >= 1 sites");
    for (const auto& p : pts_)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("SiteSet: non-finite coordinate");
    for (std::size_t i = 0; i < pts_.size(); ++i)
        for (std::size_t j = i + 1; j < pts_.size(); ++j)
            if (pts_[i].x == pts_[j].x && pts_[i].y == pts_[j].y)
                throw std::invalid_argument(
                    "SiteSet: duplicate site at index " + std::to_string(j));
}

SiteSet sample_uniform_sites(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_uniform_sites: n >= 1 required");
    Rng rng(Rng::derive(seed, {0x5174e5u}));
    std::vector<Point> pts;
    pts.reserve(n);
    while (static_cast<int>(pts.size()) < n) {
        Point p{rng.uniform(), rng.uniform()};
        bool dup = false;
        for (const auto& q : pts)
            if (q.x == p.x && q.y == p.y) { dup = true; break; }
        if (!dup) pts.push_back(p);
    }
    return SiteSet(std::move(pts));
}

Eigen::MatrixXd distance_matrix(const SiteSet& s) {
    const int n = s.n();
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (int j = i + 1; j < n; ++j) {
            double v = dist(s[i], s[j]);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

std::vector<int> maxmin_ordering(const SiteSet& s) {
    const int n = s.n();
    Point centroid{0.0, 0.0};
    for (const auto& p : s.points()) {
        centroid.x += p.x;
        centroid.y += p.y;
    }
    centroid.x /= n;
    centroid.y /= n;

    int first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double d = dist(s[i], centroid);
        if (d < best) { best = d; first = i; }
    }

    std::vector<int> order;
    order.reserve(n);
    order.push_back(first);
    std::vector<double> mindist(n, std::numeric_limits<double>::infinity());
    std::vector<char> used(n, 0);
    used[first] = 1;
    for (int i = 0; i < n; ++i) mindist[i] = dist(s[i], s[first]);

    while (static_cast<int>(order.size()) < n) {
        int pick = -1;
        double bestmin = -1.0;
        for (int i = 0; i < n; ++i) {
            if (used[i]) continue;
            if (mindist[i] > bestmin) { bestmin = mindist[i]; pick = i; }
        }
        used[pick] = 1;
        order.push_back(pick);
        for (int i = 0; i < n; ++i) {
            if (used[i]) continue;
            mindist[i] = std::min(mindist[i], dist(s[i], s[pick]));
        }
    }
    return order;
}

VecchiaPlan build_vecchia_plan(const SiteSet& s, int m) {
    if (m < 1) throw std::invalid_argument("build_vecchia_plan: m >= 1 required");
    VecchiaPlan plan;
    plan.m = m;
    plan.ordering = maxmin_ordering(s);
    const int n = s.n();
    plan.neighbor_sets.resize(n);
    for (int i = 1; i < n; ++i) {
        const Point& target = s[plan.ordering[i]];
        // (distance, ordered position) among predecessors; position tie-break
        // makes the selection deterministic
        std::vector<std::pair<double, int>> cand;
        cand.reserve(i);
        for (int j = 0; j < i; ++j)
            cand.emplace_back(dist(target, s[plan.ordering[j]]), j);
        const int k = std::min(i, m);
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        auto& set = plan.neighbor_sets[i];
        set.reserve(k);
        for (int j = 0; j < k; ++j) set.push_back(plan.ordering[cand[j].second]);
    }
    return plan;
}

std::vector<std::vector<int>> knn_to_targets(const SiteSet& s,
                                             const SiteSet& targets, int k) {
    if (k > s.n() || k < 1)
        throw std::invalid_argument("knn_to_targets: need 1 <= k <= n");
    std::vector<std::vector<int>> out(targets.n());
    for (int t = 0; t < targets.n(); ++t) {
        std::vector<std::pair<double, int>> cand(s.n());
        for (int i = 0; i < s.n(); ++i) cand[i] = {dist(targets[t], s[i]), i};
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        out[t].reserve(k);
        for (int i = 0; i < k; ++i) out[t].push_back(cand[i].second);
    }
    return out;
}

void write_sites_csv(const SiteSet& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f.precision(17);
    f << "x,y\n";
    for (const auto& p : s.points()) f << p.x << "," << p.y << "\n";
}

SiteSet read_sites_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("x,y", 0) != 0)
        throw DataError("bad sites header in " + path);
    std::vector<Point> pts;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("bad sites row: " + line);
        pts.push_back({std::stod(line.substr(0, comma)),
                       std::stod(line.substr(comma + 1))});
    }
    return SiteSet(std::move(pts));
}

}  // namespace lrsm
