#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lrsm {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(const Point& a, const Point& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// Planar site container.  Duplicate coordinates are rejected on construction:
// a duplicated site makes every correlation matrix exactly singular.
class SiteSet {
public:
    SiteSet() = default;
    explicit SiteSet(std::vector<Point> pts);

    int n() const { return static_cast<int>(pts_.size()); }
    const Point& operator[](int i) const { return pts_[i]; }
    const std::vector<Point>& points() const { return pts_; }

private:
    std::vector<Point> pts_;
};

// Ordered conditioning structure for the Vecchia factorization.
// neighbor_sets[i] holds original site indices of the (up to m) nearest
// sites among those earlier in the ordering; the first entry is empty.
struct VecchiaPlan {
    std::vector<int> ordering;                   // permutation of 0..n-1
    std::vector<std::vector<int>> neighbor_sets; // per ordered position
    int m = 0;
};

// n sites uniform on the unit square, deterministic per seed.
SiteSet sample_uniform_sites(int n, std::uint64_t seed);

Eigen::MatrixXd distance_matrix(const SiteSet& s);

// Max-min ordering: starts at the site nearest the centroid, then greedily
// adds the site maximizing its minimum distance to the selected set.
// Ties broken by lowest index.
std::vector<int> maxmin_ordering(const SiteSet& s);

VecchiaPlan build_vecchia_plan(const SiteSet& s, int m);

// k nearest observed sites per target, ascending by distance,
// ties broken by lowest index.
std::vector<std::vector<int>> knn_to_targets(const SiteSet& s,
                                             const SiteSet& targets, int k);

void write_sites_csv(const SiteSet& s, const std::string& path);
SiteSet read_sites_csv(const std::string& path);

}  // namespace lrsm
