#include "splitforge/embedding_ops.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <nlohmann/json.hpp>

#include "splitforge/error.hpp"
#include "splitforge/kernels.hpp"
#include "splitforge/rng.hpp"

namespace splitforge {

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw ValidationError("cosine_similarity: dimension mismatch");
    }
    const double nu = kernels::dot(u.data(), u.data(), u.size());
    const double nv = kernels::dot(v.data(), v.data(), v.size());
    if (nu == 0.0 || nv == 0.0) {
        throw ValidationError("cosine_similarity: zero-norm input vector");
    }
    const double sim = kernels::dot(u.data(), v.data(), u.size()) / std::sqrt(nu * nv);
    return std::clamp(sim, -1.0, 1.0);
}

namespace {

// better(a, b): a ranks before b. sim descending, (i, j) ascending on exact ties.
bool pair_better(const SimilarPair& a, const SimilarPair& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

Matrix normalized_rows(const ConceptSet& cs, const char* op) {
    Matrix out(cs.size(), cs.dim());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        auto row = cs.embeddings.row(i);
        const double n2 = kernels::dot(row.data(), row.data(), row.size());
        if (n2 == 0.0) {
            throw ValidationError(std::string(op) + ": zero-norm embedding for concept '" +
                                  cs.names[i] + "'");
        }
        const double inv = 1.0 / std::sqrt(n2);
        for (std::size_t j = 0; j < cs.dim(); ++j) out.at(i, j) = cs.embeddings.at(i, j) * inv;
    }
    return out;
}

} // namespace

std::vector<SimilarPair> top_pairs(const ConceptSet& cs, std::size_t k) {
    if (k == 0) throw ValidationError("top_pairs: K must be positive");
    const std::size_t n = cs.size();
    Matrix unit = normalized_rows(cs, "top_pairs");

    // min-heap on pair_better: top() is the worst retained pair
    auto worse_on_top = [](const SimilarPair& a, const SimilarPair& b) { return pair_better(a, b); };
    std::priority_queue<SimilarPair, std::vector<SimilarPair>, decltype(worse_on_top)> heap(
        worse_on_top);

    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto ri = unit.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto rj = unit.row(j);
            double sim = kernels::dot(ri.data(), rj.data(), ri.size());
            sim = std::clamp(sim, -1.0, 1.0);
            SimilarPair p{static_cast<int>(i), static_cast<int>(j), sim};
            if (heap.size() < k) {
                heap.push(p);
            } else if (pair_better(p, heap.top())) {
                heap.pop();
                heap.push(p);
            }
        }
    }

    std::vector<SimilarPair> result;
    result.reserve(heap.size());
    while (!heap.empty()) {
        result.push_back(heap.top());
        heap.pop();
    }
    std::reverse(result.begin(), result.end());
    return result;
}

std::vector<std::pair<int, double>> max_similarity_rank(const ConceptSet& cs) {
    const std::size_t n = cs.size();
    if (n < 2) throw ValidationError("max_similarity_rank: needs N >= 2");
    Matrix unit = normalized_rows(cs, "max_similarity_rank");

    std::vector<double> max_sim(n, -2.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto ri = unit.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            auto rj = unit.row(j);
            double sim = std::clamp(kernels::dot(ri.data(), rj.data(), ri.size()), -1.0, 1.0);
            if (sim > max_sim[i]) max_sim[i] = sim;
            if (sim > max_sim[j]) max_sim[j] = sim;
        }
    }

    std::vector<std::pair<int, double>> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = {static_cast<int>(i), max_sim[i]};
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

namespace {

struct LloydResult {
    std::vector<int> assignment;
    Matrix centroids;
    double inertia = 0.0;
    std::vector<double> trace;
    int iterations = 0;
};

std::vector<int> assign_points(const Matrix& points, const Matrix& centroids) {
    std::vector<int> assign(points.rows(), 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto p = points.row(i);
        double best = kernels::l2sqr(p.data(), centroids.row(0).data(), p.size());
        int best_c = 0;
        for (std::size_t c = 1; c < centroids.rows(); ++c) {
            const double d = kernels::l2sqr(p.data(), centroids.row(c).data(), p.size());
            if (d < best) {
                best = d;
                best_c = static_cast<int>(c);
            }
        }
        assign[i] = best_c;
    }
    return assign;
}

// Reseed each empty cluster with the point farthest from its current centroid
// (lowest concept_id on ties), taken only from clusters that keep >= 1 member.
void repair_empty_clusters(const Matrix& points, Matrix& centroids, std::vector<int>& assign) {
    const int k = static_cast<int>(centroids.rows());
    std::vector<int> counts(k, 0);
    for (int a : assign) ++counts[a];
    for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) continue;
        double farthest = -1.0;
        int pick = -1;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            if (counts[assign[i]] < 2) continue;
            auto p = points.row(i);
            const double d = kernels::l2sqr(p.data(), centroids.row(assign[i]).data(), p.size());
            if (d > farthest) {
                farthest = d;
                pick = static_cast<int>(i);
            }
        }
        if (pick < 0) continue; // k == n and all clusters singletons; cannot happen with counts[c]==0
        --counts[assign[pick]];
        assign[pick] = c;
        ++counts[c];
        auto src = points.row(pick);
        for (std::size_t j = 0; j < points.cols(); ++j) centroids.at(c, j) = src[j];
    }
}

double total_inertia(const Matrix& points, const Matrix& centroids, const std::vector<int>& assign) {
    double sum = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto p = points.row(i);
        sum += kernels::l2sqr(p.data(), centroids.row(assign[i]).data(), p.size());
    }
    return sum;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    Matrix centroids(k, d);
    std::vector<bool> chosen(n, false);

    auto set_centroid = [&](int c, std::size_t i) {
        auto src = points.row(i);
        for (std::size_t j = 0; j < d; ++j) centroids.at(c, j) = src[j];
        chosen[i] = true;
    };

    set_centroid(0, rng.next_below(n));

    std::vector<double> d2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = kernels::l2sqr(points.row(i).data(), centroids.row(0).data(), d);
    }

    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += d2[i];
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.next_double() * total;
            double cum = 0.0;
            bool found = false;
            for (std::size_t i = 0; i < n; ++i) {
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    found = true;
                    break;
                }
            }
            if (!found) {
                // numeric edge: r landed on the cumulative tail; take last positive mass
                for (std::size_t i = n; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // all remaining mass zero (duplicate points): uniform over unchosen
            std::vector<std::size_t> open;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) open.push_back(i);
            }
            pick = open[rng.next_below(open.size())];
        }
        set_centroid(c, pick);
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = kernels::l2sqr(points.row(i).data(), centroids.row(c).data(), d);
            if (dist < d2[i]) d2[i] = dist;
        }
    }
    return centroids;
}

LloydResult lloyd_run(const Matrix& points, int k, std::uint64_t seed, int max_iter) {
    Rng rng(seed);
    LloydResult res;
    res.centroids = kmeanspp_init(points, k, rng);
    res.assignment = assign_points(points, res.centroids);
    repair_empty_clusters(points, res.centroids, res.assignment);
    res.inertia = total_inertia(points, res.centroids, res.assignment);
    res.trace.push_back(res.inertia);

    std::vector<double> accum(static_cast<std::size_t>(k) * points.cols());
    std::vector<int> counts(k);
    for (int iter = 0; iter < max_iter; ++iter) {
        // centroid update, accumulated in concept_id order
        std::fill(accum.begin(), accum.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const int c = res.assignment[i];
            ++counts[c];
            kernels::axpy(1.0, points.row(i).data(), accum.data() + c * points.cols(),
                          points.cols());
        }
        for (int c = 0; c < k; ++c) {
            const double inv = 1.0 / counts[c]; // every cluster non-empty after repair
            for (std::size_t j = 0; j < points.cols(); ++j) {
                res.centroids.at(c, j) = accum[c * points.cols() + j] * inv;
            }
        }

        auto next = assign_points(points, res.centroids);
        repair_empty_clusters(points, res.centroids, next);
        res.inertia = total_inertia(points, res.centroids, next);
        res.trace.push_back(res.inertia);
        res.iterations = iter + 1;
        if (next == res.assignment) break;
        res.assignment = std::move(next);
    }
    return res;
}

} // namespace

ClusterAssignment kmeans(const ConceptSet& cs, int k, std::uint64_t seed,
                         const KmeansOptions& opts) {
    const std::size_t n = cs.size();
    if (k <= 0) throw ValidationError("kmeans: k must be positive");
    if (static_cast<std::size_t>(k) > n) {
        throw ValidationError("kmeans: k=" + std::to_string(k) + " exceeds N=" + std::to_string(n));
    }
    if (opts.max_iter < 1) throw ValidationError("kmeans: max_iter must be >= 1");
    if (opts.n_init < 1) throw ValidationError("kmeans: n_init must be >= 1");

    const Matrix points = opts.normalize ? normalized_rows(cs, "kmeans") : cs.embeddings;

    LloydResult best;
    bool have_best = false;
    for (int init = 0; init < opts.n_init; ++init) {
        LloydResult run = lloyd_run(points, k, derive_seed(seed, static_cast<std::uint64_t>(init)),
                                    opts.max_iter);
        if (!have_best || run.inertia < best.inertia) {
            best = std::move(run);
            have_best = true;
        }
    }

    ClusterAssignment ca;
    ca.k = k;
    ca.seed = seed;
    ca.assignment = std::move(best.assignment);
    ca.centroids = std::move(best.centroids);
    ca.inertia = best.inertia;
    ca.inertia_trace = std::move(best.trace);
    ca.iterations = best.iterations;
    return ca;
}

std::string cluster_assignment_to_json(const ClusterAssignment& ca) {
    nlohmann::ordered_json j;
    j["k"] = ca.k;
    j["seed"] = ca.seed;
    j["inertia"] = ca.inertia;
    j["assignment"] = ca.assignment;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < ca.centroids.rows(); ++c) {
        auto row = ca.centroids.row(c);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["centroids"] = rows;
    return j.dump();
}

} // namespace splitforge
