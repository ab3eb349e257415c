/**
 * @file moo.hpp
 * @brief Dominance, nondominated archives and a multi-directional pattern
 * search over a box (minimization throughout).
 *
 * The search keeps one mesh size per archive member, expressed as a fraction
 * of the box width. Each iteration polls every member whose mesh is above the
 * minimum along +/- coordinate directions, inserts the nondominated results,
 * expands the mesh of members whose polls produced a surviving point and
 * contracts the others.
 */

#ifndef ECOSPEED_MOO_HPP
#define ECOSPEED_MOO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "error.hpp"

namespace ecospeed {

using ObjectiveVector = std::vector<double>;

/// a dominates b: a_i <= b_i for all i, strictly for at least one.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("dominates: dimension mismatch");
    bool strict = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return false;
        if (a[i] < b[i]) strict = true;
    }
    return strict;
}

/// Indices of the nondominated points, in lexicographic order of the points.
/// Among equal points only the lowest index survives.
inline std::vector<std::size_t> nondominated_indices(std::span<const ObjectiveVector> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    // lexicographic order: a dominator always precedes what it dominates
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        if (!kept.empty() && points[kept.back()] == points[idx]) continue;
        const bool beaten = std::any_of(kept.begin(), kept.end(),
                                        [&](std::size_t k) { return dominates(points[k], points[idx]); });
        if (!beaten) kept.push_back(idx);
    }
    return kept;
}

inline std::vector<ObjectiveVector> nondominated_filter(std::span<const ObjectiveVector> points) {
    std::vector<ObjectiveVector> out;
    for (std::size_t i : nondominated_indices(points)) out.push_back(points[i]);
    return out;
}

/// Box constraints lower <= x <= upper.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }

    void check() const {
        if (lower.empty() || lower.size() != upper.size()) throw DomainError("box: bounds must be nonempty and equal length");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] <= upper[i])) throw DomainError("box: lower bound exceeds upper bound");
    }

    bool contains(std::span<const double> x) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] || x[i] > upper[i]) return false;
        return true;
    }

    std::vector<double> clip(std::vector<double> x) const {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
        return x;
    }
};

/// Crowding distance per point; boundary points of every axis get infinity.
inline std::vector<double> crowding_distances(const std::vector<ObjectiveVector>& f) {
    const std::size_t n = f.size();
    std::vector<double> cd(n, 0.0);
    if (n == 0) return cd;
    const auto inf = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < f[0].size(); ++m) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a][m] < f[b][m]; });
        const double range = f[order.back()][m] - f[order.front()][m];
        cd[order.front()] = cd[order.back()] = inf;
        if (range <= 0.0) continue;
        for (std::size_t k = 1; k + 1 < n; ++k)
            cd[order[k]] += (f[order[k + 1]][m] - f[order[k - 1]][m]) / range;
    }
    return cd;
}

struct ArchiveEntry {
    std::vector<double> x;
    ObjectiveVector f;
    double mesh{};  // poll step as a fraction of the box width

    friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

/// Mutually nondominated entries kept in lexicographic order of (f, x).
class ParetoArchive {
public:
    struct Stats {
        std::size_t offered{};
        std::size_t accepted{};
        std::size_t evicted{};  // removed because a new entry dominated them
        std::size_t pruned{};   // removed by the capacity bound
    };

    explicit ParetoArchive(std::size_t capacity = 0) : capacity_(capacity) {}

    /// Inserts unless an equal or dominating vector is already present.
    bool insert(ArchiveEntry e) {
        ++stats_.offered;
        for (const auto& a : entries_)
            if (a.f == e.f || dominates(a.f, e.f)) return false;
        const auto before = entries_.size();
        std::erase_if(entries_, [&](const ArchiveEntry& a) { return dominates(e.f, a.f); });
        stats_.evicted += before - entries_.size();
        const auto pos = std::lower_bound(entries_.begin(), entries_.end(), e, canonical_less);
        entries_.insert(pos, std::move(e));
        ++stats_.accepted;
        if (capacity_ > 0 && entries_.size() > capacity_) prune();
        return true;
    }

    const std::vector<ArchiveEntry>& entries() const { return entries_; }
    std::vector<ArchiveEntry>& mutable_entries() { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const Stats& stats() const { return stats_; }

    std::vector<ObjectiveVector> objectives() const {
        std::vector<ObjectiveVector> out;
        for (const auto& e : entries_) out.push_back(e.f);
        return out;
    }

    static bool canonical_less(const ArchiveEntry& a, const ArchiveEntry& b) {
        if (a.f != b.f) return a.f < b.f;
        return a.x < b.x;
    }

private:
    // Drops the entry with the smallest crowding distance until within capacity.
    void prune() {
        while (entries_.size() > capacity_) {
            const auto cd = crowding_distances(objectives());
            std::size_t worst = 0;
            for (std::size_t i = 1; i < cd.size(); ++i)
                if (cd[i] < cd[worst]) worst = i;
            entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(worst));
            ++stats_.pruned;
        }
    }

    std::vector<ArchiveEntry> entries_;
    std::size_t capacity_{};
    Stats stats_{};
};

struct SearchOptions {
    std::size_t max_evaluations{1000};
    double initial_mesh{0.25};
    double max_mesh{0.5};
    double expansion{2.0};
    double contraction{0.5};
    double min_mesh{1e-3};
    std::uint64_t seed{0};
    std::size_t initial_population{0};  // 0 selects 4d + 2
    std::size_t capacity{0};            // 0 keeps every nondominated point
    std::size_t poll_members{0};        // members polled per iteration, 0 polls all
    unsigned jobs{1};
    std::function<void(const ParetoArchive&)> on_iteration;

    void check() const {
        if (max_evaluations == 0) throw DomainError("search: evaluation budget must be positive");
        if (!(expansion > 1.0)) throw DomainError("search: expansion factor must exceed 1");
        if (!(contraction > 0.0 && contraction < 1.0)) throw DomainError("search: contraction factor must lie in (0,1)");
        if (!(initial_mesh > 0.0 && min_mesh > 0.0 && max_mesh >= initial_mesh))
            throw DomainError("search: mesh sizes must be positive with max >= initial");
        if (jobs == 0) throw DomainError("search: jobs must be positive");
    }
};

struct SearchDiagnostics {
    std::size_t evaluations{};
    std::size_t iterations{};
    double final_mesh{};  // largest member mesh at termination
    std::size_t archive_size{};
    bool budget_exhausted{};
};

struct SearchResult {
    ParetoArchive archive;
    SearchDiagnostics diagnostics;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::vector<std::vector<double>> initial_points(const Box& box, const SearchOptions& opts) {
    const std::size_t d = box.dim();
    const std::size_t total = opts.initial_population ? opts.initial_population : 4 * d + 2;
    std::mt19937_64 rng(opts.seed);
    std::vector<std::vector<double>> pts;
    std::vector<double> center(d);
    for (std::size_t i = 0; i < d; ++i) center[i] = 0.5 * (box.lower[i] + box.upper[i]);
    pts.push_back(center);
    pts.push_back(box.lower);
    pts.push_back(box.upper);
    const std::size_t corners = std::min<std::size_t>(2 * d, total > 3 ? total - 3 : 0);
    for (std::size_t c = 0; c < corners; ++c) {
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = (rng() & 1u) ? box.upper[i] : box.lower[i];
        pts.push_back(x);
    }
    while (pts.size() < total) {
        std::vector<double> x(d);
        for (std::size_t i = 0; i < d; ++i) x[i] = box.lower[i] + unit_draw(rng) * (box.upper[i] - box.lower[i]);
        pts.push_back(x);
    }
    pts.resize(std::min(pts.size(), total));
    return pts;
}

template <class Evaluate>
std::vector<ObjectiveVector> evaluate_batch(Evaluate& evaluate, const std::vector<std::vector<double>>& xs,
                                            unsigned jobs) {
    std::vector<ObjectiveVector> out(xs.size());
    if (jobs <= 1 || xs.size() < 2) {
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = evaluate(xs[i]);
        return out;
    }
    const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(xs.size()));
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < xs.size(); i += workers) out[i] = evaluate(xs[i]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace detail

/// Pattern search for the nondominated set of `evaluate` over `box`.
/// Deterministic for a fixed seed regardless of `jobs`.
template <class Evaluate>
SearchResult pareto_search(Evaluate&& evaluate, const Box& box, const SearchOptions& opts) {
    box.check();
    opts.check();
    const std::size_t d = box.dim();
    SearchResult res{ParetoArchive(opts.capacity), {}};
    std::map<std::vector<double>, ObjectiveVector> seen;
    std::size_t dim_f = 0;

    struct Candidate {
        std::vector<double> x;
        ObjectiveVector f;
        double mesh{};
        std::size_t parent{};
    };

    // Evaluates what is new, then inserts in canonical order so the archive
    // does not depend on evaluation order. Returns the candidates kept.
    auto run_batch = [&](std::vector<Candidate>& cands) {
        std::vector<std::vector<double>> xs;
        for (const auto& c : cands) xs.push_back(c.x);
        auto fs = detail::evaluate_batch(evaluate, xs, opts.jobs);
        res.diagnostics.evaluations += fs.size();
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (dim_f == 0) dim_f = fs[i].size();
            if (fs[i].size() != dim_f || dim_f == 0) throw DomainError("search: objective dimension changed");
            cands[i].f = std::move(fs[i]);
            seen.emplace(cands[i].x, cands[i].f);
        }
        std::vector<std::size_t> order(cands.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (cands[a].f != cands[b].f) return cands[a].f < cands[b].f;
            return cands[a].x < cands[b].x;
        });
        for (std::size_t i : order) res.archive.insert({cands[i].x, cands[i].f, cands[i].mesh});
    };

    auto in_archive = [&](const std::vector<double>& x) {
        return std::any_of(res.archive.entries().begin(), res.archive.entries().end(),
                           [&](const ArchiveEntry& e) { return e.x == x; });
    };

    {
        std::vector<Candidate> init;
        for (auto& x : detail::initial_points(box, opts)) {
            if (seen.count(x) || std::any_of(init.begin(), init.end(), [&](const Candidate& c) { return c.x == x; }))
                continue;
            if (init.size() >= opts.max_evaluations) break;
            init.push_back({x, {}, opts.initial_mesh, 0});
        }
        run_batch(init);
    }

    while (true) {
        if (opts.on_iteration) opts.on_iteration(res.archive);
        std::vector<std::size_t> active;
        for (std::size_t m = 0; m < res.archive.size(); ++m)
            if (res.archive.entries()[m].mesh >= opts.min_mesh) active.push_back(m);
        if (active.empty()) break;
        if (opts.poll_members > 0 && active.size() > opts.poll_members) {
            // least crowded first; boundary members have infinite distance
            const auto cd = crowding_distances(res.archive.objectives());
            std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
            active.resize(opts.poll_members);
            std::sort(active.begin(), active.end());
        }
        if (res.diagnostics.evaluations >= opts.max_evaluations) {
            res.diagnostics.budget_exhausted = true;
            break;
        }
        ++res.diagnostics.iterations;

        // snapshot members: the archive changes during insertion
        std::vector<ArchiveEntry> members;
        for (std::size_t m : active) members.push_back(res.archive.entries()[m]);
        std::vector<Candidate> cands;
        std::vector<std::vector<std::vector<double>>> polled(members.size());
        std::size_t remaining = opts.max_evaluations - res.diagnostics.evaluations;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const auto& e = members[m];
            for (std::size_t i = 0; i < d; ++i) {
                const double step = e.mesh * (box.upper[i] - box.lower[i]);
                if (step == 0.0) continue;
                for (double sign : {1.0, -1.0}) {
                    auto x = e.x;
                    x[i] += sign * step;
                    x = box.clip(std::move(x));
                    if (x == e.x) continue;
                    polled[m].push_back(x);
                    if (seen.count(x) ||
                        std::any_of(cands.begin(), cands.end(), [&](const Candidate& c) { return c.x == x; }))
                        continue;
                    if (remaining == 0) continue;
                    --remaining;
                    cands.push_back({x, {}, e.mesh, m});
                }
            }
        }
        run_batch(cands);

        // a poll succeeds when one of its fresh points survived in the archive
        std::vector<bool> success(members.size(), false);
        for (const auto& c : cands)
            if (in_archive(c.x)) success[c.parent] = true;
        for (std::size_t m = 0; m < members.size(); ++m) {
            auto& entries = res.archive.mutable_entries();
            auto it = std::find_if(entries.begin(), entries.end(),
                                   [&](const ArchiveEntry& a) { return a.x == members[m].x; });
            if (it == entries.end()) continue;
            it->mesh = success[m] ? std::min(opts.max_mesh, it->mesh * opts.expansion) : it->mesh * opts.contraction;
        }
    }

    double mesh = 0.0;
    for (const auto& e : res.archive.entries()) mesh = std::max(mesh, e.mesh);
    res.diagnostics.final_mesh = mesh;
    res.diagnostics.archive_size = res.archive.size();
    return res;
}

/// Componentwise best values, each from a single-objective run of the same engine.
template <class Evaluate>
ObjectiveVector ideal_point(Evaluate&& evaluate, const Box& box, const SearchOptions& opts) {
    box.check();
    opts.check();
    std::vector<double> probe = box.lower;
    const std::size_t m = evaluate(probe).size();
    ObjectiveVector ideal(m);
    for (std::size_t k = 0; k < m; ++k) {
        auto component = [&](const std::vector<double>& x) { return ObjectiveVector{evaluate(x)[k]}; };
        auto res = pareto_search(component, box, opts);
        ideal[k] = res.archive.entries().front().f[0];
    }
    return ideal;
}

/// Divides each axis by its ideal value. Axes flagged in `skip_if_zero` are
/// left as they are when their ideal is exactly zero; any other zero ideal is
/// an error.
inline std::vector<ObjectiveVector> normalize_front(std::span<const ObjectiveVector> front, std::span<const double> ideal,
                                                    const std::vector<bool>& skip_if_zero = {}) {
    std::vector<bool> divide(ideal.size(), true);
    for (std::size_t k = 0; k < ideal.size(); ++k) {
        if (ideal[k] != 0.0) continue;
        if (k < skip_if_zero.size() && skip_if_zero[k])
            divide[k] = false;
        else
            throw DomainError("normalize_front: ideal component " + std::to_string(k + 1) + " is zero");
    }
    std::vector<ObjectiveVector> out;
    for (const auto& f : front) {
        if (f.size() != ideal.size()) throw DomainError("normalize_front: dimension mismatch");
        ObjectiveVector g(f.size());
        for (std::size_t k = 0; k < f.size(); ++k) g[k] = divide[k] ? f[k] / ideal[k] : f[k];
        out.push_back(std::move(g));
    }
    return out;
}

namespace detail {

inline double hypervolume_2d(std::vector<std::pair<double, double>> pts, double r0, double r1) {
    std::sort(pts.begin(), pts.end());
    double area = 0.0, best = r1;
    for (const auto& [a, b] : pts) {
        if (b >= best) continue;
        area += (r0 - a) * (best - b);
        best = b;
    }
    return area;
}

} // namespace detail

/// Volume dominated by `front` and bounded by `reference` (2 or 3 objectives).
inline double hypervolume(std::span<const ObjectiveVector> front, std::span<const double> reference) {
    const std::size_t m = reference.size();
    if (m != 2 && m != 3) throw DomainError("hypervolume: only 2 or 3 objectives are supported");
    std::vector<ObjectiveVector> pts;
    for (const auto& f : front) {
        if (f.size() != m) throw DomainError("hypervolume: dimension mismatch");
        bool inside = true;
        for (std::size_t k = 0; k < m; ++k) inside = inside && f[k] < reference[k];
        if (inside) pts.push_back(f);
    }
    if (m == 2) {
        std::vector<std::pair<double, double>> p2;
        for (const auto& f : pts) p2.emplace_back(f[0], f[1]);
        return detail::hypervolume_2d(std::move(p2), reference[0], reference[1]);
    }
    // slice along the third objective
    std::sort(pts.begin(), pts.end(), [](const ObjectiveVector& a, const ObjectiveVector& b) { return a[2] < b[2]; });
    double vol = 0.0;
    std::vector<std::pair<double, double>> active;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        active.emplace_back(pts[i][0], pts[i][1]);
        const double top = i + 1 < pts.size() ? pts[i + 1][2] : reference[2];
        if (top > pts[i][2]) vol += detail::hypervolume_2d(active, reference[0], reference[1]) * (top - pts[i][2]);
    }
    return vol;
}

} // namespace ecospeed

#endif // ECOSPEED_MOO_HPP
