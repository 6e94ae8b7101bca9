#pragma once
// Nearest-neighbour propensity matching, with replacement, k matches per
// participant. Ties in |p-score distance| break by ascending person_id so
// results are order-independent.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "peerfx/errors.hpp"

namespace peerfx {

struct MatchResult {
    int k = 0;
    // per participant: k matched pool positions (indices into the pool
    // arrays passed in) and the |p-score| distances
    std::vector<std::vector<std::size_t>> matches;
    std::vector<std::vector<double>> distances;
    // per pool member: times chosen across all participants and slots
    std::vector<double> frequency_weight;
};

inline MatchResult match_nearest_neighbors(const std::vector<double>& p_participants,
                                           const std::vector<double>& p_pool,
                                           const std::vector<long>& pool_person_ids,
                                           int k = 3) {
    if (p_pool.empty()) throw NumericalError("matching: empty pool");
    if (pool_person_ids.size() != p_pool.size())
        throw NumericalError("matching: pool id/score size mismatch");
    if (k < 1 || static_cast<std::size_t>(k) > p_pool.size())
        throw NumericalError("matching: k exceeds pool size");

    // pool sorted by (score, person_id); candidate windows expand over this
    std::vector<std::size_t> order(p_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (p_pool[a] != p_pool[b]) return p_pool[a] < p_pool[b];
        return pool_person_ids[a] < pool_person_ids[b];
    });

    MatchResult res;
    res.k = k;
    res.matches.resize(p_participants.size());
    res.distances.resize(p_participants.size());
    res.frequency_weight.assign(p_pool.size(), 0.0);

    struct Cand {
        double dist;
        long pid;
        std::size_t pool_idx;
    };
    std::vector<Cand> cands;

    for (std::size_t i = 0; i < p_participants.size(); ++i) {
        const double s = p_participants[i];
        // first sorted pool entry with score >= s
        std::size_t hi = std::lower_bound(order.begin(), order.end(), s,
                                          [&](std::size_t idx, double v) {
                                              return p_pool[idx] < v;
                                          }) -
                         order.begin();
        std::size_t lo = hi;  // [lo, hi) is the consumed window

        cands.clear();
        const auto push_next = [&](bool from_right) {
            const std::size_t idx = from_right ? order[hi++] : order[--lo];
            cands.push_back({std::abs(p_pool[idx] - s), pool_person_ids[idx], idx});
        };
        // kth-best distance so far; everything at or below it may still matter
        const auto kth_dist = [&]() {
            return cands[static_cast<std::size_t>(k) - 1].dist;
        };

        while (true) {
            const bool can_left = lo > 0;
            const bool can_right = hi < order.size();
            if (!can_left && !can_right) break;
            double next_left = can_left ? s - p_pool[order[lo - 1]] : 0.0;
            double next_right = can_right ? p_pool[order[hi]] - s : 0.0;
            if (cands.size() >= static_cast<std::size_t>(k)) {
                std::nth_element(cands.begin(),
                                 cands.begin() + (k - 1), cands.end(),
                                 [](const Cand& a, const Cand& b) {
                                     if (a.dist != b.dist) return a.dist < b.dist;
                                     return a.pid < b.pid;
                                 });
                const double cut = kth_dist();
                // ties at the cut distance still compete on person_id
                const bool left_useful = can_left && next_left <= cut;
                const bool right_useful = can_right && next_right <= cut;
                if (!left_useful && !right_useful) break;
                if (left_useful && (!right_useful || next_left <= next_right))
                    push_next(false);
                else
                    push_next(true);
            } else {
                if (can_left && (!can_right || next_left <= next_right))
                    push_next(false);
                else
                    push_next(true);
            }
        }

        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            if (a.dist != b.dist) return a.dist < b.dist;
            return a.pid < b.pid;
        });
        auto& m = res.matches[i];
        auto& d = res.distances[i];
        m.reserve(k);
        d.reserve(k);
        for (int j = 0; j < k; ++j) {
            m.push_back(cands[j].pool_idx);
            d.push_back(cands[j].dist);
            res.frequency_weight[cands[j].pool_idx] += 1.0;
        }
    }
    return res;
}

}  // namespace peerfx
