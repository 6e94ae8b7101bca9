#pragma once
// Estimation-sample selection. Rules are applied to a fixpoint so that the
// result is stable under re-application: dropping participants can push a
// course below the size floor, which re-triggers the course screen.

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "peerfx/types.hpp"

namespace peerfx {

struct FilterRules {
    int min_course_size = 5;
    int max_course_size = 30;
    bool exclude_prior_program = false;  // drop participants in other programs
    bool exclude_same_firm = false;      // drop courses flagged same-firm
    // Screens providers that skip months inside their own activity window.
    // The synthetic institution offers courses monthly by construction, so
    // this is off by default.
    bool require_monthly_frequency = false;
};

inline Dataset filter_estimation_sample(const Dataset& input, const FilterRules& rules) {
    Dataset ds = input;
    ds.rebuild_indices();

    bool changed = true;
    bool first_pass = true;
    while (changed) {
        changed = false;

        if (rules.exclude_prior_program && first_pass) {
            const auto before = ds.persons.size();
            std::erase_if(ds.persons, [](const PersonRecord& p) {
                return p.is_participant() && p.prior_program == 1;
            });
            changed |= ds.persons.size() != before;
        }

        std::unordered_map<long, int> sizes;
        std::unordered_map<long, bool> firm_flagged;
        for (const auto& p : ds.persons) {
            if (!p.is_participant()) continue;
            ++sizes[*p.course_id];
            if (p.same_firm_peer_flag == 1) firm_flagged[*p.course_id] = true;
        }

        std::unordered_set<long> drop_courses;
        for (const auto& c : ds.courses) {
            const int n = sizes.count(c.course_id) ? sizes[c.course_id] : 0;
            if (n < rules.min_course_size || n > rules.max_course_size)
                drop_courses.insert(c.course_id);
            if (rules.exclude_same_firm && firm_flagged.count(c.course_id))
                drop_courses.insert(c.course_id);
        }

        // Provider screen: at least two courses in some month group, so
        // within-cell comparisons exist.
        {
            std::unordered_map<int, std::array<int, 4>> group_counts;
            std::unordered_map<int, std::set<int>> months_offered;
            for (const auto& c : ds.courses) {
                if (drop_courses.count(c.course_id)) continue;
                group_counts[c.provider_id][derive_month_group(c).group_index]++;
                months_offered[c.provider_id].insert(c.start_month);
            }
            for (const auto& c : ds.courses) {
                if (drop_courses.count(c.course_id)) continue;
                const auto& g = group_counts[c.provider_id];
                if (*std::max_element(g.begin(), g.end()) < 2)
                    drop_courses.insert(c.course_id);
                else if (rules.require_monthly_frequency) {
                    const auto& months = months_offered[c.provider_id];
                    if (static_cast<int>(months.size()) !=
                        *months.rbegin() - *months.begin() + 1)
                        drop_courses.insert(c.course_id);
                }
            }
        }

        if (!drop_courses.empty()) {
            std::erase_if(ds.courses, [&](const CourseRecord& c) {
                return drop_courses.count(c.course_id) > 0;
            });
            std::erase_if(ds.persons, [&](const PersonRecord& p) {
                return p.is_participant() && drop_courses.count(*p.course_id) > 0;
            });
            changed = true;
        }
        first_pass = false;
    }

    // refresh stored sizes
    std::unordered_map<long, int> sizes;
    for (const auto& p : ds.persons)
        if (p.is_participant()) ++sizes[*p.course_id];
    for (auto& c : ds.courses) c.course_size = sizes.count(c.course_id) ? sizes[c.course_id] : 0;

    if (ds.courses.empty() || ds.n_participants() == 0)
        throw EmptySampleError("estimation sample is empty after filtering");

    ds.rebuild_indices();
    ds.validate();
    return ds;
}

}  // namespace peerfx
