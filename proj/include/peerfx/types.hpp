#pragma once
// Dataset schema: persons, courses, derived identification keys.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "peerfx/errors.hpp"

namespace peerfx {

constexpr int kPanelMonths = 60;
constexpr double kOutcomeDaysCap = 1826.0;  // five years

enum class Role { participant, nonparticipant };

enum class ProgramType { short_training, long_training, retraining };

inline const char* to_string(ProgramType t) {
    switch (t) {
        case ProgramType::short_training: return "short";
        case ProgramType::long_training: return "long";
        case ProgramType::retraining: return "retraining";
    }
    return "?";
}

inline ProgramType program_type_from(const std::string& s) {
    if (s == "short") return ProgramType::short_training;
    if (s == "long") return ProgramType::long_training;
    if (s == "retraining") return ProgramType::retraining;
    throw LoadError("unknown program_type token: '" + s + "'");
}

constexpr std::array<ProgramType, 3> kAllProgramTypes = {
    ProgramType::short_training, ProgramType::long_training, ProgramType::retraining};

// Calendar months are a single integer index: index = year*12 + (month-1).
inline int month_of_year(int month_index) { return month_index % 12 + 1; }
inline int year_of(int month_index) { return month_index / 12; }
inline int month_index_of(int year, int month) { return year * 12 + (month - 1); }

// Courses at one provider whose start months are congruent mod 4 form a
// month group; these are the cells within which peer assignment is
// idiosyncratic.
struct MonthGroupKey {
    int provider_id = 0;
    int group_index = 0;  // start_month mod 4
    friend bool operator==(const MonthGroupKey&, const MonthGroupKey&) = default;
};

// 4-month division of a calendar year (months 1-4, 5-8, 9-12).
struct SeasonKey {
    int year = 0;
    int third = 0;
    friend bool operator==(const SeasonKey&, const SeasonKey&) = default;
};

struct PersonRecord {
    long person_id = 0;
    Role role = Role::participant;
    int entry_ue_month = 0;
    std::optional<long> course_id;             // participants
    std::optional<double> ue_duration_at_start;  // months, participants
    int prior_program = 0;
    int same_firm_peer_flag = 0;
    std::optional<int> outcome_found_job_1y;  // nonparticipants

    // outcome panel (participants; NaN / -1 when absent)
    double search_duration_days = std::numeric_limits<double>::quiet_NaN();
    double emp_days_60 = std::numeric_limits<double>::quiet_NaN();
    double log_total_earn_60 = std::numeric_limits<double>::quiet_NaN();
    double log_first_job_earn = std::numeric_limits<double>::quiet_NaN();
    std::array<std::int8_t, kPanelMonths> employed_month{};  // 0/1, -1 absent

    // values parallel to Dataset::covariate_names
    std::vector<double> covariates;

    bool is_participant() const { return role == Role::participant; }
};

struct CourseRecord {
    long course_id = 0;
    int provider_id = 0;
    int start_month = 0;
    ProgramType program_type = ProgramType::short_training;
    int target_occupation = 0;
    int competence_level = 0;
    // course-level controls W
    int course_size = 0;
    double planned_duration_months = 0.0;
    double weekly_hours = 0.0;
    double hours_practice = 0.0;
    double hours_class = 0.0;
};

inline MonthGroupKey derive_month_group(const CourseRecord& c) {
    return MonthGroupKey{c.provider_id, ((c.start_month % 4) + 4) % 4};
}

inline SeasonKey derive_season(const CourseRecord& c) {
    return SeasonKey{year_of(c.start_month), (month_of_year(c.start_month) - 1) / 4};
}

struct Dataset {
    std::vector<std::string> covariate_names;
    std::vector<PersonRecord> persons;
    std::vector<CourseRecord> courses;

    // rebuilt by rebuild_indices()
    std::unordered_map<long, std::size_t> course_row;
    std::unordered_map<long, std::vector<std::size_t>> course_participants;
    std::unordered_map<int, std::vector<std::size_t>> provider_courses;

    void rebuild_indices() {
        course_row.clear();
        course_participants.clear();
        provider_courses.clear();
        for (std::size_t i = 0; i < courses.size(); ++i) {
            course_row[courses[i].course_id] = i;
            provider_courses[courses[i].provider_id].push_back(i);
        }
        for (std::size_t i = 0; i < persons.size(); ++i)
            if (persons[i].course_id)
                course_participants[*persons[i].course_id].push_back(i);
    }

    const CourseRecord& course_of(const PersonRecord& p) const {
        return courses.at(course_row.at(*p.course_id));
    }

    std::size_t covariate_index(const std::string& name) const {
        for (std::size_t i = 0; i < covariate_names.size(); ++i)
            if (covariate_names[i] == name) return i;
        throw LoadError("unknown covariate column: '" + name + "'");
    }

    // Checks every schema invariant that is decidable from the data itself.
    // Course-size bounds are a property of the *filtered* estimation sample
    // and are enforced by the filter, not here.
    void validate() const {
        std::unordered_map<long, int> seen_person;
        for (const auto& p : persons) {
            if (++seen_person[p.person_id] > 1)
                throw IntegrityError("duplicate person_id " + std::to_string(p.person_id));
            if (p.is_participant()) {
                if (!p.course_id)
                    throw IntegrityError("participant " + std::to_string(p.person_id) +
                                         " has no course_id");
                if (p.outcome_found_job_1y)
                    throw IntegrityError("participant " + std::to_string(p.person_id) +
                                         " carries outcome_found_job_1y");
                if (!course_row.count(*p.course_id))
                    throw IntegrityError("person " + std::to_string(p.person_id) +
                                         " references unknown course " +
                                         std::to_string(*p.course_id));
            } else {
                if (p.course_id)
                    throw IntegrityError("nonparticipant " + std::to_string(p.person_id) +
                                         " has a course_id");
                if (!p.outcome_found_job_1y)
                    throw IntegrityError("nonparticipant " + std::to_string(p.person_id) +
                                         " lacks outcome_found_job_1y");
            }
            for (int m = 0; m < kPanelMonths; ++m) {
                const int v = p.employed_month[m];
                if (v != -1 && v != 0 && v != 1)
                    throw IntegrityError("employed_month out of {0,1} for person " +
                                         std::to_string(p.person_id));
            }
            if (!std::isnan(p.emp_days_60) &&
                (p.emp_days_60 < 0.0 || p.emp_days_60 > kOutcomeDaysCap))
                throw IntegrityError("emp_days_60 out of [0,1826] for person " +
                                     std::to_string(p.person_id));
            if (p.covariates.size() != covariate_names.size())
                throw IntegrityError("covariate width mismatch for person " +
                                     std::to_string(p.person_id));
        }
        std::unordered_map<long, int> seen_course;
        for (const auto& c : courses)
            if (++seen_course[c.course_id] > 1)
                throw IntegrityError("duplicate course_id " + std::to_string(c.course_id));
        for (const auto& c : courses) {
            const auto it = course_participants.find(c.course_id);
            const int n = it == course_participants.end()
                              ? 0
                              : static_cast<int>(it->second.size());
            if (n != c.course_size)
                throw IntegrityError("course " + std::to_string(c.course_id) +
                                     " stores size " + std::to_string(c.course_size) +
                                     " but has " + std::to_string(n) + " participants");
        }
    }

    std::size_t n_participants() const {
        std::size_t n = 0;
        for (const auto& p : persons) n += p.is_participant();
        return n;
    }
};

}  // namespace peerfx
