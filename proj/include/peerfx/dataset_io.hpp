#pragma once
// persons.csv / courses.csv loading and export.

#include <string>
#include <vector>

#include "peerfx/csv.hpp"
#include "peerfx/types.hpp"

namespace peerfx {

namespace schema {

inline const std::vector<std::string>& person_fixed_columns() {
    static const std::vector<std::string> cols = [] {
        std::vector<std::string> c = {
            "person_id", "role", "entry_ue_month", "course_id",
            "ue_duration_at_start", "prior_program", "same_firm_peer_flag",
            "outcome_found_job_1y", "search_duration_days", "emp_days_60",
            "log_total_earn_60", "log_first_job_earn"};
        for (int m = 1; m <= kPanelMonths; ++m)
            c.push_back("employed_m" + std::to_string(m));
        return c;
    }();
    return cols;
}

inline const std::vector<std::string>& course_columns() {
    static const std::vector<std::string> cols = {
        "course_id", "provider_id", "start_month", "program_type",
        "target_occupation", "competence_level", "course_size",
        "planned_duration_months", "weekly_hours", "hours_practice", "hours_class"};
    return cols;
}

}  // namespace schema

inline Dataset load_dataset(const std::string& persons_path,
                            const std::string& courses_path) {
    Dataset ds;

    const CsvTable courses = read_csv(courses_path);
    for (const auto& name : schema::course_columns())
        courses.column(name, courses_path);  // presence check
    const auto ccol = [&](const std::string& n) { return courses.column(n, courses_path); };
    for (std::size_t r = 0; r < courses.rows.size(); ++r) {
        const auto& row = courses.rows[r];
        CourseRecord c;
        c.course_id = parse_long(row[ccol("course_id")], courses_path, r, "course_id");
        c.provider_id = static_cast<int>(
            parse_long(row[ccol("provider_id")], courses_path, r, "provider_id"));
        c.start_month = static_cast<int>(
            parse_long(row[ccol("start_month")], courses_path, r, "start_month"));
        c.program_type = program_type_from(row[ccol("program_type")]);
        c.target_occupation = static_cast<int>(parse_long(
            row[ccol("target_occupation")], courses_path, r, "target_occupation"));
        c.competence_level = static_cast<int>(parse_long(
            row[ccol("competence_level")], courses_path, r, "competence_level"));
        c.course_size = static_cast<int>(
            parse_long(row[ccol("course_size")], courses_path, r, "course_size"));
        c.planned_duration_months = parse_double(
            row[ccol("planned_duration_months")], courses_path, r, "planned_duration_months");
        c.weekly_hours =
            parse_double(row[ccol("weekly_hours")], courses_path, r, "weekly_hours");
        c.hours_practice =
            parse_double(row[ccol("hours_practice")], courses_path, r, "hours_practice");
        c.hours_class =
            parse_double(row[ccol("hours_class")], courses_path, r, "hours_class");
        ds.courses.push_back(c);
    }

    const CsvTable persons = read_csv(persons_path);
    const auto& fixed = schema::person_fixed_columns();
    for (const auto& name : fixed) persons.column(name, persons_path);
    const auto pcol = [&](const std::string& n) { return persons.column(n, persons_path); };
    // Covariate columns are everything after the fixed block, header-driven.
    {
        std::vector<bool> is_fixed(persons.header.size(), false);
        for (const auto& name : fixed) is_fixed[persons.column(name, persons_path)] = true;
        for (std::size_t i = 0; i < persons.header.size(); ++i)
            if (!is_fixed[i]) ds.covariate_names.push_back(persons.header[i]);
    }

    for (std::size_t r = 0; r < persons.rows.size(); ++r) {
        const auto& row = persons.rows[r];
        PersonRecord p;
        p.person_id = parse_long(row[pcol("person_id")], persons_path, r, "person_id");
        const std::string& role = row[pcol("role")];
        if (role == "participant") p.role = Role::participant;
        else if (role == "nonparticipant") p.role = Role::nonparticipant;
        else throw LoadError(persons_path + ": unknown role '" + role + "' at row " +
                             std::to_string(r + 1));
        p.entry_ue_month = static_cast<int>(
            parse_long(row[pcol("entry_ue_month")], persons_path, r, "entry_ue_month"));
        if (!row[pcol("course_id")].empty())
            p.course_id = parse_long(row[pcol("course_id")], persons_path, r, "course_id");
        if (!row[pcol("ue_duration_at_start")].empty())
            p.ue_duration_at_start = parse_double(row[pcol("ue_duration_at_start")],
                                                  persons_path, r, "ue_duration_at_start");
        p.prior_program = static_cast<int>(
            parse_long(row[pcol("prior_program")], persons_path, r, "prior_program"));
        p.same_firm_peer_flag = static_cast<int>(parse_long(
            row[pcol("same_firm_peer_flag")], persons_path, r, "same_firm_peer_flag"));
        if (!row[pcol("outcome_found_job_1y")].empty())
            p.outcome_found_job_1y = static_cast<int>(parse_long(
                row[pcol("outcome_found_job_1y")], persons_path, r, "outcome_found_job_1y"));
        const auto opt_double = [&](const char* name, double& slot) {
            const auto& cell = row[pcol(name)];
            if (!cell.empty()) slot = parse_double(cell, persons_path, r, name);
        };
        opt_double("search_duration_days", p.search_duration_days);
        opt_double("emp_days_60", p.emp_days_60);
        opt_double("log_total_earn_60", p.log_total_earn_60);
        opt_double("log_first_job_earn", p.log_first_job_earn);
        for (int m = 0; m < kPanelMonths; ++m) {
            const auto& cell = row[pcol("employed_m" + std::to_string(m + 1))];
            p.employed_month[m] =
                cell.empty() ? std::int8_t{-1}
                             : static_cast<std::int8_t>(parse_long(
                                   cell, persons_path, r, "employed_m" + std::to_string(m + 1)));
        }
        p.covariates.reserve(ds.covariate_names.size());
        for (const auto& name : ds.covariate_names)
            p.covariates.push_back(
                parse_double(row[pcol(name)], persons_path, r, name));
        ds.persons.push_back(std::move(p));
    }

    ds.rebuild_indices();
    ds.validate();
    return ds;
}

struct FileMeta {
    std::string config_hash;
    std::string seed;
};

inline void write_dataset(const Dataset& ds, const std::string& persons_path,
                          const std::string& courses_path, const FileMeta& meta = {}) {
    {
        CsvWriter w(courses_path);
        if (!meta.config_hash.empty())
            w.comment("config_hash=" + meta.config_hash + " seed=" + meta.seed);
        w.row(schema::course_columns());
        for (const auto& c : ds.courses) {
            w.row({std::to_string(c.course_id), std::to_string(c.provider_id),
                   std::to_string(c.start_month), to_string(c.program_type),
                   std::to_string(c.target_occupation), std::to_string(c.competence_level),
                   std::to_string(c.course_size), format_double(c.planned_duration_months),
                   format_double(c.weekly_hours), format_double(c.hours_practice),
                   format_double(c.hours_class)});
        }
    }
    {
        CsvWriter w(persons_path);
        if (!meta.config_hash.empty())
            w.comment("config_hash=" + meta.config_hash + " seed=" + meta.seed);
        std::vector<std::string> header = schema::person_fixed_columns();
        for (const auto& n : ds.covariate_names) header.push_back(n);
        w.row(header);
        std::vector<std::string> cells;
        for (const auto& p : ds.persons) {
            cells.clear();
            cells.push_back(std::to_string(p.person_id));
            cells.push_back(p.is_participant() ? "participant" : "nonparticipant");
            cells.push_back(std::to_string(p.entry_ue_month));
            cells.push_back(p.course_id ? std::to_string(*p.course_id) : "");
            cells.push_back(format_double(p.ue_duration_at_start));
            cells.push_back(std::to_string(p.prior_program));
            cells.push_back(std::to_string(p.same_firm_peer_flag));
            cells.push_back(p.outcome_found_job_1y ? std::to_string(*p.outcome_found_job_1y)
                                                   : "");
            const auto num_or_empty = [](double v) {
                return std::isnan(v) ? std::string() : format_double(v);
            };
            cells.push_back(num_or_empty(p.search_duration_days));
            cells.push_back(num_or_empty(p.emp_days_60));
            cells.push_back(num_or_empty(p.log_total_earn_60));
            cells.push_back(num_or_empty(p.log_first_job_earn));
            for (int m = 0; m < kPanelMonths; ++m)
                cells.push_back(p.employed_month[m] < 0
                                    ? std::string()
                                    : std::to_string(int(p.employed_month[m])));
            for (double v : p.covariates) cells.push_back(format_double(v));
            w.row(cells);
        }
    }
}

}  // namespace peerfx
