#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "peerfx/dataset_io.hpp"
#include "peerfx/filters.hpp"
#include "peerfx/types.hpp"

using namespace peerfx;

namespace {

CourseRecord course_at(int provider, int year, int month) {
    CourseRecord c;
    c.provider_id = provider;
    c.start_month = month_index_of(year, month);
    return c;
}

PersonRecord participant(long id, long course_id) {
    PersonRecord p;
    p.person_id = id;
    p.role = Role::participant;
    p.course_id = course_id;
    p.ue_duration_at_start = 3.0;
    p.search_duration_days = 100.0;
    p.emp_days_60 = 500.0;
    p.log_total_earn_60 = 9.0;
    p.log_first_job_earn = 2.5;
    p.employed_month.fill(0);
    return p;
}

// a small dataset: one provider, monthly courses, fixed sizes
Dataset toy_dataset(int n_courses, int size) {
    Dataset ds;
    ds.covariate_names = {"age"};
    long pid = 1;
    for (int c = 0; c < n_courses; ++c) {
        CourseRecord course = course_at(1, 2008, 1 + c % 12);
        course.start_month = month_index_of(2008, 1) + c;
        course.course_id = c + 1;
        course.course_size = size;
        course.program_type = ProgramType::short_training;
        ds.courses.push_back(course);
        for (int i = 0; i < size; ++i) {
            PersonRecord p = participant(pid++, c + 1);
            p.entry_ue_month = course.start_month - 3;
            p.covariates = {30.0 + i};
            ds.persons.push_back(p);
        }
    }
    ds.rebuild_indices();
    return ds;
}

}  // namespace

TEST_CASE("month group: congruent start months share a key") {
    // April, August, December of 2009 at one provider
    auto april = course_at(7, 2009, 4);
    auto august = course_at(7, 2009, 8);
    auto december = course_at(7, 2009, 12);
    CHECK(derive_month_group(april) == derive_month_group(august));
    CHECK(derive_month_group(august) == derive_month_group(december));

    auto january = course_at(7, 2009, 1);
    auto may = course_at(7, 2009, 5);
    CHECK(derive_month_group(january) == derive_month_group(may));

    auto february = course_at(7, 2009, 2);
    CHECK_FALSE(derive_month_group(january) == derive_month_group(february));
}

TEST_CASE("month group: exactly four groups per provider over a long window") {
    std::set<int> groups;
    for (int m = 0; m < 48; ++m) {
        CourseRecord c;
        c.provider_id = 3;
        c.start_month = month_index_of(2007, 1) + m;
        groups.insert(derive_month_group(c).group_index);
    }
    CHECK(groups == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("season key: 4-month thirds of the calendar year") {
    CHECK(derive_season(course_at(1, 2010, 3)) == SeasonKey{2010, 0});
    CHECK(derive_season(course_at(1, 2010, 5)) == SeasonKey{2010, 1});
    CHECK(derive_season(course_at(1, 2011, 12)) == SeasonKey{2011, 2});
    CHECK(derive_season(course_at(1, 2010, 4)) == SeasonKey{2010, 0});
    CHECK(derive_season(course_at(1, 2010, 9)) == SeasonKey{2010, 2});
}

TEST_CASE("minimal valid input: two persons, one course") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "peerfx_core_min";
    fs::create_directories(dir);
    {
        std::ofstream p(dir / "persons.csv");
        p << "person_id,role,entry_ue_month,course_id,ue_duration_at_start,"
             "prior_program,same_firm_peer_flag,outcome_found_job_1y,"
             "search_duration_days,emp_days_60,log_total_earn_60,log_first_job_earn";
        for (int m = 1; m <= 60; ++m) p << ",employed_m" << m;
        p << ",age\n";
        for (int i = 1; i <= 2; ++i) {
            p << i << ",participant,24000,5,2,0,0,,100,500,9,2.5";
            for (int m = 1; m <= 60; ++m) p << ",0";
            p << "," << 30 + i << "\n";
        }
    }
    {
        std::ofstream c(dir / "courses.csv");
        c << "course_id,provider_id,start_month,program_type,target_occupation,"
             "competence_level,course_size,planned_duration_months,weekly_hours,"
             "hours_practice,hours_class\n";
        c << "5,1,24002,short,0,0,2,4,38,10,400\n";
    }
    const Dataset ds = load_dataset((dir / "persons.csv").string(),
                                    (dir / "courses.csv").string());
    CHECK(ds.persons.size() == 2);
    CHECK(ds.courses.size() == 1);
    CHECK(ds.covariate_names == std::vector<std::string>{"age"});
    fs::remove_all(dir);
}

TEST_CASE("referential break raises an integrity error") {
    Dataset ds = toy_dataset(2, 5);
    ds.persons[0].course_id = 999;  // no such course
    ds.rebuild_indices();
    CHECK_THROWS_AS(ds.validate(), IntegrityError);
}

TEST_CASE("schema violations name the offending cell") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "peerfx_core_schema";
    fs::create_directories(dir);
    {
        std::ofstream c(dir / "courses.csv");
        c << "course_id,provider_id,start_month,program_type,target_occupation,"
             "competence_level,course_size,planned_duration_months,weekly_hours,"
             "hours_practice,hours_class\n";
        c << "5,1,oops,short,0,0,2,4,38,10,400\n";
    }
    {
        std::ofstream p(dir / "persons.csv");
        p << "person_id\n1\n";
    }
    try {
        load_dataset((dir / "persons.csv").string(), (dir / "courses.csv").string());
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("start_month") != std::string::npos);
        CHECK(msg.find("oops") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("duplicate person ids rejected") {
    Dataset ds = toy_dataset(2, 5);
    ds.persons[1].person_id = ds.persons[0].person_id;
    ds.rebuild_indices();
    CHECK_THROWS_AS(ds.validate(), IntegrityError);
}

TEST_CASE("role and field-presence invariants") {
    Dataset ds = toy_dataset(2, 5);
    SECTION("participant with found-job outcome") {
        ds.persons[0].outcome_found_job_1y = 1;
        CHECK_THROWS_AS(ds.validate(), IntegrityError);
    }
    SECTION("nonparticipant with a course") {
        PersonRecord np;
        np.person_id = 999;
        np.role = Role::nonparticipant;
        np.outcome_found_job_1y = 1;
        np.course_id = 1;
        np.covariates = {40.0};
        np.employed_month.fill(-1);
        ds.persons.push_back(np);
        CHECK_THROWS_AS(ds.validate(), IntegrityError);
    }
    SECTION("employment panel must be 0/1") {
        ds.persons[0].employed_month[10] = 2;
        CHECK_THROWS_AS(ds.validate(), IntegrityError);
    }
    SECTION("emp_days_60 range") {
        ds.persons[0].emp_days_60 = 2000.0;
        CHECK_THROWS_AS(ds.validate(), IntegrityError);
    }
}

TEST_CASE("filter drops undersized courses") {
    Dataset ds = toy_dataset(6, 4);  // all courses below the floor of 5
    CHECK_THROWS_AS(filter_estimation_sample(ds, {}), EmptySampleError);
}

TEST_CASE("filter is the identity on an already-valid dataset") {
    Dataset ds = toy_dataset(8, 6);
    const Dataset out = filter_estimation_sample(ds, {});
    CHECK(out.persons.size() == ds.persons.size());
    CHECK(out.courses.size() == ds.courses.size());
}

TEST_CASE("filter is idempotent") {
    Dataset ds = toy_dataset(8, 6);
    // flag some participants so the prior-program rule bites
    for (std::size_t i = 0; i < ds.persons.size(); i += 7)
        ds.persons[i].prior_program = 1;
    FilterRules rules;
    rules.exclude_prior_program = true;
    const Dataset once = filter_estimation_sample(ds, rules);
    const Dataset twice = filter_estimation_sample(once, rules);
    CHECK(once.persons.size() == twice.persons.size());
    CHECK(once.courses.size() == twice.courses.size());
    for (const auto& c : twice.courses) {
        CHECK(c.course_size >= 5);
        CHECK(c.course_size ==
              static_cast<int>(twice.course_participants.at(c.course_id).size()));
    }
}

TEST_CASE("same-firm exclusion removes whole courses") {
    Dataset ds = toy_dataset(10, 6);
    // flag one course as same-firm
    const long flagged = 4;
    int flagged_size = 0;
    for (auto& p : ds.persons)
        if (p.course_id == flagged) {
            p.same_firm_peer_flag = 1;
            ++flagged_size;
        }
    FilterRules rules;
    rules.exclude_same_firm = true;
    const Dataset out = filter_estimation_sample(ds, rules);
    // direct enumeration: 9 courses remain, participant count down by that size
    CHECK(out.courses.size() == 9);
    CHECK(out.persons.size() == ds.persons.size() - flagged_size);
    CHECK(out.course_participants.count(flagged) == 0);
}

TEST_CASE("providers need two courses in some month group") {
    Dataset ds = toy_dataset(8, 6);
    // a second provider with a single course
    CourseRecord lonely = course_at(2, 2009, 2);
    lonely.course_id = 100;
    lonely.course_size = 6;
    ds.courses.push_back(lonely);
    long pid = 10000;
    for (int i = 0; i < 6; ++i) {
        PersonRecord p = participant(pid++, 100);
        p.covariates = {40.0};
        ds.persons.push_back(p);
    }
    ds.rebuild_indices();
    const Dataset out = filter_estimation_sample(ds, {});
    CHECK(out.course_participants.count(100) == 0);
    CHECK(out.courses.size() == 8);
}
