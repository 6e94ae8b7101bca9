#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "peerfx/dgp.hpp"
#include "peerfx/employability.hpp"
#include "peerfx/filters.hpp"
#include "peerfx/validity.hpp"

using namespace peerfx;

namespace {

struct Prepared {
    SynthResult synth;
    Dataset ds;
    std::vector<double> score;
    PeerStatsTable peers;
    TypeSample sample;
};

Prepared prepare(DGPConfig cfg, ProgramType type = ProgramType::short_training) {
    Prepared out;
    out.synth = generate(cfg);
    out.ds = filter_estimation_sample(out.synth.dataset, {});
    const ScoringResult sc = run_scoring(out.ds);
    out.score = sc.score;
    out.peers = compute_peer_stats(out.ds, out.score);
    out.sample = build_type_sample(out.ds, out.score, out.peers, type);
    return out;
}

DGPConfig diag_config(std::uint64_t seed, double sorting = 0.0) {
    DGPConfig d;
    d.seed = seed;
    d.n_providers = 16;
    d.months_span = 12;
    d.n_nonparticipants = 6000;
    d.sorting_strength = sorting;
    return d;
}

}  // namespace

TEST_CASE("resampling: permutation preserves the cell score multisets") {
    const Prepared p = prepare(diag_config(500));
    const ResamplingReport rep = resampling_test(p.sample, 40, 7);
    // the grand sum of leave-one-out means equals the grand sum of scores for
    // any reallocation, so the simulated grand mean matches exactly
    CHECK(rep.simulated_grand_mean ==
          Catch::Approx(rep.observed_grand_mean).margin(1e-12));
    CHECK(rep.n_sims == 40);
    CHECK(rep.observed_sd_raw > 0.0);
    CHECK(rep.observed_sd_net > 0.0);
    CHECK(rep.simulated_mean_sd_raw > 0.0);
    CHECK(rep.classes_total > 0);
}

TEST_CASE("resampling: identity permutation reproduces the observed SDs") {
    // one course per size class: nothing can move, so every simulation equals
    // the observed assignment exactly
    Dataset ds;
    ds.covariate_names = {"age", "months_employed_2y", "months_employed_10y",
                          "earnings_2y"};
    long pid = 1;
    for (int c = 0; c < 8; ++c) {
        CourseRecord course;
        course.course_id = c + 1;
        course.provider_id = 1;
        course.start_month = 24000 + c;
        course.program_type = ProgramType::short_training;
        course.course_size = 5 + c;  // all sizes distinct
        ds.courses.push_back(course);
        for (int i = 0; i < course.course_size; ++i) {
            PersonRecord person;
            person.person_id = pid++;
            person.role = Role::participant;
            person.course_id = course.course_id;
            person.entry_ue_month = course.start_month - 2;
            person.ue_duration_at_start = 2.0;
            person.emp_days_60 = 500;
            person.employed_month.fill(0);
            person.covariates = {30.0 + i, 10.0, 50.0, 20.0};
            ds.persons.push_back(person);
        }
    }
    ds.rebuild_indices();
    std::vector<double> score(ds.persons.size());
    auto rng = make_rng(3);
    for (auto& v : score) v = 0.3 + 0.4 * draw_uniform(rng);
    const PeerStatsTable peers = compute_peer_stats(ds, score);
    const TypeSample s =
        build_type_sample(ds, score, peers, ProgramType::short_training);
    const ResamplingReport rep = resampling_test(s, 10, 1);
    CHECK(rep.classes_without_permutation == rep.classes_total);
    CHECK(rep.simulated_mean_sd_raw == Catch::Approx(rep.observed_sd_raw).margin(1e-14));
    CHECK(rep.simulated_mean_sd_net == Catch::Approx(rep.observed_sd_net).margin(1e-14));
    CHECK(rep.simulated_sd_of_sd_net == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("resampling: random assignment is calibrated, sorting is flagged") {
    const Prepared random = prepare(diag_config(501, 0.0));
    const ResamplingReport r0 = resampling_test(random.sample, 100, 11);
    CHECK(std::fabs(r0.z_net) < 3.0);

    const Prepared sorted = prepare(diag_config(502, 8.0));
    const ResamplingReport r1 = resampling_test(sorted.sample, 100, 11);
    CHECK(r1.z_net > 3.0);
}

TEST_CASE("resampling rejects a degenerate simulation count") {
    const Prepared p = prepare(diag_config(503));
    CHECK_THROWS_AS(resampling_test(p.sample, 1, 1), ConfigError);
}

TEST_CASE("guryan test: calibrated under random assignment") {
    // Monte Carlo mean of the corrected coefficient is zero within noise
    const int n_reps = 12;
    double mean_with = 0.0, mean_without = 0.0;
    std::vector<double> coefs;
    for (int r = 0; r < n_reps; ++r) {
        const Prepared p = prepare(diag_config(600 + r));
        const ExogeneityReport rep = guryan_test(p.sample);
        coefs.push_back(rep.coef_peer_mean);
        mean_with += rep.coef_peer_mean / n_reps;
        mean_without += rep.coef_without_control / n_reps;
    }
    const double mc_se = sd_of(coefs) / std::sqrt(static_cast<double>(n_reps));
    CHECK(std::fabs(mean_with) < 2.5 * mc_se);
    // uncorrected: mechanical exclusion bias pushes the coefficient negative
    CHECK(mean_without < -0.1);
    CHECK(mean_without < mean_with);
}

TEST_CASE("guryan test: both provider-mean variants run") {
    const Prepared p = prepare(diag_config(610));
    const ExogeneityReport loo = guryan_test(p.sample, 1e-8, false);
    const ExogeneityReport incl = guryan_test(p.sample, 1e-8, true);
    CHECK(std::isfinite(loo.coef_peer_mean));
    CHECK(std::isfinite(incl.coef_peer_mean));
    // with i included the provider mean is cell-constant and gets absorbed,
    // so the two corrections genuinely differ
    CHECK(loo.coef_provider_mean != Catch::Approx(incl.coef_provider_mean));
}

TEST_CASE("sorting diagnostics: tilted occupations flag, start months pass") {
    DGPConfig tilted = diag_config(700);
    tilted.occupation_tilt = 0.5;
    tilted.n_providers = 30;
    const SynthResult synth = generate(tilted);
    const Dataset ds = filter_estimation_sample(synth.dataset, {});
    const ScoringResult sc = run_scoring(ds);
    const SortingDiagnostics diag = sorting_diagnostics(ds, sc.score);
    REQUIRE(diag.tables.size() == 3);
    const SortingTable* start_month = nullptr;
    const SortingTable* occupation = nullptr;
    for (const auto& t : diag.tables) {
        if (t.grouping == "start_month") start_month = &t;
        if (t.grouping == "target_occupation") occupation = &t;
    }
    REQUIRE(start_month != nullptr);
    REQUIRE(occupation != nullptr);
    REQUIRE(occupation->screen.defined);
    REQUIRE(start_month->screen.defined);
    CHECK(occupation->screen.p < 0.01);   // employability sorts by occupation
    CHECK(start_month->screen.p > 0.01);  // but not by course start month
}

TEST_CASE("sorting diagnostics: single-group input yields an undefined screen") {
    Dataset ds;
    ds.covariate_names = {"age", "months_employed_2y", "months_employed_10y",
                          "earnings_2y"};
    CourseRecord course;
    course.course_id = 1;
    course.provider_id = 1;
    course.start_month = 24000;
    course.course_size = 6;
    course.target_occupation = 4;
    ds.courses.push_back(course);
    for (int i = 0; i < 6; ++i) {
        PersonRecord person;
        person.person_id = i + 1;
        person.role = Role::participant;
        person.course_id = 1;
        person.entry_ue_month = 24000 - 3;
        person.ue_duration_at_start = 3.0;
        person.emp_days_60 = 100;
        person.employed_month.fill(0);
        person.covariates = {30.0, 10.0, 50.0, 20.0};
        ds.persons.push_back(person);
    }
    ds.rebuild_indices();
    const std::vector<double> score(ds.persons.size(), 0.6);
    const SortingDiagnostics diag = sorting_diagnostics(ds, score);
    for (const auto& t : diag.tables) {
        CHECK(t.rows.size() == 1);
        CHECK_FALSE(t.screen.defined);
    }
}

TEST_CASE("variance decomposition: residualization shrinks, identity keeps") {
    const Prepared p = prepare(diag_config(800));
    const VarianceDecomposition net = variance_decomposition(p.sample);
    REQUIRE(net.rows.size() == 3);
    for (const auto& r : net.rows) {
        CHECK(r.sd_net <= r.sd_raw + 1e-12);
        CHECK(r.sd_raw > 0.0);
    }
    // peer-mean variation shrinks markedly once the cells are netted out
    CHECK(net.rows[1].sd_net < 0.8 * net.rows[1].sd_raw);

    const VarianceDecomposition identity =
        variance_decomposition(p.sample, 1e-8, false);
    for (std::size_t i = 0; i < identity.rows.size(); ++i)
        CHECK(identity.rows[i].sd_net ==
              Catch::Approx(identity.rows[i].sd_raw).margin(1e-12));
}
