#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "peerfx/dgp.hpp"
#include "peerfx/employability.hpp"
#include "peerfx/filters.hpp"
#include "peerfx/models.hpp"

using namespace peerfx;

namespace {

struct Prepared {
    SynthResult synth;
    Dataset ds;
    std::vector<double> score;
    PeerStatsTable peers;
};

Prepared prepare(DGPConfig cfg) {
    Prepared out;
    out.synth = generate(cfg);
    out.ds = filter_estimation_sample(out.synth.dataset, {});
    const ScoringResult sc = run_scoring(out.ds);
    out.score = sc.score;
    out.peers = compute_peer_stats(out.ds, out.score);
    return out;
}

DGPConfig medium_config(std::uint64_t seed, double theta = 333.8,
                        double sorting = 0.0) {
    DGPConfig d;
    d.seed = seed;
    d.n_providers = 24;
    d.months_span = 16;
    d.n_nonparticipants = 12000;
    d.theta = theta;
    d.sorting_strength = sorting;
    return d;
}

}  // namespace

TEST_CASE("linear-in-means recovers the generating peer effect") {
    const Prepared p = prepare(medium_config(100));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = linear_in_means(s, "emp_days_60");
    const RegressionResult& res = rep.details[0];
    const double coef = res.coef_of("peer_mean_employability");
    const double se = res.se_of("peer_mean_employability");
    CHECK(std::fabs(coef - p.synth.truth.theta) < 2.2 * se);
    // the per-SD report row scales by the residual SD of the peer mean
    CHECK(rep.rows[0].term == "peer_mean_employability");
    CHECK(rep.rows[0].effect ==
          Catch::Approx(coef * res.residual_sd.at("peer_mean_employability")));
    CHECK(rep.unit == "per_sd");
    CHECK(rep.n_clusters > 50);
}

TEST_CASE("outcome that is a pure function of absorbed factors yields no effect") {
    const Prepared p = prepare(medium_config(101));
    TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    // overwrite the outcome with a deterministic function of the cell and season
    Dataset doctored = p.ds;
    for (std::size_t i = 0; i < doctored.persons.size(); ++i) {
        auto& person = doctored.persons[i];
        if (!person.is_participant()) continue;
        const auto& c = doctored.course_of(person);
        person.emp_days_60 = 10.0 * (c.provider_id * 4 +
                                     derive_month_group(c).group_index) +
                             3.0 * derive_season(c).third;
    }
    const TypeSample s2 =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = linear_in_means(s2, "emp_days_60");
    CHECK(std::fabs(rep.details[0].coef_of("peer_mean_employability")) < 1e-5);
}

TEST_CASE("monthly dynamics: lock-in months are flagged or near zero") {
    const Prepared p = prepare(medium_config(102));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const DynamicProfile prof = monthly_dynamics(s);
    REQUIRE(prof.months.size() == 60);
    // month 1: every course is still running, employment is identically zero
    CHECK(prof.months[0].flagged_degenerate);
    // later months are estimated
    int estimated = 0;
    for (const auto& e : prof.months) estimated += !e.flagged_degenerate;
    CHECK(estimated > 50);
    // positive effects after lock-in, on the order of a percentage point
    double post = 0.0;
    int post_n = 0;
    for (int m = 9; m <= 30; ++m) {
        if (prof.months[m - 1].flagged_degenerate) continue;
        post += prof.months[m - 1].effect_pp;
        ++post_n;
    }
    REQUIRE(post_n > 0);
    CHECK(post / post_n > 0.2);
    CHECK(post / post_n < 4.0);
}

TEST_CASE("monthly dynamics: a constant month is flagged, not estimated") {
    const Prepared p = prepare(medium_config(103));
    Dataset doctored = p.ds;
    for (auto& person : doctored.persons)
        if (person.is_participant()) person.employed_month[40 - 1] = 1;
    const TypeSample s =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const DynamicProfile prof = monthly_dynamics(s);
    CHECK(prof.months[40 - 1].flagged_degenerate);
    CHECK(prof.months[40 - 1].effect_pp == 0.0);
}

TEST_CASE("heterogeneity split: output shape and empty-side error") {
    const Prepared p = prepare(medium_config(104));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = heterogeneity_split(
        s, "emp_days_60", HeterogeneitySplit::own_employability_median);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].term == "PE low employability");
    CHECK(rep.rows[1].term == "PE high employability");
    CHECK(rep.rows[2].term == "P-value difference");
    CHECK(rep.rows[2].p >= 0.0);
    CHECK(rep.rows[2].p <= 1.0);

    // both sides carry the same generating effect, so the gap is small
    // relative to its standard error most of the time; at minimum the two
    // sides must bracket sensible magnitudes
    CHECK(std::fabs(rep.rows[0].effect - rep.rows[1].effect) <
          5.0 * rep.rows[2].se);

    // the separate-samples fidelity variant produces the same row layout
    const EffectReport sep = heterogeneity_split(
        s, "emp_days_60", HeterogeneitySplit::own_employability_median, true);
    REQUIRE(sep.rows.size() == 3);
    CHECK(sep.details.size() == 2);
}

TEST_CASE("heterogeneity split by gender") {
    const Prepared p = prepare(medium_config(105));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep =
        heterogeneity_split(s, "emp_days_60", HeterogeneitySplit::female);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].term == "PE females");
    CHECK(rep.rows[1].term == "PE males");
}

TEST_CASE("heterogeneity split detects a doubled low-side effect") {
    // surgery on the generated outcome: add theta * loo once more for the
    // low-employability half, so theta_low = 2 * theta_high
    DGPConfig cfg;  // full default size for power
    cfg.seed = 106;
    const Prepared p = prepare(cfg);
    Dataset doctored = p.ds;
    std::vector<double> latents;
    for (std::size_t i = 0; i < doctored.persons.size(); ++i)
        if (doctored.persons[i].is_participant())
            latents.push_back(
                p.synth.truth.latent_employability.at(doctored.persons[i].person_id));
    const double median = quantile_of(latents, 0.5);
    for (std::size_t i = 0; i < doctored.persons.size(); ++i) {
        auto& person = doctored.persons[i];
        if (!person.is_participant()) continue;
        const double e = p.synth.truth.latent_employability.at(person.person_id);
        if (e >= median) continue;
        const PeerStats& ps = p.peers.for_row(i);
        person.emp_days_60 = std::min(kOutcomeDaysCap,
                                      person.emp_days_60 +
                                          p.synth.truth.theta * ps.loo_mean);
    }
    const TypeSample s =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = heterogeneity_split(
        s, "emp_days_60", HeterogeneitySplit::own_employability_median);
    CHECK(rep.rows[0].effect > rep.rows[1].effect);
    CHECK(rep.rows[2].p < 0.05);
}

TEST_CASE("fractions model: shape, signs, and the top-bottom difference") {
    const Prepared p = prepare(medium_config(107));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep =
        fractions_model(s, "emp_days_60", FractionBins::quintiles);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].term == "Fraction of peers in top quintile");
    CHECK(rep.rows[1].term == "Fraction of peers in bottom quintile");
    CHECK(rep.rows[2].term == "Difference top - bottom quintile");
    CHECK(rep.unit == "per_10pp");
    // under a linear-in-means generator the top and bottom coefficients are
    // roughly opposite in sign and the difference is about twice either one
    CHECK(rep.rows[0].effect > 0.0);
    CHECK(rep.rows[1].effect < 0.0);
    CHECK(rep.rows[2].effect ==
          Catch::Approx(rep.rows[0].effect - rep.rows[1].effect));

    // cross-diagnostic: the per-10pp top-bottom difference implied by
    // linearity is (top-bin mean - bottom-bin mean) * theta * 0.10
    std::vector<double> pooled;
    for (std::size_t i = 0; i < p.ds.persons.size(); ++i)
        if (p.ds.persons[i].is_participant()) pooled.push_back(p.score[i]);
    std::sort(pooled.begin(), pooled.end());
    const std::size_t q = pooled.size() / 5;
    double bottom_mean = 0.0, top_mean = 0.0;
    for (std::size_t i = 0; i < q; ++i) bottom_mean += pooled[i] / q;
    for (std::size_t i = pooled.size() - q; i < pooled.size(); ++i)
        top_mean += pooled[i] / q;
    const double implied = (top_mean - bottom_mean) * p.synth.truth.theta * 0.10;
    CHECK(rep.rows[2].effect == Catch::Approx(implied).margin(3.5 * rep.rows[2].se));

    const EffectReport thirds =
        fractions_model(s, "emp_days_60", FractionBins::thirds);
    CHECK(thirds.rows[2].term == "Difference high - low");
}

TEST_CASE("interacted model: row set, centering identity and joint test") {
    // a strong mean effect so the 6-restriction joint test has power at this n
    const Prepared p = prepare(medium_config(108, 1000.0));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep =
        interacted_model(s, "emp_days_60", InteractionLevel::full);
    // seven employability terms as in the fully interacted specification
    REQUIRE(rep.rows.size() == 7);
    const std::vector<std::string> expect = {
        "peer_mean", "peer_sd", "peer_mean_x_peer_sd", "own_emp",
        "own_x_peer_mean", "own_x_peer_sd", "own_x_peer_mean_x_peer_sd"};
    for (const auto& name : expect) {
        bool found = false;
        for (const auto& r : rep.rows) found |= r.term == name;
        CHECK(found);
    }
    CHECK(rep.joint_peer_p >= 0.0);
    CHECK(rep.joint_peer_p < 0.05);  // theta > 0 makes the joint test reject

    // no true dispersion effect in the generator: peer_sd stays small
    const EffectReport lean =
        interacted_model(s, "emp_days_60", InteractionLevel::mean_sd);
    REQUIRE(lean.rows.size() == 3);
    double sd_effect = 0.0, sd_se = 0.0, mean_effect = 0.0;
    for (const auto& r : lean.rows) {
        if (r.term == "peer_sd") {
            sd_effect = r.effect;
            sd_se = r.se;
        }
        if (r.term == "peer_mean") mean_effect = r.effect;
    }
    CHECK(std::fabs(sd_effect) < 3.5 * sd_se);
    CHECK(mean_effect > 0.0);

    // centering: the standardized variables have mean zero by construction,
    // so the main-effect coefficient is the marginal effect at the average
    const double m_loo = mean_of(s.loo);
    double shifted = 0.0;
    for (double v : s.loo) shifted += v - m_loo;
    CHECK(std::fabs(shifted) < 1e-9);
}

TEST_CASE("peer unemployment duration model") {
    const Prepared p = prepare(medium_config(109));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = peer_ued_model(s, "emp_days_60");
    bool has_ued = false;
    for (const auto& r : rep.rows)
        if (r.term == "peer_mean_ued") {
            has_ued = true;
            CHECK(r.unit == "per_month_of_peer_ued");
        }
    CHECK(has_ued);
}

TEST_CASE("peer UED attenuates the mean effect when both proxy one factor") {
    // construct the attenuation scenario directly: outcomes load on a latent
    // attachment that both employability and UED measure with noise
    const Prepared p = prepare(medium_config(110, 333.8));
    Dataset doctored = p.ds;
    // overwrite outcomes: load only on the peer mean of UED's negative,
    // which is collinear with peer employability up to noise
    auto rng = make_rng(55);
    for (std::size_t i = 0; i < doctored.persons.size(); ++i) {
        auto& person = doctored.persons[i];
        if (!person.is_participant()) continue;
        const PeerStats& ps = p.peers.for_row(i);
        person.emp_days_60 =
            std::min(kOutcomeDaysCap,
                     std::max(0.0, 900.0 + 300.0 * ps.loo_mean -
                                       12.0 * ps.loo_mean_ued +
                                       80.0 * draw_normal(rng)));
    }
    const TypeSample s =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const EffectReport without = linear_in_means(s, "emp_days_60");
    const EffectReport with = peer_ued_model(s, "emp_days_60");
    const double coef_without =
        without.details[0].coef_of("peer_mean_employability");
    const double coef_with = with.details[0].coef_of("peer_mean_employability");
    // UED is negatively correlated with employability, so omitting it loads
    // its (negative) effect onto the peer mean; controlling for it attenuates
    CHECK(coef_without > coef_with);
}

TEST_CASE("other peer characteristics: three rows, recovery under loading") {
    const Prepared p = prepare(medium_config(111));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    const EffectReport rep = other_peer_characteristics(s, "emp_days_60");
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].term == "peer_months_employed_2y");
    CHECK(rep.rows[1].term == "peer_months_employed_10y");
    CHECK(rep.rows[2].term == "peer_earnings_2y");
    CHECK(rep.details.size() == 3);

    // load the outcome on peer months-employed directly and re-estimate
    Dataset doctored = p.ds;
    auto rng = make_rng(66);
    for (std::size_t i = 0; i < doctored.persons.size(); ++i) {
        auto& person = doctored.persons[i];
        if (!person.is_participant()) continue;
        const PeerStats& ps = p.peers.for_row(i);
        person.emp_days_60 = std::min(
            kOutcomeDaysCap,
            std::max(0.0, 500.0 + 9.0 * ps.loo_mean_emp_2y + 60.0 * draw_normal(rng)));
    }
    const TypeSample s2 =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const EffectReport loaded = other_peer_characteristics(s2, "emp_days_60");
    const auto& row = loaded.rows[0];
    CHECK(std::fabs(row.effect - 9.0) < 2.5 * row.se);
}

TEST_CASE("adding a constant to the outcome changes no reported effect") {
    const Prepared p = prepare(medium_config(112));
    const TypeSample s =
        build_type_sample(p.ds, p.score, p.peers, ProgramType::short_training);
    Dataset doctored = p.ds;
    for (auto& person : doctored.persons)
        if (person.is_participant()) person.log_total_earn_60 += 4.0;
    const TypeSample s2 =
        build_type_sample(doctored, p.score, p.peers, ProgramType::short_training);
    const EffectReport a = linear_in_means(s, "log_total_earn_60");
    const EffectReport b = linear_in_means(s2, "log_total_earn_60");
    CHECK(a.rows[0].effect == Catch::Approx(b.rows[0].effect).margin(1e-8));
    CHECK(a.rows[1].effect == Catch::Approx(b.rows[1].effect).margin(1e-8));
}
