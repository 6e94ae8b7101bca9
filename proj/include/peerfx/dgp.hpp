#pragma once
// Synthetic population generator. Reproduces the institutional structure the
// identification design needs: providers offering one course per month,
// voucher windows of at most three months, provider-month-group and seasonal
// shocks, and a latent employability score that drives both the
// non-participant job-finding outcome and the participant outcome equation.
//
// The participant outcome index is
//     u = gamma * e_i + theta * loo_mean(e, peers) + pi'W + lambda_pc + delta_t
// with loo_mean computed exactly as the estimation side computes it, so the
// regression engine can recover theta without approximation error.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "peerfx/rng.hpp"
#include "peerfx/types.hpp"

namespace peerfx {

struct DGPConfig {
    std::uint64_t seed = 20240601;
    int n_providers = 60;
    int months_span = 42;  // one course per provider per month
    double mean_course_size = 12.0;
    double course_size_sd = 4.5;
    int course_size_min = 5;
    int course_size_max = 30;
    int n_nonparticipants = 60000;

    // outcome equation
    double theta = 333.8;  // per unit of leave-one-out peer mean
    double gamma = 782.0;  // per unit of own employability
    double alpha = 150.0;
    std::map<std::string, double> pi = {
        {"course_size", 1.2},        {"planned_duration_months", -6.0},
        {"weekly_hours", 2.0},       {"hours_practice", 0.15},
        {"hours_class", 0.02}};
    double sigma_eps = 250.0;
    double sigma_provider = 60.0;  // lambda_pc SD
    double sigma_season = 30.0;    // delta_t SD

    // 0 = random assignment within the voucher window; >0 tilts course choice
    // toward courses whose draw attracts similar employability, which the
    // validity tests are built to detect.
    double sorting_strength = 0.0;

    std::array<double, 3> lockin_months = {4.0, 9.0, 22.0};  // short, long, retraining
    std::array<double, 3> program_type_shares = {0.6, 0.2, 0.2};

    int start_year = 2007;
    double provider_mix_sd = 0.54;  // catchment heterogeneity in employability
    double occupation_tilt = 0.0;   // >0: employability sorts across occupations
    int n_occupations = 10;
    int n_competence_levels = 3;
    double same_firm_course_share = 0.05;

    void validate() const {
        if (sigma_eps <= 0.0) throw ConfigError("sigma_eps must be > 0");
        if (sigma_provider < 0.0 || sigma_season < 0.0 || sorting_strength < 0.0 ||
            provider_mix_sd < 0.0)
            throw ConfigError("scale parameters must be nonnegative");
        const double s = program_type_shares[0] + program_type_shares[1] +
                         program_type_shares[2];
        if (std::fabs(s - 1.0) > 1e-9)
            throw ConfigError("program_type_shares must sum to 1");
        if (course_size_min < 5 || course_size_max > 30 ||
            course_size_min > course_size_max)
            throw ConfigError("course_size_range must lie within [5,30]");
        if (mean_course_size < course_size_min || mean_course_size > course_size_max)
            throw ConfigError("mean_course_size outside course_size_range");
        if (n_providers < 1) throw ConfigError("need at least one provider");
        if (months_span < 8)
            throw ConfigError("months_span must be >= 8 so every month group has "
                              ">= 2 courses per provider");
        if (n_nonparticipants < 1) throw ConfigError("need a non-participant pool");
    }
};

struct GroundTruth {
    double theta = 0.0;
    double gamma = 0.0;
    double alpha = 0.0;
    std::map<std::string, double> pi;
    std::uint64_t seed = 0;
    // person_id -> latent employability in (0,1)
    std::map<long, double> latent_employability;
    std::map<std::pair<int, int>, double> lambda_pc;  // (provider, month group)
    std::map<std::pair<int, int>, double> delta_t;    // (year, third)
};

namespace dgp_detail {

// Latent-index coefficients of the scoring model. The logit of the
// job-finding outcome on these covariates is correctly specified by
// construction, so out-of-sample prediction error is pure sampling noise.
struct Coef {
    const char* name;
    double beta;
};

inline const std::vector<Coef>& index_coefs() {
    static const std::vector<Coef> c = {
        {"age", -0.016},
        {"female", -0.15},
        {"non_german", -0.25},
        {"highschool", 0.25},
        {"voc_training", 0.21},
        {"academic", 0.0},
        {"months_employed_2y", 0.036},
        {"months_employed_10y", 0.0061},
        {"earnings_2y", 0.008},
        {"last_daily_wage", 0.0061},
        {"tenure_months", 0.004},
        {"local_ue_rate", -0.071},
        {"health_index", 0.22},
    };
    return c;
}

constexpr double kIndexIntercept = 0.30;

inline std::vector<std::string> covariate_names() {
    std::vector<std::string> names;
    for (const auto& c : index_coefs()) names.push_back(c.name);
    return names;
}

inline double clampd(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// mix shifts the employment-history block; it is how providers end up with
// systematically different participant pools.
inline std::vector<double> draw_covariates(std::mt19937_64& rng, double mix) {
    const double a = draw_normal(rng) + mix;
    std::vector<double> z(13);
    z[0] = clampd(37.0 + 10.0 * draw_normal(rng), 18.0, 62.0);        // age
    z[1] = draw_bernoulli(rng, 0.45);                                 // female
    z[2] = draw_bernoulli(rng, 0.10);                                 // non_german
    z[3] = draw_bernoulli(rng, 0.17);                                 // highschool
    z[4] = draw_bernoulli(rng, 0.60);                                 // voc_training
    z[5] = draw_bernoulli(rng, 0.08);                                 // academic
    z[6] = clampd(13.0 + 6.5 * a + 3.0 * draw_normal(rng), 0.0, 24.0);    // months 2y
    z[7] = clampd(58.0 + 22.0 * a + 12.0 * draw_normal(rng), 0.0, 120.0); // months 10y
    z[8] = clampd(21.0 + 14.0 * a + 8.0 * draw_normal(rng), 0.0, 150.0);  // earnings 2y
    z[9] = clampd(65.0 + 25.0 * a + 12.0 * draw_normal(rng), 0.0, 400.0); // last wage
    z[10] = clampd(28.0 + 14.0 * a + 10.0 * draw_normal(rng), 0.0, 240.0);  // tenure
    z[11] = clampd(7.5 + 1.8 * draw_normal(rng), 3.0, 15.0);          // local ue rate
    z[12] = clampd(draw_normal(rng), -3.0, 3.0);                      // health
    return z;
}

inline double latent_index(const std::vector<double>& z) {
    double s = kIndexIntercept;
    const auto& coefs = index_coefs();
    for (std::size_t i = 0; i < coefs.size(); ++i) s += coefs[i].beta * z[i];
    return s;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kIndexCenter = 0.663;   // logit of the 0.66 employability mean
constexpr double kSearchBase = 1450.0;
constexpr double kLogTotalBase = 7.0;
constexpr double kLogFirstBase = 1.4;
constexpr double kLogTotalScale = 250.0;
constexpr double kLogFirstScale = 500.0;
constexpr double kPanelSlope = 0.003;
constexpr double kPanelCenter = 740.0;

}  // namespace dgp_detail

struct SynthResult {
    Dataset dataset;
    GroundTruth truth;
};

inline SynthResult generate(const DGPConfig& cfg) {
    using namespace dgp_detail;
    cfg.validate();
    auto rng = make_rng(cfg.seed);

    SynthResult out;
    Dataset& ds = out.dataset;
    GroundTruth& gt = out.truth;
    ds.covariate_names = covariate_names();
    gt.theta = cfg.theta;
    gt.gamma = cfg.gamma;
    gt.alpha = cfg.alpha;
    gt.pi = cfg.pi;
    gt.seed = cfg.seed;

    // providers: block allocation of program types by share
    const int n_short = static_cast<int>(std::lround(cfg.program_type_shares[0] *
                                                     cfg.n_providers));
    const int n_long = static_cast<int>(std::lround(cfg.program_type_shares[1] *
                                                    cfg.n_providers));
    struct Provider {
        ProgramType type;
        int main_occupation;
        int main_competence;
        double mix;
    };
    std::vector<Provider> providers(cfg.n_providers);
    for (int p = 0; p < cfg.n_providers; ++p) {
        Provider& pr = providers[p];
        pr.type = p < n_short ? ProgramType::short_training
                  : p < n_short + n_long ? ProgramType::long_training
                                         : ProgramType::retraining;
        pr.main_occupation = draw_int(rng, 0, cfg.n_occupations - 1);
        pr.main_competence = draw_int(rng, 0, cfg.n_competence_levels - 1);
        double occ_load = 0.0;
        if (cfg.n_occupations > 1)
            occ_load = (pr.main_occupation - (cfg.n_occupations - 1) / 2.0) /
                       ((cfg.n_occupations - 1) / 2.0);
        pr.mix = cfg.provider_mix_sd * draw_normal(rng) + cfg.occupation_tilt * occ_load;
    }

    // seasonal shocks over the whole window
    const int first_month = month_index_of(cfg.start_year, 1);
    for (int m = first_month; m < first_month + cfg.months_span; ++m) {
        const std::pair<int, int> key{year_of(m), (month_of_year(m) - 1) / 4};
        if (!gt.delta_t.count(key))
            gt.delta_t[key] = cfg.sigma_season * draw_normal(rng);
    }

    // courses: one per provider per month
    struct CourseDraw {
        std::size_t row;
        double tilt;
    };
    std::vector<std::vector<CourseDraw>> provider_course_rows(cfg.n_providers);
    long next_course_id = 1;
    for (int p = 0; p < cfg.n_providers; ++p) {
        const Provider& pr = providers[p];
        const int type_idx = static_cast<int>(pr.type);
        for (int m = 0; m < cfg.months_span; ++m) {
            CourseRecord c;
            c.course_id = next_course_id++;
            c.provider_id = p;
            c.start_month = first_month + m;
            c.program_type = pr.type;
            c.target_occupation = draw_bernoulli(rng, 0.85)
                                      ? pr.main_occupation
                                      : draw_int(rng, 0, cfg.n_occupations - 1);
            c.competence_level = draw_bernoulli(rng, 0.80)
                                     ? pr.main_competence
                                     : draw_int(rng, 0, cfg.n_competence_levels - 1);
            c.course_size = static_cast<int>(clampd(
                std::lround(cfg.mean_course_size + cfg.course_size_sd * draw_normal(rng)),
                cfg.course_size_min, cfg.course_size_max));
            const double mean_dur = cfg.lockin_months[type_idx];
            c.planned_duration_months =
                clampd(std::round(mean_dur + 0.15 * mean_dur * draw_normal(rng)), 1.0, 40.0);
            c.weekly_hours = clampd(38.5 + 3.0 * draw_normal(rng), 20.0, 50.0);
            c.hours_practice = clampd(15.0 + 12.0 * draw_normal(rng), 0.0, 80.0);
            c.hours_class = clampd(c.planned_duration_months * 110.0 +
                                       60.0 * draw_normal(rng),
                                   50.0, 4200.0);
            const std::pair<int, int> cell{p, derive_month_group(c).group_index};
            if (!gt.lambda_pc.count(cell))
                gt.lambda_pc[cell] = cfg.sigma_provider * draw_normal(rng);
            provider_course_rows[p].push_back(
                {ds.courses.size(), draw_normal(rng)});
            ds.courses.push_back(c);
        }
    }

    std::vector<bool> same_firm_course(ds.courses.size(), false);
    for (std::size_t i = 0; i < ds.courses.size(); ++i)
        same_firm_course[i] = draw_bernoulli(rng, cfg.same_firm_course_share);

    // participants: generate each provider's pool, then fill course slots.
    // With sorting_strength = 0 the fill is attribute-blind, i.e. a random
    // partition of exchangeable draws.
    long next_person_id = 1;
    std::vector<std::size_t> person_course_row;  // parallel to participants
    for (int p = 0; p < cfg.n_providers; ++p) {
        const Provider& pr = providers[p];
        const auto& rows = provider_course_rows[p];
        int total = 0;
        for (const auto& cd : rows) total += ds.courses[cd.row].course_size;

        struct Draft {
            std::vector<double> z;
            double e;
        };
        std::vector<Draft> drafts(total);
        for (auto& d : drafts) {
            d.z = draw_covariates(rng, pr.mix);
            d.e = logistic(latent_index(d.z));
        }

        std::vector<int> remaining(rows.size());
        for (std::size_t c = 0; c < rows.size(); ++c)
            remaining[c] = ds.courses[rows[c].row].course_size;

        std::vector<double> weights(rows.size());
        for (const auto& d : drafts) {
            double wsum = 0.0;
            for (std::size_t c = 0; c < rows.size(); ++c) {
                if (remaining[c] == 0) {
                    weights[c] = 0.0;
                    continue;
                }
                weights[c] = cfg.sorting_strength == 0.0
                                 ? 1.0
                                 : std::exp(cfg.sorting_strength * (d.e - 0.66) *
                                            rows[c].tilt);
                wsum += weights[c];
            }
            double u = draw_uniform(rng) * wsum;
            std::size_t pick = 0;
            for (std::size_t c = 0; c < rows.size(); ++c) {
                if (weights[c] <= 0.0) continue;
                u -= weights[c];
                pick = c;
                if (u <= 0.0) break;
            }
            --remaining[pick];
            const std::size_t course_row = rows[pick].row;
            const CourseRecord& course = ds.courses[course_row];

            PersonRecord person;
            person.person_id = next_person_id++;
            person.role = Role::participant;
            person.course_id = course.course_id;
            person.covariates = d.z;
            const double zc = latent_index(d.z) - kIndexCenter;
            const double ued = clampd(
                std::lround(std::exp(1.9 - 0.55 * zc + 0.85 * draw_normal(rng))), 0.0, 60.0);
            person.ue_duration_at_start = ued;
            person.entry_ue_month = course.start_month - static_cast<int>(ued);
            person.prior_program = draw_bernoulli(rng, logistic(-1.1 - 0.5 * zc)) ? 1 : 0;
            person.same_firm_peer_flag = same_firm_course[course_row] ? 1 : 0;
            person.employed_month.fill(0);
            gt.latent_employability[person.person_id] = d.e;
            person_course_row.push_back(course_row);
            ds.persons.push_back(std::move(person));
        }
    }

    // leave-one-out peer means of the latent score, estimation-side formula
    std::vector<std::pair<double, int>> course_sums(ds.courses.size(), {0.0, 0});
    for (std::size_t i = 0; i < ds.persons.size(); ++i) {
        auto& agg = course_sums[person_course_row[i]];
        agg.first += gt.latent_employability[ds.persons[i].person_id];
        agg.second += 1;
    }

    // outcomes
    for (std::size_t i = 0; i < ds.persons.size(); ++i) {
        PersonRecord& person = ds.persons[i];
        const CourseRecord& course = ds.courses[person_course_row[i]];
        const double e = gt.latent_employability[person.person_id];
        const auto& agg = course_sums[person_course_row[i]];
        const double loo = (agg.first - e) / static_cast<double>(agg.second - 1);

        double piw = 0.0;
        const auto pival = [&](const char* n) {
            const auto it = cfg.pi.find(n);
            return it == cfg.pi.end() ? 0.0 : it->second;
        };
        piw += pival("course_size") * course.course_size;
        piw += pival("planned_duration_months") * course.planned_duration_months;
        piw += pival("weekly_hours") * course.weekly_hours;
        piw += pival("hours_practice") * course.hours_practice;
        piw += pival("hours_class") * course.hours_class;

        const std::pair<int, int> cell{course.provider_id,
                                       derive_month_group(course).group_index};
        const auto season = derive_season(course);
        const double idx = cfg.gamma * e + cfg.theta * loo + piw +
                           gt.lambda_pc.at(cell) +
                           gt.delta_t.at({season.year, season.third});

        person.emp_days_60 = clampd(cfg.alpha + idx + cfg.sigma_eps * draw_normal(rng),
                                    0.0, kOutcomeDaysCap);

        const bool never_found = draw_bernoulli(rng, logistic(-2.5 - 3.0 * (e - 0.66)));
        if (never_found) {
            person.search_duration_days = kOutcomeDaysCap;  // censored
            person.log_total_earn_60 = 0.0;  // zero-earnings convention
            person.log_first_job_earn = 0.0;
            person.employed_month.fill(0);
        } else {
            person.search_duration_days = clampd(
                kSearchBase - idx + cfg.sigma_eps * draw_normal(rng), 0.0, kOutcomeDaysCap);
            person.log_total_earn_60 =
                kLogTotalBase + (idx + cfg.sigma_eps * draw_normal(rng)) / kLogTotalScale;
            person.log_first_job_earn =
                kLogFirstBase + (idx + cfg.sigma_eps * draw_normal(rng)) / kLogFirstScale;
            const int lockin = static_cast<int>(course.planned_duration_months);
            for (int m = 0; m < kPanelMonths; ++m) {
                if (m + 1 <= lockin) {
                    person.employed_month[m] = 0;
                    continue;
                }
                const double ramp_pos =
                    std::min(1.0, static_cast<double>(m + 1 - lockin) / 24.0);
                const double base = std::log(0.2 / 0.8) +
                                    ramp_pos * (std::log(0.7 / 0.3) - std::log(0.2 / 0.8));
                const double pm = logistic(base + kPanelSlope * (idx - kPanelCenter));
                person.employed_month[m] = draw_bernoulli(rng, pm) ? 1 : 0;
            }
        }
    }

    // non-participant pool; job finding is Bernoulli in the latent score
    for (int i = 0; i < cfg.n_nonparticipants; ++i) {
        PersonRecord person;
        person.person_id = next_person_id++;
        person.role = Role::nonparticipant;
        person.covariates = draw_covariates(rng, 0.0);
        const double e = logistic(latent_index(person.covariates));
        gt.latent_employability[person.person_id] = e;
        person.entry_ue_month =
            first_month - 12 + draw_int(rng, 0, cfg.months_span + 11);
        person.outcome_found_job_1y = draw_bernoulli(rng, e) ? 1 : 0;
        person.employed_month.fill(-1);
        ds.persons.push_back(std::move(person));
    }

    ds.rebuild_indices();
    ds.validate();
    return out;
}

}  // namespace peerfx
