#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "peerfx/dataset_io.hpp"
#include "peerfx/dgp.hpp"
#include "peerfx/filters.hpp"
#include "peerfx/mathx.hpp"

using namespace peerfx;

namespace {

DGPConfig small_config(std::uint64_t seed) {
    DGPConfig d;
    d.seed = seed;
    d.n_providers = 10;
    d.months_span = 12;
    d.n_nonparticipants = 3000;
    return d;
}

std::string file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config validation rejects infeasible settings") {
    DGPConfig d = small_config(1);
    SECTION("size range below the floor") {
        d.course_size_min = 3;
        CHECK_THROWS_AS(generate(d), ConfigError);
    }
    SECTION("shares must sum to one") {
        d.program_type_shares = {0.5, 0.2, 0.2};
        CHECK_THROWS_AS(generate(d), ConfigError);
    }
    SECTION("sigma_eps positive") {
        d.sigma_eps = 0.0;
        CHECK_THROWS_AS(generate(d), ConfigError);
    }
    SECTION("window long enough for within-group comparisons") {
        d.months_span = 6;
        CHECK_THROWS_AS(generate(d), ConfigError);
    }
}

TEST_CASE("generated dataset passes all schema invariants") {
    const SynthResult synth = generate(small_config(11));
    CHECK_NOTHROW(synth.dataset.validate());
    // one course per provider per month
    CHECK(synth.dataset.courses.size() == 10u * 12u);
    // each participant's voucher window: entry + ued = course start
    for (const auto& p : synth.dataset.persons) {
        if (!p.is_participant()) continue;
        const auto& c = synth.dataset.course_of(p);
        CHECK(p.entry_ue_month + static_cast<int>(*p.ue_duration_at_start) ==
              c.start_month);
    }
}

TEST_CASE("regenerating with the same seed is bit-identical") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "peerfx_dgp_det";
    fs::create_directories(dir);
    const DGPConfig cfg = small_config(77);
    const SynthResult a = generate(cfg);
    const SynthResult b = generate(cfg);
    write_dataset(a.dataset, (dir / "pa.csv").string(), (dir / "ca.csv").string());
    write_dataset(b.dataset, (dir / "pb.csv").string(), (dir / "cb.csv").string());
    CHECK(file_bytes(dir / "pa.csv") == file_bytes(dir / "pb.csv"));
    CHECK(file_bytes(dir / "ca.csv") == file_bytes(dir / "cb.csv"));
    // a different seed must not reproduce the draw
    DGPConfig other = cfg;
    other.seed = 78;
    write_dataset(generate(other).dataset, (dir / "pc.csv").string(),
                  (dir / "cc.csv").string());
    CHECK(file_bytes(dir / "pa.csv") != file_bytes(dir / "pc.csv"));
    fs::remove_all(dir);
}

TEST_CASE("course sizes respect the configured range and mean") {
    DGPConfig d;
    d.seed = 5;
    d.n_providers = 40;
    d.months_span = 24;  // ~11500 participants
    d.n_nonparticipants = 100;
    d.mean_course_size = 12.0;
    const SynthResult synth = generate(d);
    double total = 0.0;
    for (const auto& c : synth.dataset.courses) {
        CHECK(c.course_size >= 5);
        CHECK(c.course_size <= 30);
        total += c.course_size;
    }
    const double mean = total / synth.dataset.courses.size();
    CHECK(mean > 11.0);
    CHECK(mean < 13.0);
    CHECK(synth.dataset.n_participants() >= 10000);
}

TEST_CASE("ground truth stores the drawn effects and latent scores") {
    const SynthResult synth = generate(small_config(3));
    CHECK(synth.truth.theta == 333.8);
    CHECK(synth.truth.gamma == 782.0);
    for (const auto& p : synth.dataset.persons) {
        const double e = synth.truth.latent_employability.at(p.person_id);
        CHECK(e > 0.0);
        CHECK(e < 1.0);
    }
    // every provider-month-group cell has a lambda draw
    for (const auto& c : synth.dataset.courses) {
        const auto key = std::pair<int, int>{c.provider_id,
                                             derive_month_group(c).group_index};
        CHECK(synth.truth.lambda_pc.count(key) == 1);
    }
}

TEST_CASE("nonparticipant job finding is Bernoulli in the latent score") {
    DGPConfig d = small_config(21);
    d.n_nonparticipants = 40000;
    const SynthResult synth = generate(d);
    // bucket the pool by latent score; observed frequencies track the score
    double lo_sum = 0, lo_n = 0, hi_sum = 0, hi_n = 0;
    for (const auto& p : synth.dataset.persons) {
        if (p.is_participant()) continue;
        const double e = synth.truth.latent_employability.at(p.person_id);
        if (e < 0.55) {
            lo_sum += *p.outcome_found_job_1y;
            lo_n += 1;
        } else if (e > 0.75) {
            hi_sum += *p.outcome_found_job_1y;
            hi_n += 1;
        }
    }
    REQUIRE(lo_n > 500);
    REQUIRE(hi_n > 500);
    CHECK(lo_sum / lo_n < 0.55);
    CHECK(hi_sum / hi_n > 0.75);
}

TEST_CASE("random assignment leaves own and peer scores uncorrelated within cells") {
    DGPConfig d = small_config(31);
    d.n_providers = 20;
    d.months_span = 16;
    d.sorting_strength = 0.0;
    const SynthResult synth = generate(d);
    const Dataset ds = filter_estimation_sample(synth.dataset, {});

    // compute own latent and leave-one-out latent peer mean, demean both by
    // provider-month-group cell, then correlate
    std::map<long, std::pair<double, int>> course_sum;
    for (const auto& p : ds.persons) {
        if (!p.is_participant()) continue;
        auto& agg = course_sum[*p.course_id];
        agg.first += synth.truth.latent_employability.at(p.person_id);
        agg.second += 1;
    }
    std::map<int, std::vector<std::pair<double, double>>> cells;
    for (const auto& p : ds.persons) {
        if (!p.is_participant()) continue;
        const auto& c = ds.course_of(p);
        const double e = synth.truth.latent_employability.at(p.person_id);
        const auto& agg = course_sum[*p.course_id];
        const double loo = (agg.first - e) / (agg.second - 1);
        cells[c.provider_id * 4 + derive_month_group(c).group_index].push_back({e, loo});
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (auto& [cell, v] : cells) {
        double mx = 0, my = 0;
        for (auto& [x, y] : v) {
            mx += x / v.size();
            my += y / v.size();
        }
        for (auto& [x, y] : v) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    // the within-cell exclusion-bias correlation is about -1/(cell size - 1);
    // beyond that, nothing should link own and peer scores
    CHECK(std::fabs(corr) < 0.05);
}

TEST_CASE("lock-in suppresses employment during the program") {
    const SynthResult synth = generate(small_config(41));
    for (const auto& p : synth.dataset.persons) {
        if (!p.is_participant()) continue;
        const auto& c = synth.dataset.course_of(p);
        const int lockin = static_cast<int>(c.planned_duration_months);
        for (int m = 0; m < std::min(lockin, kPanelMonths); ++m)
            CHECK(p.employed_month[m] == 0);
    }
}

TEST_CASE("zero-earnings convention: log outcomes are zero together") {
    const SynthResult synth = generate(small_config(51));
    int zeros = 0, nonzeros = 0;
    for (const auto& p : synth.dataset.persons) {
        if (!p.is_participant()) continue;
        if (p.log_total_earn_60 == 0.0) {
            ++zeros;
            CHECK(p.log_first_job_earn == 0.0);
            CHECK(p.search_duration_days == kOutcomeDaysCap);  // censored
        } else {
            ++nonzeros;
        }
    }
    CHECK(zeros > 0);
    CHECK(nonzeros > zeros);  // never-employed is the minority case
}
