#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "xcfo/harness.hpp"

using namespace xcfo;
using namespace testutil;

namespace {

SweepSpec small_spec() {
    SweepSpec spec;
    spec.base_config.num_bs = 3;
    spec.base_config.num_frames = 4;
    assign_zc_preambles(spec.base_config, default_root_pairs(3), {1.0, 1.0, 1.0});
    spec.sinr_points_db = {0.0, -10.0};
    spec.trials = 6;
    return spec;
}

}  // namespace

TEST_CASE("run_trial: deterministic, empty method list, per-method outcomes") {
    const auto spec = small_spec();
    auto cfg = spec.base_config;
    cfg.target_sinr_db = -5.0;
    const auto setup = make_trial_setup(cfg, 3);
    const auto a = run_trial(setup, 2, all_methods());
    const auto b = run_trial(setup, 2, all_methods());
    REQUIRE(a.outcomes.size() == all_methods().size());
    for (std::size_t j = 0; j < a.outcomes.size(); ++j) {
        CHECK(a.outcomes[j].method == all_methods()[j]);
        CHECK(a.outcomes[j].omega_err == b.outcomes[j].omega_err);
        CHECK(a.outcomes[j].nmse == b.outcomes[j].nmse);
        CHECK(a.outcomes[j].ok);
        CHECK(a.outcomes[j].seconds == 0.0);
    }
    CHECK(run_trial(setup, 2, {}).outcomes.empty());
}

TEST_CASE("run_trial: noiseless single target recovers exactly") {
    ScenarioConfig cfg = default_scenario();
    cfg.num_bs = 1;
    cfg.num_frames = 4;
    assign_zc_preambles(cfg, default_root_pairs(1), {1.0});
    cfg.noise_var = 0.0;
    cfg.target_sinr_db = std::numeric_limits<double>::infinity();
    const auto setup = make_trial_setup(cfg, 1);
    const auto r = run_trial(setup, 0, {"joint_algorithm"});
    REQUIRE(r.outcomes[0].ok);
    CHECK(std::abs(r.outcomes[0].omega_err) < 1e-8);
    CHECK(r.outcomes[0].nmse < 1e-16);
}

TEST_CASE("aggregate_point: means, suspect flag and bound") {
    TrialResult t1, t2, t3;
    MethodOutcome good;
    good.method = "separate";
    good.ok = true;
    good.gamma0 = 10.0;
    good.gamma1 = 20.0;
    good.r_mag = 1.0;
    auto o1 = good, o2 = good, o3 = good;
    o1.omega_err = 0.001;
    o1.nmse = 0.1;
    o2.omega_err = -0.003;
    o2.nmse = 0.3;
    o3.ok = false;
    t1.outcomes = {o1};
    t2.outcomes = {o2};
    t3.outcomes = {o3};
    const auto rows = aggregate_point(-5.0, {"separate"}, {t1, t2, t3}, 254, 1e6);
    REQUIRE(rows.size() == 1);
    const auto& r = rows[0];
    CHECK(r.trials == 3);
    CHECK(r.trials_ok == 2);
    CHECK(r.suspect);
    CHECK(r.cfo_mae == doctest::Approx(0.002));
    CHECK(r.cfo_mse == doctest::Approx(5e-6));
    CHECK(r.chan_nmse_db == doctest::Approx(10.0 * std::log10(0.2)));
    CHECK(r.crlb == doctest::Approx(crlb_cfo(10.0, 20.0, 1.0, 254).bound));
    CHECK(*r.cfo_mae_hz == doctest::Approx(0.002 * 1e6 / (2.0 * kPi)));

    const auto none = aggregate_point(0.0, {"separate"}, {t3}, 254, std::nullopt);
    CHECK(none[0].trials_ok == 0);
    CHECK(std::isnan(none[0].cfo_mae));
}

TEST_CASE("run_sweep: sorted rows, trials = 1, bookkeeping") {
    auto spec = small_spec();
    spec.trials = 1;
    spec.methods = {"separate", "cross_preamble"};
    const auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].sinr_db == -10.0);
    CHECK(rows[0].method == "cross_preamble");
    CHECK(rows[1].method == "separate");
    CHECK(rows[2].sinr_db == 0.0);
    for (const auto& r : rows) {
        CHECK(r.trials == 1);
        CHECK(r.trials_ok >= 0);
        CHECK(r.trials_ok <= 1);
    }
}

TEST_CASE("run_sweep: byte-identical CSV for 1 and 3 workers") {
    auto spec = small_spec();
    const std::string serial = format_csv(run_sweep(spec));
    spec.workers = 3;
    CHECK(format_csv(run_sweep(spec)) == serial);
}

TEST_CASE("run_sweep: interrupt stops after the point in progress") {
    auto spec = small_spec();
    spec.methods = {"separate"};
    sweep_interrupt_flag().store(true);
    const auto rows = run_sweep(spec);
    sweep_interrupt_flag().store(false);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].sinr_db == -10.0);
}

TEST_CASE("run_sweep: invalid specs are config errors") {
    auto spec = small_spec();
    spec.methods = {"nope"};
    CHECK_THROWS_AS(run_sweep(spec), ConfigError);
    spec = small_spec();
    spec.sinr_points_db.clear();
    CHECK_THROWS_AS(run_sweep(spec), ConfigError);
    spec = small_spec();
    spec.workers = 0;
    CHECK_THROWS_AS(run_sweep(spec), ConfigError);
}

TEST_CASE("CSV: header-only for no rows, exact round trip, shortest floats") {
    CHECK(format_csv({}) == csv_header(false) + "\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");

    auto spec = small_spec();
    spec.base_config.sample_rate = 30.72e6;
    const auto rows = run_sweep(spec);
    const std::string text = format_csv(rows);
    const auto back = parse_csv(text);
    CHECK(back == rows);
    CHECK(format_csv(back) == text);

    MetricsRow odd;
    odd.method = "separate";
    odd.cfo_mae = std::numeric_limits<double>::quiet_NaN();
    const auto nan_back = parse_csv(format_csv({odd}));
    CHECK(std::isnan(nan_back[0].cfo_mae));
    CHECK_THROWS_AS(parse_csv("bogus\n"), IoError);
    CHECK_THROWS_AS(emit_csv(rows, "/nonexistent/dir/out.csv"), IoError);
}

TEST_CASE("CSV: rows are sorted by SINR then method") {
    MetricsRow a, b, c;
    a.sinr_db = 0.0;
    a.method = "separate";
    b.sinr_db = -5.0;
    b.method = "weighted_avg";
    c.sinr_db = 0.0;
    c.method = "cp_blind";
    const auto back = parse_csv(format_csv({a, b, c}));
    CHECK(back[0].method == "weighted_avg");
    CHECK(back[1].method == "cp_blind");
    CHECK(back[2].method == "separate");
}

TEST_CASE("scenario_crlb: one report per BS, consistent with crlb_cfo") {
    const auto reports = scenario_crlb(default_scenario(), 1);
    REQUIRE(reports.size() == 12);
    for (const auto& r : reports) {
        CHECK(r.bound == doctest::Approx(crlb_cfo(r.gamma0, r.gamma1, r.r_mag, 254).bound));
        CHECK(r.r_mag <= 1.0);
    }
    const std::string csv = format_crlb_csv(reports);
    CHECK(csv.rfind("k,gamma0,gamma1,r_mag,bound\n", 0) == 0);
}
