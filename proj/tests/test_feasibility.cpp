#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "enspace/feasibility.hpp"
#include "enspace/run.hpp"
#include "presets.hpp"

using namespace enspace;
using enspace::testing::preset;

TEST(IncomingRange, ConstantLoad) {
    const auto b = incoming_range_from_load(1200, 1200, 0, 0, 0.01);
    EXPECT_EQ(b.P_lo, -1200.0);
    EXPECT_EQ(b.P_hi, -1200.0);
    // The voltage rate may have either sign, so the 2/tau' P term enters as +-; the box holds +240000.
    EXPECT_NEAR(b.Qd_hi, 240000.0, 1e-6);
    EXPECT_NEAR(b.Qd_lo, -240000.0, 1e-6);
}

TEST(IncomingRange, IntervalLoad) {
    const auto b = incoming_range_from_load(800, 1600, -4000, 4000, 0.01);
    EXPECT_EQ(b.P_lo, -1600.0);
    EXPECT_EQ(b.P_hi, -800.0);
    EXPECT_NEAR(b.Qd_hi, 4000.0 + 320000.0, 1e-6);
    EXPECT_NEAR(b.Qd_lo, -4000.0 - 320000.0, 1e-6);
    // Contains the one-sided interval [156000, 324000].
    EXPECT_TRUE(check_containment({-1600, -800, 156000, 324000}, b).feasible);
}

TEST(IncomingRange, DegenerateAndInvalidInputs) {
    const auto b = incoming_range_from_load(500, 500, 10, 10, 1.0);
    EXPECT_EQ(b.P_lo, b.P_hi);
    EXPECT_THROW((void)incoming_range_from_load(2, 1, 0, 0, 1), ContractViolation);
    EXPECT_THROW((void)incoming_range_from_load(1, 2, 1, 0, 1), ContractViolation);
    EXPECT_THROW((void)incoming_range_from_load(1, 2, 0, 0, 0), ContractViolation);
}

TEST(TauPrime, Examples) {
    const RlcParams p;
    EXPECT_NEAR(tau_prime(p, 0.45), 1.12, 1e-12);
    EXPECT_NEAR(tau_prime(p, 100), 0.01, 1e-15);
    // Saturates at 10 L / R as the gain vanishes; follows 1 / K as it grows.
    EXPECT_NEAR(tau_prime(p, 1e-12), 10 * p.L / p.R, 1e-12);
    EXPECT_EQ(tau_prime(p, 1e12), 1e-12);
    EXPECT_THROW((void)tau_prime(p, 0.0), ContractViolation);
}

TEST(IncomingRange, MonteCarloSoundness) {
    // Per window of the time-varying profile: sample (P, Pdot) inside the window's declared range and
    // (v, vdot) with |vdot| <= v / tau'; the CPL incoming rate must land in the box.
    const auto load = preset("tv-fblc").load;
    const double tp = 0.01;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int k = 0; k < 4; ++k) {
        double Pmin, Pmax, Pdmin, Pdmax;
        load.range_over(k, k + 1, Pmin, Pmax, Pdmin, Pdmax);
        const auto box = incoming_range_from_load(Pmin, Pmax, Pdmin, Pdmax, tp);
        int escaped_double_rate = 0;
        for (int n = 0; n < 10000; ++n) {
            const double P = Pmin + (Pmax - Pmin) * unit(rng);
            const double Pd = Pdmin + (Pdmax - Pdmin) * unit(rng);
            const double v = 40 + 80 * unit(rng);
            const double s = 2 * unit(rng) - 1;
            EXPECT_TRUE(box.contains(cpl_incoming_rate(P, Pd, v, s * v / tp))) << "window " << k;
            escaped_double_rate += !box.contains(cpl_incoming_rate(P, Pd, v, 2 * s * v / tp));
        }
        // Doubling the admissible voltage rate does leave the box.
        EXPECT_GT(escaped_double_rate, 1000);
    }
}

TEST(Containment, Examples) {
    EXPECT_TRUE(check_containment({-1200, -1200, 0, 0}, {-1600, -800, -100, 100}).feasible);
    const auto c = check_containment({-1200, -700, 0, 0}, {-1600, -800, -100, 100});
    EXPECT_FALSE(c.feasible);
    EXPECT_EQ(c.axis, Axis::P);
    EXPECT_NEAR(c.margin, -100.0, 1e-12);
    const IntervalBox b{-1600, -800, -100, 100};
    EXPECT_TRUE(check_containment(b, b).feasible);
    EXPECT_THROW((void)check_containment({1, 0, 0, 0}, b), ContractViolation);
}

TEST(Containment, ReflexiveAndAntitone) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1e3, 1e3), shrink(0, 1);
    auto random_box = [&] {
        double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
        return IntervalBox{std::min(a, b), std::max(a, b), std::min(c, e), std::max(c, e)};
    };
    for (int k = 0; k < 10000; ++k) {
        const auto in = random_box(), out = random_box();
        EXPECT_TRUE(check_containment(in, in).feasible);
        // Shrink the incoming box towards its centre.
        const double s = shrink(rng);
        const double cP = 0.5 * (in.P_lo + in.P_hi), cQ = 0.5 * (in.Qd_lo + in.Qd_hi);
        const IntervalBox smaller{cP + s * (in.P_lo - cP), cP + s * (in.P_hi - cP), cQ + s * (in.Qd_lo - cQ),
                                  cQ + s * (in.Qd_hi - cQ)};
        if (!check_containment(out, in).feasible) {
            EXPECT_FALSE(check_containment(out, smaller).feasible);
        }
    }
}

namespace {

RangeSchedule two_windows() {
    return RangeSchedule{1.0, 0.0, {{-1600, -800, -100, 100}, {-1000, -500, -10, 10}}};
}

std::vector<Sample> samples_with(std::vector<std::pair<double, InteractionRate>> pts) {
    std::vector<Sample> s;
    for (auto [t, z] : pts) {
        Sample x;
        x.t = t;
        x.out1 = z;
        s.push_back(x);
    }
    return s;
}

}  // namespace

TEST(DetectViolation, SyntheticTrajectories) {
    const auto sched = two_windows();
    const auto ok = samples_with({{0.0, {-1200, 0}}, {0.5, {-900, 90}}, {1.5, {-600, -10}}, {2.0, {-500, 10}}});
    EXPECT_FALSE(detect_violation(ok, sched, Axis::Both).has_value());

    const auto bad = samples_with({{0.0, {-1200, 0}}, {0.5, {-1200, 50}}, {1.25, {-900, 50}}, {1.5, {-2000, 0}}});
    const auto v = detect_violation(bad, sched, Axis::Both);
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(v->t, 1.25);
    EXPECT_EQ(v->window, 1u);
    EXPECT_EQ(v->axis, Axis::Qd);
    EXPECT_NEAR(v->excess, 40.0, 1e-12);
    EXPECT_EQ(detect_violation(bad, sched, Axis::P)->t, 1.5);

    EXPECT_FALSE(detect_violation(bad, RangeSchedule{}, Axis::Both).has_value());
}

TEST(DetectViolation, NoneWhenEverySamplePassesContainment) {
    const auto sched = two_windows();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> T(0, 2), P(-1700, -400), Q(-120, 120);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::pair<double, InteractionRate>> pts;
        for (int k = 0; k < 20; ++k) pts.push_back({T(rng), {P(rng), Q(rng)}});
        std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
        const auto s = samples_with(pts);
        bool all = true;
        for (const auto& x : s) {
            const IntervalBox point{x.out1.P, x.out1.P, x.out1.Qd, x.out1.Qd};
            all = all && check_containment(point, sched.boxes[*sched.window_of(x.t)]).feasible;
        }
        EXPECT_EQ(all, !detect_violation(s, sched, Axis::Both).has_value());
    }
}

TEST(RangeSchedule, WindowLookup) {
    const auto s = two_windows();
    EXPECT_EQ(*s.window_of(0.0), 0u);
    EXPECT_EQ(*s.window_of(0.999), 0u);
    EXPECT_EQ(*s.window_of(1.0), 1u);
    EXPECT_EQ(*s.window_of(2.0), 1u);
    EXPECT_FALSE(s.window_of(2.5).has_value());
    EXPECT_FALSE(s.window_of(-0.1).has_value());
}

TEST(RangeSchedule, FromProfileUsesWindowExtrema) {
    const auto load = preset("tv-fblc").load;
    const auto s = schedule_from_profile(load, 1.0, 4.0, 0.01);
    ASSERT_EQ(s.boxes.size(), 4u);
    EXPECT_EQ(s.boxes[0].P_lo, -1600.0);
    EXPECT_EQ(s.boxes[0].P_hi, -1200.0);
    EXPECT_EQ(s.boxes[1].P_lo, -1600.0);
    EXPECT_EQ(s.boxes[1].P_hi, -800.0);
}

TEST(RangeSchedule, CsvRoundTrip) {
    const auto s = schedule_from_profile(preset("tv-fblc").load, 1.0, 4.0, 0.01);
    std::stringstream ss;
    write_schedule_csv(ss, s);
    EXPECT_EQ(ss.str().substr(0, 33), "k,t_start,P_lo,P_hi,Qd_lo,Qd_hi\n0");
    const auto r = read_schedule_csv(ss);
    EXPECT_EQ(r.window, s.window);
    EXPECT_EQ(r.t_start, s.t_start);
    EXPECT_EQ(r.boxes, s.boxes);

    std::istringstream gap("k,t_start,P_lo,P_hi,Qd_lo,Qd_hi\n0,0,-2,-1,0,1\n1,1,-2,-1,0,1\n2,5,-2,-1,0,1\n");
    EXPECT_THROW((void)read_schedule_csv(gap), ConfigError);
    std::istringstream inverted("k,t_start,P_lo,P_hi,Qd_lo,Qd_hi\n0,0,-1,-2,0,1\n");
    EXPECT_THROW((void)read_schedule_csv(inverted), ConfigError);
}

TEST(DetectViolation, ConstantGainLeavesTheRangeOnTheReactiveAxis) {
    const auto r = run(preset("tv-constant-gain"));
    const auto& v = r.report.feasibility.violation;
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(v->axis, Axis::Qd);
    EXPECT_NEAR(v->t, 0.35, 0.15);
}

TEST(DetectViolation, EnergyControllersStayInside) {
    for (const char* name : {"tv-fblc", "tv-smc"}) {
        const auto r = run(preset(name));
        EXPECT_FALSE(r.report.feasibility.violation.has_value()) << name;
    }
}
