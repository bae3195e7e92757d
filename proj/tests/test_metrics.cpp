#include <cmath>

#include "doctest.h"
#include "maddr/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace maddr;
namespace m = maddr::metrics;

TEST_CASE("per-hop latency") {
    CHECK(m::per_hop_latency(1000, 50000, 0, 0) == doctest::Approx(0.02));
    CHECK(m::per_hop_latency(0, 50000, 0, 0) == 0.0);
    CHECK(m::per_hop_latency(1000, 50000, 0.001, 0.159) == doctest::Approx(0.18));
    CHECK_THROWS_AS(m::per_hop_latency(1000, 0, 0, 0), DomainError);
    CHECK_THROWS_AS(m::per_hop_latency(1000, -1, 0, 0), DomainError);
}

TEST_CASE("store-and-forward path delay") {
    CHECK(m::path_delay(0, 0.02, 5) == 0.0);
    CHECK(m::path_delay(20, 0.02, 5) == doctest::Approx(2.0));
}

TEST_CASE("transmit energy per bit") {
    NetworkParams p;
    p.tx_amplifier = 0.0;
    CHECK(m::transmit_energy_per_bit(p, 0.5) == doctest::Approx(p.tx_electronics * p.bit_tx_time));
    CHECK(m::transmit_energy_per_bit(p, 2.0) == doctest::Approx(p.tx_electronics * p.bit_tx_time));

    NetworkParams q;
    q.tx_electronics = 1e-3;
    q.tx_amplifier = 1e-6;
    q.path_loss_exponent = 2.0;
    q.bit_tx_time = 2e-5;
    q.radio_range = 20.0;
    CHECK(m::transmit_energy_per_bit(q, 10.0) == doctest::Approx(2.2e-8));
    CHECK(m::transmit_energy_per_bit(q, 11.0) > m::transmit_energy_per_bit(q, 10.0));
    CHECK_THROWS_AS(m::transmit_energy_per_bit(q, 20.5), RangeExceededError);
}

TEST_CASE("receive energy per bit") {
    NetworkParams p;
    CHECK(m::receive_energy_per_bit(p) == doctest::Approx(1.6384e-8));
    p.rx_electronics = 0.0;
    CHECK(m::receive_energy_per_bit(p) == 0.0);
}

TEST_CASE("path energy against a node-by-node recomputation") {
    const NetworkParams p = testing::table1();
    const auto o = oracle::from(p);
    CHECK(m::path_energy(p, 0, 4, 8.0) == doctest::Approx(p.sensing_power * 5));
    // H = 4 over 8 m: each of the 5 nodes moves 25 kbit at 2 m spacing.
    const double hand = 5 * ((1.024e-3 + 1e-6 * 4.0) * 2e-5 * 1000 * 25 +
                             0.8192e-3 * 2e-5 * 1000 * 25 + 81.2e-6);
    CHECK(m::path_energy(p, 25, 4, 8.0) == doctest::Approx(hand).epsilon(1e-12));
    CHECK(m::path_energy(p, 25, 4, 8.0) == doctest::Approx(oracle::path_energy(o, 25, 4, 8.0)));
    CHECK_THROWS_AS(m::path_energy(p, 1, 0, 8.0), DomainError);
}

TEST_CASE("path EDP") {
    const NetworkParams p = testing::table1();
    const auto o = oracle::from(p);
    CHECK(m::path_edp(p, 0, 5, 0.02, 8.0) == 0.0);
    for (int h = 1; h <= 8; ++h) {
        for (double d : {0.0, 3.0, 17.0, 40.0}) {
            const double got = m::path_edp(p, d, h, 0.03, 6.0);
            CHECK(got == doctest::Approx(oracle::path_edp(o, d, h, 0.03, 6.0)).epsilon(1e-12));
        }
    }
    const auto c = m::path_cost(p, 12, 3, 0.02, 6.0);
    CHECK(c.edp == doctest::Approx(c.energy * c.delay));
}

TEST_CASE("EDP of the equal split") {
    const NetworkParams p = testing::table1();
    const auto o = oracle::from(p);
    CHECK(m::edp_avg(p, 0, 3, 14.0 / 3.0, 0.02, 5.0) == 0.0);
    CHECK(m::edp_avg(p, 60, 1, 4, 0.02, 5.0) == doctest::Approx(m::path_edp(p, 60, 4, 0.02, 5.0)));
    const double v = m::edp_avg(p, 100, 3, 14.0 / 3.0, 0.02, 5.0);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
    CHECK(v == doctest::Approx(oracle::budget(o, 100, {3, 4, 7}, {0.02, 0.02, 0.02}, 5.0))
                   .epsilon(1e-12));
}
