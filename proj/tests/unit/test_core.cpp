#include <doctest.h>

#include <cmath>
#include <random>

#include "offload/core/bytes.hpp"
#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"
#include "offload/core/types.hpp"

using namespace offload;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an offload::Error");
  return ErrorCode::InvalidParameter;
}

}  // namespace

TEST_CASE("compute_edp substitutes T times E") {
  CHECK(compute_edp(TaskProfile::from_measurement(2.0, 6.0, 0)) == doctest::Approx(12.0));
  CHECK(TaskProfile::from_measurement(2.0, 6.0, 0).avg_power_w == doctest::Approx(3.0));
  CHECK(compute_edp(TaskProfile::from_measurement(1.5, 4.0, 0)) == doctest::Approx(6.0));
}

TEST_CASE("compute_edp tends to zero with T and E") {
  for (double t : {1e-3, 1e-6, 1e-9}) {
    const auto p = TaskProfile::from_measurement(t, 3.0 * t, 0);
    CHECK(compute_edp(p) == doctest::Approx(3.0 * t * t));
  }
}

TEST_CASE("compute_edp is increasing in T at fixed power and in E at fixed T") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int i = 0; i < 200; ++i) {
    const double p = u(rng), t1 = u(rng), t2 = t1 + u(rng);
    CHECK(compute_edp(TaskProfile::from_measurement(t1, p * t1, 0)) <
          compute_edp(TaskProfile::from_measurement(t2, p * t2, 0)));
    const double e1 = u(rng), e2 = e1 + u(rng);
    CHECK(compute_edp(TaskProfile::from_measurement(t1, e1, 0)) <
          compute_edp(TaskProfile::from_measurement(t1, e2, 0)));
  }
}

TEST_CASE("task profile rejects inconsistent power") {
  TaskProfile p{2.0, 6.0, 0, 5.0};
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("transfer_cost time is latency plus serialization") {
  LinkModel link{8e6, 0.0, 0.0, 0.0, true};
  CHECK(transfer_cost(link, 1048576).time_s == doctest::Approx(1.048576));
  link.latency_s = 0.25;
  CHECK(transfer_cost(link, 1048576).time_s == doctest::Approx(1.298576));
}

TEST_CASE("transfer_cost energy is a + b * bytes") {
  LinkModel link{8e6, 0.0, 0.1, 3.90625e-6, true};
  CHECK(transfer_cost(link, 0).energy_j == doctest::Approx(0.1));
  // Independent recomputation of a + b*bytes at 200 KiB.
  CHECK(transfer_cost(link, 204800).energy_j == doctest::Approx(0.1 + 204800 * 3.90625e-6));
  CHECK(transfer_cost(link, 204800).energy_j == doctest::Approx(0.9));
}

TEST_CASE("transfer_cost on a down link throws LinkDown") {
  LinkModel link{8e6, 0.0, 0.0, 0.0, false};
  CHECK(code_of([&] { transfer_cost(link, 10); }) == ErrorCode::LinkDown);
}

TEST_CASE("transfer_cost is non-decreasing in bytes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    LinkModel link{1e5 + u(rng) * 1e8, u(rng) * 0.1, u(rng), u(rng) * 1e-5, true};
    std::uint64_t prev_bytes = 0;
    auto prev = transfer_cost(link, 0);
    for (int k = 0; k < 20; ++k) {
      const auto bytes = prev_bytes + static_cast<std::uint64_t>(u(rng) * 100000);
      const auto c = transfer_cost(link, bytes);
      CHECK(c.time_s >= prev.time_s);
      CHECK(c.energy_j >= prev.energy_j);
      prev = c;
      prev_bytes = bytes;
    }
  }
}

TEST_CASE("classify_device splits at the threshold with ties going to H") {
  CHECK(classify_device(2.5, 1.5) == PerfClass::H);
  CHECK(classify_device(0.8, 1.5) == PerfClass::C);
  CHECK(classify_device(1.5, 1.5) == PerfClass::H);
  CHECK(code_of([] { classify_device(0.0, 1.5); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([] { classify_device(1.0, -1.0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("instantaneous power follows the piecewise model") {
  DeviceModel d;
  d.device_id = "c";
  d.power_idle_w = 0.5;
  d.power_active_w = 2.5;
  d.power_tx_w = 1.0;
  CHECK(instantaneous_power(d, 0.0, 0) == doctest::Approx(0.5));
  CHECK(instantaneous_power(d, 1.0, 0) == doctest::Approx(2.5));
  CHECK(instantaneous_power(d, 0.5, 1) == doctest::Approx(2.5));
  CHECK(instantaneous_power(d, 1.0, 2) == doctest::Approx(4.5));
}

TEST_CASE("device model invariants") {
  DeviceModel d;
  d.device_id = "x";
  d.power_idle_w = 2.0;
  d.power_active_w = 1.0;
  CHECK(code_of([&] { d.validate(); }) == ErrorCode::InvalidParameter);
  d.power_active_w = 3.0;
  d.validate();
  d.cpu_score = 0.0;
  CHECK(code_of([&] { d.validate(); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("ids render and parse") {
  const auto id = TaskClassId::parse("demo/FindRoute");
  CHECK(id.ns() == "demo");
  CHECK(id.class_name() == "FindRoute");
  CHECK(TaskInstanceId{id, 7}.str() == "demo/FindRoute#0007");
  CHECK(code_of([] { TaskClassId::parse("noslash"); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("clock never moves backwards") {
  Clock c;
  c.advance_to(1.0);
  c.advance_to(1.0);
  CHECK(code_of([&] { c.advance_to(0.5); }) == ErrorCode::InvalidParameter);
  CHECK(c.now() == 1.0);
}

TEST_CASE("byte codec round-trips and rejects truncation") {
  ByteWriter w;
  w.u8(0xAB);
  w.u32(0x01020304);
  w.u64(0x0102030405060708ULL);
  w.f64(-2.5);
  w.str("hello");
  const auto bytes = std::move(w).take();
  CHECK(bytes[1] == 0x01);
  CHECK(bytes[4] == 0x04);
  ByteReader r(bytes);
  CHECK(r.u8() == 0xAB);
  CHECK(r.u32() == 0x01020304u);
  CHECK(r.u64() == 0x0102030405060708ULL);
  CHECK(r.f64() == -2.5);
  CHECK(r.str() == "hello");
  CHECK(r.done());
  ByteReader short_reader(std::span<const std::uint8_t>(bytes.data(), 3));
  short_reader.u8();
  CHECK(code_of([&] { short_reader.u32(); }) == ErrorCode::ProtocolError);
}
