#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "offload/core/energy.hpp"
#include "offload/core/error.hpp"
#include "offload/profiler/profiler.hpp"

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

const TaskClassId kCls{"demo", "FindRoute"};

double sse(const std::vector<TransferEnergySample>& s, double a, double b) {
  double r = 0.0;
  for (const auto& x : s) {
    const double d = x.joules - (a + b * static_cast<double>(x.bytes));
    r += d * d;
  }
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("offload_test_" + name);
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("first execution creates a retrievable record") {
  ProfileStore store;
  const auto& rec = store.profile_first_execution(kCls, TaskProfile::from_measurement(2.0, 6.0, 10240), 0.0);
  CHECK(compute_edp(rec.profile) == doctest::Approx(12.0));
  CHECK(rec.sample_count == 1);
  CHECK(store.lookup(kCls) == rec);
  CHECK(code_of([&] { store.profile_first_execution(kCls, TaskProfile::from_measurement(1, 1, 1), 0.0); }) ==
        ErrorCode::DuplicateRecord);
  CHECK(code_of([&] { store.lookup(TaskClassId("demo", "Other")); }) == ErrorCode::NotProfiled);
}

TEST_CASE("update_profile keeps a running mean") {
  ProfileStore store;
  store.profile_first_execution(kCls, TaskProfile::from_measurement(2.0, 6.0, 100), 0.0);
  auto rec = store.update_profile(kCls, TaskProfile::from_measurement(4.0, 6.0, 100));
  CHECK(rec.profile.exec_time_local_s == doctest::Approx(3.0));
  CHECK(rec.sample_count == 2);
  rec = store.update_profile(kCls, TaskProfile::from_measurement(2.0, 6.0, 100));
  CHECK(rec.profile.energy_local_j == doctest::Approx(6.0));
  CHECK(rec.sample_count == 3);
}

TEST_CASE("update_profile rejects non-finite observations without touching the record") {
  ProfileStore store;
  store.profile_first_execution(kCls, TaskProfile::from_measurement(2.0, 6.0, 100), 0.0);
  const auto before = store.lookup(kCls);
  TaskProfile bad{std::numeric_limits<double>::infinity(), 6.0, 100, 0.0};
  CHECK(code_of([&] { store.update_profile(kCls, bad); }) == ErrorCode::InvalidParameter);
  CHECK(store.lookup(kCls) == before);
  CHECK(code_of([&] { store.update_profile(TaskClassId("x", "y"), TaskProfile::from_measurement(1, 1, 1)); }) ==
        ErrorCode::NotProfiled);
}

TEST_CASE("store file round-trips and the last line wins") {
  const auto path = temp_file("profiles.tsv");
  {
    ProfileStore store(path);
    store.profile_first_execution(kCls, TaskProfile::from_measurement(0.1 + 0.2, 1.0 / 3.0, 10240), 0.0);
    store.update_profile(kCls, TaskProfile::from_measurement(0.7, 2.0 / 7.0, 10240));
    store.profile_first_execution(TaskClassId("demo", "FaceDetect"), TaskProfile::from_measurement(1.2, 3.0, 5), 0.0);
  }
  ProfileStore a(path);
  ProfileStore b;
  {
    ProfileStore reference;
    reference.profile_first_execution(kCls, TaskProfile::from_measurement(0.1 + 0.2, 1.0 / 3.0, 10240), 0.0);
    reference.update_profile(kCls, TaskProfile::from_measurement(0.7, 2.0 / 7.0, 10240));
    CHECK(a.lookup(kCls) == reference.lookup(kCls));
  }
  CHECK(a.records().size() == 2);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 3);
  std::filesystem::remove(path);
}

TEST_CASE("record line format") {
  const TaskRecord r{kCls, TaskProfile::from_measurement(2.0, 6.0, 10240), 0.0, 4};
  CHECK(ProfileStore::format_line(r) == "demo/FindRoute\t2\t6\t10240\t4");
  CHECK(ProfileStore::parse_line(ProfileStore::format_line(r)) == r);
  CHECK(code_of([] { ProfileStore::parse_line("demo/FindRoute\t2\t6"); }) == ErrorCode::IoError);
}

TEST_CASE("median EDP over records") {
  ProfileStore store;
  CHECK(!store.median_edp());
  store.profile_first_execution(TaskClassId("a", "a"), TaskProfile::from_measurement(1, 1, 0), 0);  // 1
  store.profile_first_execution(TaskClassId("a", "b"), TaskProfile::from_measurement(2, 6, 0), 0);  // 12
  store.profile_first_execution(TaskClassId("a", "c"), TaskProfile::from_measurement(1, 3, 0), 0);  // 3
  CHECK(*store.median_edp() == doctest::Approx(3.0));
  store.profile_first_execution(TaskClassId("a", "d"), TaskProfile::from_measurement(2, 10, 0), 0);  // 20
  CHECK(*store.median_edp() == doctest::Approx(7.5));
}

TEST_CASE("throughput EWMA") {
  LinkModel link{8e6, 0.01, 0.0, 0.0, true};
  CHECK(update_throughput(link, 1048576, 2.0, 1.0).throughput_bps == doctest::Approx(4194304.0));
  CHECK(update_throughput(link, 1048576, 2.0, 1.0).latency_s == 0.01);
  // 4 Mbps sample: 500000 bytes in 1 s.
  CHECK(update_throughput(link, 500000, 1.0, 0.5).throughput_bps == doctest::Approx(6e6));
  CHECK(code_of([&] { update_throughput(link, 100, 0.0); }) == ErrorCode::InvalidParameter);
  CHECK(code_of([&] { update_throughput(link, 100, -1.0); }) == ErrorCode::InvalidParameter);
}

TEST_CASE("EWMA stays between prior and samples") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    LinkModel link{1e5 + u(rng) * 1e8, 0.0, 0.0, 0.0, true};
    double lo = link.throughput_bps, hi = link.throughput_bps;
    const double alpha = 0.01 + 0.99 * u(rng);
    for (int k = 0; k < 20; ++k) {
      const auto bytes = 1 + static_cast<std::uint64_t>(u(rng) * 1e6);
      const double dur = 0.001 + u(rng);
      const double sample = 8.0 * static_cast<double>(bytes) / dur;
      lo = std::min(lo, sample);
      hi = std::max(hi, sample);
      link = update_throughput(link, bytes, dur, alpha);
      CHECK(link.throughput_bps >= lo * (1 - 1e-12));
      CHECK(link.throughput_bps <= hi * (1 + 1e-12));
    }
  }
}

TEST_CASE("transfer energy fit matches the two-point solve") {
  const std::vector<TransferEnergySample> s{{102400, 0.5}, {204800, 0.9}};
  // Oracle: line through both points.
  const double b = (0.9 - 0.5) / (204800.0 - 102400.0);
  const double a = 0.5 - b * 102400.0;
  CHECK(a == doctest::Approx(0.1));
  CHECK(b == doctest::Approx(3.90625e-6));
  const auto fit = fit_transfer_energy(s);
  CHECK(fit.intercept_j == doctest::Approx(a));
  CHECK(fit.per_byte_j == doctest::Approx(b));
  // The fitted link reproduces the transfer-cost example.
  const LinkModel link{8e6, 0.0, fit.intercept_j, fit.per_byte_j, true};
  CHECK(transfer_cost(link, 204800).energy_j == doctest::Approx(0.9));
}

TEST_CASE("flat samples fit a zero slope; one size is not enough") {
  const auto fit = fit_transfer_energy({{0, 0.2}, {50000, 0.2}});
  CHECK(fit.intercept_j == doctest::Approx(0.2));
  CHECK(fit.per_byte_j == doctest::Approx(0.0));
  CHECK(code_of([] { fit_transfer_energy({{100, 1.0}}); }) == ErrorCode::InsufficientData);
  CHECK(code_of([] { fit_transfer_energy({{100, 1.0}, {100, 2.0}}); }) == ErrorCode::InsufficientData);
}

TEST_CASE("fit residual never exceeds the best constant model") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TransferEnergySample> s;
    const int n = 2 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) s.push_back({static_cast<std::uint64_t>(i * 1000 + rng() % 1000), u(rng)});
    const auto fit = fit_transfer_energy(s);
    CHECK(fit.intercept_j >= 0.0);
    CHECK(fit.per_byte_j >= 0.0);
    const double r = sse(s, fit.intercept_j, fit.per_byte_j);
    for (int k = 0; k <= 200; ++k) CHECK(r <= sse(s, k / 200.0, 0.0) + 1e-12);
  }
}

TEST_CASE("status board rejects stale writes") {
  StatusBoard board;
  DeviceStatus s;
  s.device_id = "laptop";
  s.timestamp_s = 5.0;
  s.cpu_load = 0.5;
  CHECK(board.publish(s));
  auto old = s;
  old.timestamp_s = 4.0;
  old.cpu_load = 0.9;
  CHECK(!board.publish(old));
  CHECK(board.latest("laptop")->cpu_load == 0.5);
  s.timestamp_s = 6.0;
  s.cpu_load = 0.1;
  CHECK(board.publish(s));
  CHECK(board.latest("laptop")->cpu_load == 0.1);
  CHECK(board.latest("phone") == nullptr);
}
