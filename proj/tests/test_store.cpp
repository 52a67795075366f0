#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <unistd.h>

#include "nlsr/config.hpp"
#include "nlsr/csv.hpp"
#include "nlsr/initdata.hpp"
#include "nlsr/manifest.hpp"
#include "nlsr/report.hpp"
#include "nlsr/snapshot.hpp"

using namespace nlsr;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Inconsistent;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

RadialField sample_field() {
  auto g = make_grid(4, 64, 10.0);
  std::vector<Complex> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(std::exp(-g->r(i)), 0.1 * g->r(i) * std::exp(-g->r(i)));
  return RadialField::from_complex(g, std::move(v));
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nlsr_store_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaultsWithDecayRadius) {
  const auto c = parse_config("");
  EXPECT_EQ(c.d, 4);
  EXPECT_EQ(c.p, 2.5);
  EXPECT_EQ(c.omega, 0.05);
  EXPECT_NEAR(c.r_max, 12.0 / std::sqrt(0.05), 1e-12);
  EXPECT_EQ(c.n, 10991u);  // spacing 40/8192 kept
  EXPECT_TRUE(c.init.empty());
}

TEST(Config, ExplicitRadiusIsKept) {
  const auto c = parse_config("r_max = 40\nn = 8192\n");
  EXPECT_EQ(c.r_max, 40.0);
  EXPECT_EQ(c.n, 8192u);
  const auto small = parse_config("omega = 0.02 # slow decay\n");
  EXPECT_GE(small.r_max, 84.85);
}

TEST(Config, RejectsInadmissibleExponent) {
  EXPECT_EQ(kind_of([] { parse_config("p = 3.5\n"); }), ErrorKind::Domain);
  EXPECT_EQ(kind_of([] { parse_config("order = 3\n"); }), ErrorKind::Domain);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(kind_of([] { parse_config("p = 2.5\nfoo = 1\n"); }), ErrorKind::Parse);
  EXPECT_NE(message_of([] { parse_config("p = 2.5\nfoo = 1\n"); }).find("line 2"), std::string::npos);
  const auto dup = message_of([] { parse_config("omega = 0.05\n\nomega = 0.1\n"); });
  EXPECT_NE(dup.find("line 3"), std::string::npos);
  EXPECT_NE(dup.find("line 1"), std::string::npos);
  EXPECT_EQ(kind_of([] { parse_config("omega 0.05\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config("omega = abc\n"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config("strict = maybe\n"); }), ErrorKind::Parse);
}

TEST(Config, InitMayRepeatAndTextRoundTrips) {
  auto c = parse_config("init = phi-scaled:0.8\ninit = gaussian:1,2\nstrict = true\nseed = 7\n");
  ASSERT_EQ(c.init.size(), 2u);
  EXPECT_EQ(c.init[1], "gaussian:1,2");
  c.dt = 0.1 + 0.2;  // value without a short decimal form
  const auto back = parse_config(to_config_text(c));
  EXPECT_EQ(to_config_text(back), to_config_text(c));
  EXPECT_EQ(back.dt, c.dt);
  EXPECT_TRUE(back.strict);
  EXPECT_EQ(back.seed, 7u);
}

TEST(Config, OverridesReplaceLinesInPlace) {
  const std::string base = "omega = 0.05\np = 2.5 # comment\n";
  const auto text = override_config_text(base, {{"p", "2.2"}, {"dt", "0.002"}});
  const auto c = parse_config(text);
  EXPECT_EQ(c.p, 2.2);
  EXPECT_EQ(c.dt, 0.002);
  EXPECT_EQ(c.omega, 0.05);
}

TEST(Snapshot, RoundTripIsBitIdentical) {
  const auto f = sample_field();
  const auto bytes = encode_snapshot(f);
  EXPECT_EQ(bytes.size(), 28u + 16u * 64u);
  const auto g = decode_snapshot(bytes);
  EXPECT_EQ(g.grid().dimension(), 4);
  EXPECT_EQ(g.grid().size(), 64u);
  EXPECT_EQ(g.grid().r_max(), 10.0);
  EXPECT_EQ(std::memcmp(g.values().data(), f.values().data(), 16 * 64), 0);
  EXPECT_EQ(encode_snapshot(g), bytes);

  const auto path = scratch("f.nlsr");
  write_snapshot(f, path);
  EXPECT_EQ(read_file(path), bytes);
  EXPECT_EQ(encode_snapshot(read_snapshot(path)), bytes);
}

TEST(Snapshot, CorruptFilesAreRejected) {
  const auto bytes = encode_snapshot(sample_field());
  EXPECT_EQ(kind_of([&] { decode_snapshot(bytes.substr(0, 10)); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([&] { decode_snapshot(bytes.substr(0, bytes.size() - 1)); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([&] { decode_snapshot(bytes + "x"); }), ErrorKind::Format);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_snapshot(magic); }), ErrorKind::Format);

  auto newer = bytes;
  const std::uint32_t v = kSnapshotVersion + 1;
  std::memcpy(newer.data() + 4, &v, 4);
  EXPECT_EQ(kind_of([&] { decode_snapshot(newer); }), ErrorKind::Version);
  const auto msg = message_of([&] { decode_snapshot(newer); });
  EXPECT_NE(msg.find("version 2"), std::string::npos);
  EXPECT_NE(msg.find("version 1"), std::string::npos);

  auto nan = bytes;
  const double q = std::numeric_limits<double>::quiet_NaN();
  std::memcpy(nan.data() + 28 + 16 * 5, &q, 8);
  EXPECT_EQ(kind_of([&] { decode_snapshot(nan); }), ErrorKind::NonFiniteData);
  EXPECT_NE(message_of([&] { decode_snapshot(nan); }).find("node 5"), std::string::npos);
}

TEST(Manifest, DigestOfKnownString) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, SerializationRoundTripsByteForByte) {
  RunManifest m;
  m.command = "groundstate";
  m.config = parse_config("omega = 0.07\ninit = phi-scaled:1.2\n");
  m.derived["delta_E"] = 0.0157;
  const auto in = scratch("input.nlsr");
  write_snapshot(sample_field(), in);
  m.add_input(in);
  m.add_output(in);
  m.counters["seconds"] = 1.5;
  const auto text = m.serialize();
  EXPECT_EQ(text.back(), '\n');
  const auto back = RunManifest::parse(text);
  EXPECT_EQ(back.serialize(), text);
  EXPECT_EQ(back.config.omega, 0.07);
  EXPECT_EQ(back.outputs[0]["path"], "input.nlsr");
  EXPECT_EQ(back.inputs[0]["sha256"], sha256_file(in));

  // A manifest doubles as a configuration.
  const auto c = parse_config_or_manifest(text);
  EXPECT_EQ(to_config_text(c), to_config_text(m.config));
  EXPECT_EQ(kind_of([] { RunManifest::parse(R"({"tool":"other"})"); }), ErrorKind::Format);
  EXPECT_EQ(kind_of([] { RunManifest::parse("{not json"); }), ErrorKind::Parse);
}

TEST(Manifest, AtomicWriteReplacesFile) {
  const auto p = scratch("atomic.txt");
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  EXPECT_EQ(read_file(p), "two");
  for (const auto& e : fs::directory_iterator(p.parent_path())) {
    EXPECT_EQ(e.path().filename().string().find(".tmp."), std::string::npos);
  }
}

TEST(Csv, HeadersAndRoundTrip) {
  std::vector<MCurveSample> s = {{0.05, 14.3, 26.1, 2.0, 1e-12}, {0.1, 15.8, 23.0, 2.5, 2e-12}};
  const auto text = csv::mcurve(s);
  const auto rows = csv::parse(text);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].size(), 5u);
  EXPECT_EQ(text.substr(0, text.find('\n')), csv::kMCurveHeader);
  EXPECT_EQ(std::stod(rows[2][1]), 15.8);

  TrajectoryRow r;
  r.t = 0.5;
  const auto traj = csv::parse(csv::trajectory({r}));
  ASSERT_EQ(traj.size(), 2u);
  EXPECT_EQ(traj[0].size(), 11u);
  EXPECT_EQ(traj[1][6], "");  // d_omega missing without a frame

  csv::SweepRow sw{"gaussian:1,2", {}};
  sw.result.scenario = 9;
  const auto idx = csv::parse(csv::sweep_index({sw}));
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(idx[1][0], "gaussian:1,2");
  EXPECT_EQ(idx[1][3], "9");
  EXPECT_EQ(idx[1][1], "undecided");
}

TEST(InitSpec, ParsesAllKinds) {
  auto s = parse_init_spec("phi-scaled:0.8");
  EXPECT_EQ(s.kind, InitSpec::Kind::PhiScaled);
  EXPECT_EQ(s.a, 0.8);
  s = parse_init_spec("phi-plus-mode:-1e-3");
  EXPECT_EQ(s.kind, InitSpec::Kind::PhiPlusMode);
  EXPECT_EQ(s.a, -1e-3);
  s = parse_init_spec("gaussian: 1.5 , 2");
  EXPECT_EQ(s.kind, InitSpec::Kind::Gaussian);
  EXPECT_EQ(s.b, 2.0);
  s = parse_init_spec("file:/tmp/x.nlsr");
  EXPECT_EQ(s.path, "/tmp/x.nlsr");
  EXPECT_EQ(kind_of([] { parse_init_spec("bump:1"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_init_spec("phi-scaled"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_init_spec("gaussian:1,-2"); }), ErrorKind::Domain);
}

TEST(InitSpec, BuildsFieldsAndChecksDimension) {
  auto g = make_grid(4, 256, 10.0);
  const ModelParams mp{4, 2.5, 0.05};
  const auto u = make_initial(parse_init_spec("gaussian:2,1"), g, mp);
  EXPECT_NEAR(u[0].real(), 2.0 * std::exp(-0.5 * g->r(0) * g->r(0)), 1e-15);

  const auto p3 = scratch("d3.nlsr");
  write_snapshot(RadialField::from_function(make_grid(3, 32, 5.0), [](double r) { return std::exp(-r); }), p3);
  EXPECT_EQ(kind_of([&] { make_initial(parse_init_spec("file:" + p3.string()), g, mp); }), ErrorKind::GridMismatch);
}

TEST(Report, NonFiniteNumbersBecomeNull) {
  EXPECT_TRUE(json_number(std::numeric_limits<double>::quiet_NaN()).is_null());
  EXPECT_EQ(json_number(1.5).get<double>(), 1.5);
  Classification c;
  c.scenario = 1;
  c.forward = c.backward = Label::Scatter;
  const auto j = classification_json(c, "phi-scaled:0.8");
  EXPECT_EQ(j["scenario_name"], "i");
  EXPECT_EQ(j["forward"], "scatter");
  EXPECT_TRUE(j["epsilon_omega"].is_null());
}
