// Copyright 2026 The zccl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "zccl/bench.hpp"
#include "zccl/codec_core.hpp"
#include "zccl/error.hpp"

namespace zccl {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "zccl-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (fs::path(path_) / name).string(); }

 private:
  std::string path_;
};

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// Runs the CLI and returns its exit status.
int run_cli(const std::string& args, const std::string& log) {
  std::string cmd = std::string(ZCCL_CLI_PATH) + " " + args + " >" + log + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// ---- parsing -----------------------------------------------------------------

TEST(Parse, Bounds) {
  ErrorBoundSpec s = parse_bound("rel:1e-4");
  EXPECT_EQ(s.mode, BoundMode::Relative);
  EXPECT_DOUBLE_EQ(s.value, 1e-4);
  s = parse_bound("abs:0.5");
  EXPECT_EQ(s.mode, BoundMode::Absolute);
  EXPECT_DOUBLE_EQ(s.value, 0.5);
  for (const char* bad : {"1e-4", "rel:", "rel:abc", "rel:1e-4x", "pct:1", "rel:-1", "abs:0", "abs:inf"}) {
    EXPECT_THROW(parse_bound(bad), ParameterError) << bad;
  }
  EXPECT_EQ(parse_bound(format_bound(ErrorBoundSpec::relative(1e-3))).value, 1e-3);
}

TEST(Parse, Names) {
  EXPECT_EQ(parse_codec_kind("zlite"), CodecKind::ZLite);
  EXPECT_EQ(parse_codec_kind("szx"), CodecKind::Szx);
  EXPECT_EQ(parse_variant("cprp2p"), Variant::Cprp2p);
  EXPECT_EQ(parse_reduce_kind("max"), ReduceKind::Max);
  EXPECT_EQ(parse_backend("tcp"), Backend::Tcp);
  EXPECT_EQ(parse_synthetic_kind("gaussian_walk"), SyntheticKind::GaussianWalk);
  EXPECT_EQ(parse_collective_op("reduce_scatter"), CollectiveOp::ReduceScatter);
  EXPECT_THROW(parse_codec_kind("zstd"), ParameterError);
  EXPECT_THROW(parse_variant("fast"), ParameterError);
  EXPECT_THROW(parse_backend("rdma"), ParameterError);
  for (auto k : {SyntheticKind::Constant, SyntheticKind::Uniform, SyntheticKind::GaussianWalk, SyntheticKind::SineMix})
    EXPECT_EQ(parse_synthetic_kind(to_string(k)), k);
}

// ---- synthetic data --------------------------------------------------------------

TEST(Generate, ConstantKind) {
  SyntheticSpec s{SyntheticKind::Constant, 100, 3};
  auto f = generate_field(s);
  ASSERT_EQ(f.size(), 100u);
  for (float x : f.values()) EXPECT_EQ(x, f.values()[0]);
}

TEST(Generate, SameSeedIsBitwiseIdentical) {
  for (auto k : {SyntheticKind::Uniform, SyntheticKind::GaussianWalk, SyntheticKind::SineMix}) {
    SyntheticSpec s{k, 5000, 42};
    auto a = generate_field(s), b = generate_field(s);
    EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    s.seed = 43;
    auto c = generate_field(s);
    EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  }
}

TEST(Generate, SineMixHasPositiveRange) {
  auto f = generate_field({SyntheticKind::SineMix, 4096, 1});
  EXPECT_GT(value_range(f.values()).width(), 0.0);
}

TEST(Generate, ZeroLengthRejected) {
  EXPECT_THROW(generate_field({SyntheticKind::Uniform, 0, 1}), ParameterError);
  EXPECT_THROW(generate_image(0, 10, 1), ParameterError);
}

TEST(Generate, ImageHasDims) {
  auto img = generate_image(32, 16, 5);
  EXPECT_EQ(img.size(), 512u);
  EXPECT_EQ(img.dims(), (std::vector<std::size_t>{16, 32}));
}

// ---- raw files -----------------------------------------------------------------

TEST(RawIo, SaveThenLoadIsBitwise) {
  TempDir dir;
  auto f = generate_field({SyntheticKind::Uniform, 1000, 9});
  save_raw_f32(dir.file("a.f32"), f.values());
  EXPECT_EQ(fs::file_size(dir.file("a.f32")), 4000u);
  auto g = load_raw_f32(dir.file("a.f32"));
  EXPECT_TRUE(std::equal(f.values().begin(), f.values().end(), g.values().begin(), g.values().end()));
  auto prefix = load_raw_f32(dir.file("a.f32"), 10);
  ASSERT_EQ(prefix.size(), 10u);
  EXPECT_TRUE(std::equal(prefix.values().begin(), prefix.values().end(), f.values().begin()));
  EXPECT_THROW(load_raw_f32(dir.file("a.f32"), 1001), IngestionError);
}

TEST(RawIo, LittleEndianLayout) {
  TempDir dir;
  std::vector<float> v{1.0f};
  save_raw_f32(dir.file("one.f32"), v);
  std::string bytes = read_text(dir.file("one.f32"));
  EXPECT_EQ(bytes, std::string("\x00\x00\x80\x3f", 4));
}

TEST(RawIo, TenByteFileRejected) {
  TempDir dir;
  write_bytes(dir.file("bad.f32"), std::vector<std::uint8_t>(10, 0));
  EXPECT_THROW(load_raw_f32(dir.file("bad.f32")), IngestionError);
  write_bytes(dir.file("empty.f32"), {});
  EXPECT_THROW(load_raw_f32(dir.file("empty.f32")), IngestionError);
  EXPECT_THROW(load_raw_f32(dir.file("missing.f32")), IngestionError);
}

TEST(RawIo, NonFiniteValueReportsIndex) {
  TempDir dir;
  std::vector<float> v(8, 1.0f);
  v[5] = std::nanf("");
  v[6] = INFINITY;
  std::vector<std::uint8_t> bytes(v.size() * 4);
  std::memcpy(bytes.data(), v.data(), bytes.size());
  write_bytes(dir.file("nan.f32"), bytes);
  try {
    load_raw_f32(dir.file("nan.f32"));
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.index(), 5u);
    EXPECT_NE(std::string(e.what()).find("index 5"), std::string::npos);
  }
  EXPECT_EQ(load_raw_f32(dir.file("nan.f32"), 5).size(), 5u);
}

// ---- PGM -------------------------------------------------------------------------

TEST(Pgm, HeaderAndNormalization) {
  TempDir dir;
  std::vector<float> v{-1.0f, 0.0f, 1.0f, 3.0f, 3.0f, -1.0f};
  write_pgm(dir.file("x.pgm"), v, 3, 2);
  std::string text = read_text(dir.file("x.pgm"));
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(text.substr(0, header.size()), header);
  ASSERT_EQ(text.size(), header.size() + 6);
  EXPECT_EQ(static_cast<unsigned char>(text[header.size()]), 0);
  EXPECT_EQ(static_cast<unsigned char>(text[header.size() + 3]), 255);
  PgmImage img = read_pgm(dir.file("x.pgm"));
  EXPECT_EQ(img.width, 3u);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.max_value, 255u);
  ASSERT_EQ(img.pixels.size(), 6u);
  EXPECT_EQ(img.pixels[0], 0);
  EXPECT_EQ(img.pixels[3], 255);
  EXPECT_EQ(img.pixels[5], 0);
  EXPECT_THROW(write_pgm(dir.file("y.pgm"), v, 4, 2), ParameterError);
}

TEST(Pgm, MalformedFilesRejected) {
  TempDir dir;
  std::string p6 = "P6\n1 1\n255\n\x01";
  write_bytes(dir.file("p6.pgm"), std::vector<std::uint8_t>(p6.begin(), p6.end()));
  EXPECT_THROW(read_pgm(dir.file("p6.pgm")), IngestionError);
  std::string shortpix = "P5\n2 2\n255\n\x01";
  write_bytes(dir.file("short.pgm"), std::vector<std::uint8_t>(shortpix.begin(), shortpix.end()));
  EXPECT_THROW(read_pgm(dir.file("short.pgm")), IngestionError);
}

// ---- histogram ---------------------------------------------------------------------

TEST(Histogram, CountsSumToSamples) {
  std::vector<double> v{0.0, 0.1, 0.2, 0.3, 0.9, 1.0};
  auto h = histogram(v, 4);
  ASSERT_EQ(h.size(), 4u);
  std::uint64_t total = 0;
  for (auto& b : h) total += b.count;
  EXPECT_EQ(total, v.size());
  EXPECT_DOUBLE_EQ(h.front().lo, 0.0);
  EXPECT_DOUBLE_EQ(h.back().hi, 1.0);
  EXPECT_EQ(h.back().count, 2u);
}

TEST(Histogram, EqualValuesGiveOneBin) {
  std::vector<double> zeros(50, 0.0);
  auto h = histogram(zeros, 16);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].count, 50u);
  EXPECT_THROW(histogram(zeros, 0), ParameterError);
}

// ---- codec bench --------------------------------------------------------------------

TEST(BenchCodec, RelativeListGivesFourRowsPerCodec) {
  CodecBenchOptions o;
  o.field = generate_field({SyntheticKind::SineMix, 20000, 1});
  o.warmup = 0;
  o.reps = 1;
  auto rows = cmd_bench_codec(o);
  ASSERT_EQ(rows.size(), 8u);
  const double bounds[] = {1e-1, 1e-2, 1e-3, 1e-4};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].codec, i < 4 ? "zlite" : "szx");
    EXPECT_EQ(rows[i].rel_or_abs, "REL");
    EXPECT_EQ(rows[i].mode, "serial");
    EXPECT_DOUBLE_EQ(rows[i].bound, bounds[i % 4]);
    EXPECT_GT(rows[i].ratio, 0.0);
    EXPECT_LE(rows[i].max_abs_err, rows[i].eb_abs);
  }
  // The ratio column agrees with a direct compression at the reported bound.
  Compressed direct = compress(o.field.values(), static_cast<float>(rows[2].eb_abs));
  EXPECT_DOUBLE_EQ(rows[2].ratio, direct.stats.ratio);
}

TEST(BenchCodec, ConstantFieldIsAllConstantBlocks) {
  CodecBenchOptions o;
  o.field = generate_field({SyntheticKind::Constant, 1 << 16, 1});
  o.bounds = {ErrorBoundSpec::absolute(1e-3)};
  o.warmup = 0;
  o.reps = 1;
  for (const auto& row : cmd_bench_codec(o)) {
    EXPECT_DOUBLE_EQ(row.constant_block_pct, 100.0) << row.codec;
    EXPECT_EQ(row.rel_or_abs, "ABS");
  }
}

TEST(BenchCodec, CsvSchemaIsStable) {
  CodecBenchOptions o;
  o.field = generate_field({SyntheticKind::Uniform, 4096, 1});
  o.bounds = {ErrorBoundSpec::relative(1e-2)};
  o.workers = {1, 2};
  o.warmup = 0;
  o.reps = 1;
  std::ostringstream out;
  write_codec_csv(out, cmd_bench_codec(o));
  auto lines = lines_of(out.str());
  ASSERT_GE(lines.size(), 2u);
  EXPECT_EQ(lines[0], kCodecCsvHeader);
  const std::size_t cols = split(lines[0]).size();
  EXPECT_EQ(cols, 11u);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i]).size(), cols) << lines[i];
}

// ---- collective bench ------------------------------------------------------------------

TEST(BenchCollective, BreakdownSumsToHundred) {
  CollectiveBenchOptions o;
  o.world.ranks = 4;
  o.collectives = {CollectiveOp::Allgather, CollectiveOp::Bcast, CollectiveOp::Scatter,
                   CollectiveOp::ReduceScatter, CollectiveOp::Allreduce};
  o.sizes = {64 * 1024};
  o.warmup = 0;
  o.reps = 1;
  auto rows = cmd_bench_collective(o);
  // Scatter has no cprp2p variant.
  ASSERT_EQ(rows.size(), 5u * 3u - 1u);
  for (const auto& r : rows) {
    double sum = r.compress_pct + r.commu_pct + r.comput_pct + r.other_pct;
    EXPECT_NEAR(sum, 100.0, 0.5) << r.collective << "/" << r.variant;
    EXPECT_EQ(r.ranks, 4);
    EXPECT_EQ(r.backend, "loopback");
    if (r.collective == "allgather" && r.variant == "z") {
      EXPECT_EQ(r.compress_ops, 1u);
    }
    if (r.variant == "plain") {
      EXPECT_EQ(r.compress_ops, 0u);
      if (r.collective == "allreduce" || r.collective == "reduce_scatter") {
        EXPECT_LE(r.max_abs_err, 1e-5) << r.collective;
      } else {
        EXPECT_EQ(r.max_abs_err, 0.0) << r.collective;
      }
    } else if (r.collective != "allreduce" && r.collective != "reduce_scatter") {
      EXPECT_LE(r.max_abs_err, (r.variant == "z" ? 1.0 : 3.0) * r.eb_abs) << r.collective << "/" << r.variant;
    }
  }
  std::ostringstream out;
  write_collective_csv(out, rows);
  auto lines = lines_of(out.str());
  EXPECT_EQ(lines[0], kCollectiveCsvHeader);
  EXPECT_EQ(lines.size(), rows.size() + 1);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(split(lines[i]).size(), split(lines[0]).size());
}

TEST(BenchCollective, SizesTimesVariantsOneRowEach) {
  CollectiveBenchOptions o;
  o.world.ranks = 2;
  o.sizes = {8192, 16384, 32768};
  o.variants = {Variant::Plain, Variant::Z};
  o.workers = {1, 2};
  o.warmup = 0;
  o.reps = 1;
  auto rows = cmd_bench_collective(o);
  // Plain once per size, Z once per worker count per size.
  EXPECT_EQ(rows.size(), 3u * (1u + 2u));
}

TEST(BenchCollective, TcpThreadsBackend) {
  CollectiveBenchOptions o;
  o.world.backend = Backend::Tcp;
  o.world.ranks = 3;
  o.sizes = {3 * 4096};
  o.warmup = 0;
  o.reps = 1;
  auto rows = cmd_bench_collective(o);
  ASSERT_EQ(rows.size(), 3u);
  for (auto& r : rows) EXPECT_EQ(r.backend, "tcp");
  EXPECT_EQ(rows[0].payload_bytes_sent, 2u * 2u * 4096u);
}

// ---- analyze-error ------------------------------------------------------------------------

TEST(AnalyzeError, MaxOnIdenticalInputsStaysWithinBound) {
  AnalyzeOptions o;
  o.kind = ReduceKind::Max;
  o.ranks = 4;
  o.length = 4096;
  o.identical_inputs = true;
  AnalyzeResult r = cmd_analyze_error(o);
  EXPECT_LE(r.report.max_abs_err, r.eb_abs);
  EXPECT_EQ(r.bound_violations, 0u);
  EXPECT_GT(r.theory_variance, 0.0);
}

TEST(AnalyzeError, ZeroFieldGivesAllZeroHistogram) {
  AnalyzeOptions o;
  o.ranks = 4;
  o.length = 4096;
  o.field_kind = SyntheticKind::Constant;
  o.amplitude = 0.0;
  AnalyzeResult r = cmd_analyze_error(o);
  EXPECT_EQ(r.report.max_abs_err, 0.0);
  ASSERT_EQ(r.histogram.size(), 1u);
  EXPECT_EQ(r.histogram[0].lo, 0.0);
  EXPECT_EQ(r.histogram[0].hi, 0.0);
  EXPECT_EQ(r.histogram[0].count, 4096u);
}

TEST(AnalyzeError, SumReportIsReproducibleAndBounded) {
  AnalyzeOptions o;
  o.ranks = 4;
  o.length = 8000;
  o.seed = 77;
  AnalyzeResult a = cmd_analyze_error(o);
  AnalyzeResult b = cmd_analyze_error(o);
  EXPECT_EQ(a.report.mean, b.report.mean);
  EXPECT_EQ(a.report.sigma, b.report.sigma);
  EXPECT_EQ(a.single.sigma, b.single.sigma);
  EXPECT_EQ(a.bound_violations, 0u);
  EXPECT_DOUBLE_EQ(a.report.interval.half_width, 2.0 * std::sqrt(4.0) * a.single.sigma);
  EXPECT_NEAR(a.bound_interval.half_width, (2.0 / 3.0) * 2.0 * a.eb_abs, 1e-15);
  EXPECT_DOUBLE_EQ(a.theory_variance, 4.0 * a.single.sigma * a.single.sigma);
  std::ostringstream out;
  write_error_report_csv(out, a);
  auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], kErrorReportCsvHeader);
  EXPECT_EQ(split(lines[1]).size(), split(lines[0]).size());
}

TEST(AnalyzeError, InvalidOptions) {
  AnalyzeOptions o;
  o.ranks = 1;
  EXPECT_THROW(cmd_analyze_error(o), ParameterError);
  o.ranks = 3;
  o.length = 100;
  EXPECT_THROW(cmd_analyze_error(o), ParameterError);
}

// ---- stacking ---------------------------------------------------------------------------

TEST(Stack, IdenticalImagesStackToScaledImage) {
  TempDir dir;
  StackOptions o;
  o.ranks = 4;
  o.width = 64;
  o.height = 32;
  o.identical_images = true;
  o.out_prefix = dir.file("stack");
  StackResult r = cmd_stack_images(o);
  auto img = generate_image(64, 32, o.seed);
  ASSERT_EQ(r.stacked.size(), img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    ASSERT_LE(std::fabs(r.stacked[i] - 4.0 * img.values()[i]), 4.0 * r.eb_abs + 1e-5);
  }
  EXPECT_GT(r.psnr, 40.0);
  PgmImage pgm = read_pgm(r.pgm_path);
  EXPECT_EQ(pgm.width, 64u);
  EXPECT_EQ(pgm.height, 32u);
  EXPECT_EQ(load_raw_f32(r.raw_path).size(), img.size());
}

TEST(Stack, SeedReproducible) {
  StackOptions o;
  o.ranks = 3;
  o.width = 48;
  o.height = 48;
  o.seed = 5;
  auto a = cmd_stack_images(o), b = cmd_stack_images(o);
  EXPECT_EQ(a.stacked, b.stacked);
  EXPECT_EQ(a.psnr, b.psnr);
}

// ---- launch -----------------------------------------------------------------------------

TEST(Launch, AllocatesDistinctPortsAndBuildsCommands) {
  TempDir dir;
  LaunchOptions o;
  o.ranks = 4;
  o.addrs_out = dir.file("addrs.txt");
  o.executable = "/bin/zccl";
  o.child_args = {"bench-collective", "--size", "4096"};
  std::vector<std::string> addrs;
  auto cmds = launch_commands(o, &addrs);
  ASSERT_EQ(cmds.size(), 4u);
  EXPECT_EQ(std::set<std::string>(addrs.begin(), addrs.end()).size(), 4u);
  EXPECT_EQ(read_address_file(o.addrs_out), addrs);
  for (std::size_t r = 0; r < 4; ++r) {
    const auto& c = cmds[r];
    EXPECT_EQ(c[0], "/bin/zccl");
    EXPECT_EQ(c[1], "bench-collective");
    std::vector<std::string> tail(c.end() - 8, c.end());
    EXPECT_EQ(tail, (std::vector<std::string>{"--backend", "tcp", "--ranks", "4", "--rank", std::to_string(r),
                                              "--addrs", o.addrs_out}));
  }
}

TEST(Launch, AddressFileValidation) {
  TempDir dir;
  std::ofstream(dir.file("dup.txt")) << "127.0.0.1:5000\n127.0.0.1:5001\n127.0.0.1:5000\n";
  EXPECT_THROW(read_address_file(dir.file("dup.txt")), ParameterError);
  std::ofstream(dir.file("one.txt")) << "127.0.0.1:5000\n";
  EXPECT_THROW(read_address_file(dir.file("one.txt")), ParameterError);
  std::ofstream(dir.file("gap.txt")) << "127.0.0.1:5000\n\n127.0.0.1:5001\n";
  EXPECT_THROW(read_address_file(dir.file("gap.txt")), ParameterError);
  std::ofstream(dir.file("ok.txt")) << "127.0.0.1:5000\n127.0.0.1:5001\n";
  EXPECT_EQ(read_address_file(dir.file("ok.txt")).size(), 2u);
  LaunchOptions o;
  o.addrs_file = dir.file("ok.txt");
  o.ranks = 3;
  EXPECT_THROW(launch_commands(o), ParameterError);
}

TEST(RunWorld, RejectsTinyWorlds) {
  EXPECT_THROW(run_world({Backend::Loopback, 1, -1, {}}, [](Communicator&) {}), ParameterError);
}

TEST(RunWorld, PropagatesRankErrors) {
  EXPECT_THROW(run_world({Backend::Loopback, 2, -1, {}},
                         [](Communicator& c) {
                           if (c.rank() == 1) throw OverflowError("boom");
                         }),
               OverflowError);
}

// ---- command line ---------------------------------------------------------------------------

TEST(Cli, BenchCodecWritesCsv) {
  TempDir dir;
  ASSERT_EQ(run_cli("bench-codec --size 65536 --warmup 0 --reps 1 --out " + dir.file("c.csv"), dir.file("log")), 0)
      << read_text(dir.file("log"));
  auto lines = lines_of(read_text(dir.file("c.csv")));
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0], kCodecCsvHeader);
}

TEST(Cli, BenchCollectiveWritesCsv) {
  TempDir dir;
  ASSERT_EQ(run_cli("bench-collective --ranks 3 --size 12288 --warmup 0 --reps 1 --collective allgather bcast "
                    "--out " + dir.file("k.csv"),
                    dir.file("log")),
            0)
      << read_text(dir.file("log"));
  auto lines = lines_of(read_text(dir.file("k.csv")));
  ASSERT_EQ(lines.size(), 7u);
  EXPECT_EQ(lines[0], kCollectiveCsvHeader);
}

TEST(Cli, AnalyzeErrorWritesReportAndHistogram) {
  TempDir dir;
  ASSERT_EQ(run_cli("analyze-error --ranks 4 --length 4000 --bins 8 --histogram " + dir.file("h.csv") +
                        " --out " + dir.file("r.csv"),
                    dir.file("log")),
            0)
      << read_text(dir.file("log"));
  auto h = lines_of(read_text(dir.file("h.csv")));
  ASSERT_EQ(h.size(), 9u);
  EXPECT_EQ(h[0], kHistogramCsvHeader);
  auto r = lines_of(read_text(dir.file("r.csv")));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], kErrorReportCsvHeader);
}

TEST(Cli, StackWritesOutputs) {
  TempDir dir;
  ASSERT_EQ(run_cli("stack --ranks 2 --width 32 --height 16 --out " + dir.file("s"), dir.file("log")), 0)
      << read_text(dir.file("log"));
  EXPECT_EQ(read_text(dir.file("s.pgm")).substr(0, 12), "P5\n32 16\n255");
  EXPECT_EQ(fs::file_size(dir.file("s.f32")), 32u * 16u * 4u);
  EXPECT_NE(read_text(dir.file("log")).find("psnr_db="), std::string::npos);
}

TEST(Cli, LaunchRunsTcpRanks) {
  TempDir dir;
  ASSERT_EQ(run_cli("launch --ranks 3 --addrs-out " + dir.file("a.txt") +
                        " -- bench-collective --size 12288 --warmup 0 --reps 1 --out " + dir.file("t.csv"),
                    dir.file("log")),
            0)
      << read_text(dir.file("log"));
  auto lines = lines_of(read_text(dir.file("t.csv")));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_NE(lines[1].find(",tcp,"), std::string::npos);
}

TEST(Cli, LaunchPrintOnly) {
  TempDir dir;
  ASSERT_EQ(run_cli("launch --print --ranks 2 --addrs-out " + dir.file("a.txt") + " -- bench-collective",
                    dir.file("log")),
            0);
  auto lines = lines_of(read_text(dir.file("log")));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_NE(lines[1].find("--rank 1"), std::string::npos);
}

TEST(Cli, BadArgumentsExitWithUsageError) {
  TempDir dir;
  EXPECT_EQ(run_cli("bench-codec --bound rel:nope", dir.file("log")), 2);
  std::ofstream(dir.file("dup.txt")) << "127.0.0.1:5000\n127.0.0.1:5000\n";
  EXPECT_EQ(run_cli("launch --addrs " + dir.file("dup.txt") + " -- bench-collective", dir.file("log")), 2);
  write_bytes(dir.file("bad.f32"), std::vector<std::uint8_t>(10, 0));
  EXPECT_NE(run_cli("bench-codec --input " + dir.file("bad.f32"), dir.file("log")), 0);
}

}  // namespace
}  // namespace zccl
