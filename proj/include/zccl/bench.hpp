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

#pragma once

// Benchmark harness: synthetic fields, raw/PGM/CSV I/O and the commands
// behind the zccl command-line tool.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zccl/codec_chunked.hpp"
#include "zccl/collectives.hpp"
#include "zccl/error_stats.hpp"
#include "zccl/field.hpp"
#include "zccl/transport.hpp"

namespace zccl {

enum class SyntheticKind { Constant, Uniform, GaussianWalk, SineMix };

const char* to_string(SyntheticKind kind) noexcept;
SyntheticKind parse_synthetic_kind(const std::string& name);
CodecKind parse_codec_kind(const std::string& name);
Variant parse_variant(const std::string& name);
ReduceKind parse_reduce_kind(const std::string& name);
Backend parse_backend(const std::string& name);
// "rel:1e-4" or "abs:0.5".
ErrorBoundSpec parse_bound(const std::string& text);
std::string format_bound(const ErrorBoundSpec& spec);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::SineMix;
  std::size_t length = 0;
  std::uint64_t seed = 1;
  double amplitude = 1.0;
  double offset = 0.0;
  // GaussianWalk step standard deviation, relative to amplitude.
  double step = 0.01;
};

// Deterministic in every field of `spec`. Throws ParameterError on length 0.
FloatField generate_field(const SyntheticSpec& spec);

// Smooth 2-D pattern with seeded phases and mild noise; dims {height, width}.
FloatField generate_image(std::size_t width, std::size_t height, std::uint64_t seed);

// Little-endian 32-bit floats. `count` reads only a prefix. Throws
// IngestionError for unreadable files, lengths not divisible by 4, short
// files and NaN/Inf values (with the first offending index).
FloatField load_raw_f32(const std::string& path, std::optional<std::size_t> count = std::nullopt);
void save_raw_f32(const std::string& path, std::span<const float> values);

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned max_value = 0;
  std::vector<std::uint8_t> pixels;
};

// Binary PGM "P5 W H 255" with min-max normalization to 0..255.
void write_pgm(const std::string& path, std::span<const float> values, std::size_t width, std::size_t height);
PgmImage read_pgm(const std::string& path);

struct CodecRow {
  std::string codec;
  std::string mode;        // serial or parallel
  std::string rel_or_abs;  // REL or ABS
  double bound = 0.0;
  double compress_gbps = 0.0;
  double decompress_gbps = 0.0;
  double ratio = 0.0;
  double constant_block_pct = 0.0;
  unsigned workers = 1;
  double eb_abs = 0.0;
  double max_abs_err = 0.0;
};

struct CollectiveRow {
  std::string collective;
  std::string variant;
  int ranks = 0;
  std::uint64_t data_bytes = 0;
  double total_s = 0.0;
  double compress_pct = 0.0;
  double commu_pct = 0.0;
  double comput_pct = 0.0;
  double other_pct = 0.0;
  std::string backend;
  unsigned workers = 1;
  std::uint64_t compress_ops = 0;
  std::uint64_t decompress_ops = 0;
  std::uint64_t rounds = 0;
  std::uint64_t payload_bytes_sent = 0;
  std::uint64_t payload_bytes_received = 0;
  std::uint64_t transport_bytes_sent = 0;
  double eb_abs = 0.0;
  double max_abs_err = 0.0;
};

extern const char* const kCodecCsvHeader;
extern const char* const kCollectiveCsvHeader;
extern const char* const kHistogramCsvHeader;
extern const char* const kErrorReportCsvHeader;

void write_codec_csv(std::ostream& out, const std::vector<CodecRow>& rows);
void write_collective_csv(std::ostream& out, const std::vector<CollectiveRow>& rows);

// Which ranks this process hosts. Loopback always hosts all ranks as
// threads. Tcp with rank < 0 hosts all ranks as threads over localhost
// sockets; with rank >= 0 it hosts only that rank and needs `addresses`.
struct WorldOptions {
  Backend backend = Backend::Loopback;
  int ranks = 4;
  int rank = -1;
  std::vector<std::string> addresses;
};

// Runs fn on every hosted rank. A rank's communicator is closed when its fn
// returns or throws; the first exception by rank is rethrown.
void run_world(const WorldOptions& world, const std::function<void(Communicator&)>& fn);

struct CodecBenchOptions {
  FloatField field;
  std::vector<ErrorBoundSpec> bounds{ErrorBoundSpec::relative(1e-1), ErrorBoundSpec::relative(1e-2),
                                     ErrorBoundSpec::relative(1e-3), ErrorBoundSpec::relative(1e-4)};
  std::vector<CodecKind> codecs{CodecKind::ZLite, CodecKind::Szx};
  std::vector<unsigned> workers{1};
  int warmup = 10;
  int reps = 10;
};

// One row per (codec, bound, worker count). Codec errors propagate.
std::vector<CodecRow> cmd_bench_codec(const CodecBenchOptions& options);

enum class CollectiveOp { Allgather, Bcast, Scatter, ReduceScatter, Allreduce };
const char* to_string(CollectiveOp op) noexcept;
CollectiveOp parse_collective_op(const std::string& name);

struct CollectiveBenchOptions {
  WorldOptions world;
  std::vector<CollectiveOp> collectives{CollectiveOp::Allreduce};
  std::vector<Variant> variants{Variant::Plain, Variant::Cprp2p, Variant::Z};
  // Z rows are repeated for every worker count; other variants use 1.
  std::vector<unsigned> workers{1};
  // Bytes of input per rank (root data for bcast/scatter).
  std::vector<std::uint64_t> sizes{std::uint64_t{1} << 20};
  SyntheticKind kind = SyntheticKind::SineMix;
  ErrorBoundSpec bound = ErrorBoundSpec::relative(1e-4);
  CodecKind codec = CodecKind::ZLite;
  ReduceKind reduce = ReduceKind::Sum;
  std::uint64_t seed = 1;
  int warmup = 10;
  int reps = 10;
};

// One row per (collective, variant, workers, size) from rank 0's view,
// phase times summed over the measured repetitions. Processes hosting only
// a nonzero rank return no rows.
std::vector<CollectiveRow> cmd_bench_collective(const CollectiveBenchOptions& options);

struct AnalyzeOptions {
  ReduceKind kind = ReduceKind::Sum;
  int ranks = 16;
  std::size_t length = 100000;  // values per rank
  ErrorBoundSpec bound = ErrorBoundSpec::relative(1e-4);
  SyntheticKind field_kind = SyntheticKind::SineMix;
  double amplitude = 1.0;
  int trials = 1;
  std::uint64_t seed = 1;
  // Every rank contributes the same field.
  bool identical_inputs = false;
  std::size_t histogram_bins = 64;
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
};

struct AnalyzeResult {
  ReduceKind kind = ReduceKind::Sum;
  int ranks = 0;
  double eb_abs = 0.0;
  // Fit of single-compression errors of the inputs at eb_abs.
  NormalFit single;
  // Final errors against the 64-bit oracle; interval is +/-2 sqrt(n) sigma_single.
  ErrorStatsReport report;
  // Coverage of +/-(2/3) sqrt(n) eb_abs.
  Interval bound_interval;
  double bound_coverage = 0.0;
  // Model variance for `kind`: n sigma^2, sigma^2 / n, or the max/min chain.
  double theory_variance = 0.0;
  // Elements with |error| > n * eb_abs.
  std::uint64_t bound_violations = 0;
  std::vector<HistogramBin> histogram;
};

AnalyzeResult cmd_analyze_error(const AnalyzeOptions& options);
std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins);
void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins);
void write_error_report_csv(std::ostream& out, const AnalyzeResult& result);

struct StackOptions {
  int ranks = 8;
  std::size_t width = 512;
  std::size_t height = 512;
  ErrorBoundSpec bound = ErrorBoundSpec::relative(1e-4);
  std::uint64_t seed = 1;
  bool identical_images = false;
  // Output path prefix; writes <prefix>.f32 and <prefix>.pgm when nonempty.
  std::string out_prefix;
};

struct StackResult {
  std::vector<float> stacked;
  std::vector<double> oracle;
  double eb_abs = 0.0;
  double psnr = 0.0;
  double nrmse = 0.0;
  double max_abs_err = 0.0;
  std::string raw_path;
  std::string pgm_path;
};

StackResult cmd_stack_images(const StackOptions& options);

struct LaunchOptions {
  int ranks = 0;
  // Address file, one host:port per line; empty allocates localhost ports
  // and writes them to `addrs_out`.
  std::string addrs_file;
  std::string addrs_out;
  std::string executable;
  // Arguments placed before the per-rank "--backend tcp --rank R --addrs F".
  std::vector<std::string> child_args;
  bool print_only = false;
};

// Reads an address file; throws ParameterError on duplicates or bad lines.
std::vector<std::string> read_address_file(const std::string& path);

// Per-rank command lines.
std::vector<std::vector<std::string>> launch_commands(const LaunchOptions& options,
                                                      std::vector<std::string>* addresses = nullptr);

// Spawns every rank process and waits; returns the first nonzero exit code,
// or 0. With print_only writes the commands to `out` instead.
int cmd_launch(const LaunchOptions& options, std::ostream& out);

}  // namespace zccl
