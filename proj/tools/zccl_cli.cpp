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

// zccl command-line tool: codec and collective benchmarks, error analysis,
// image stacking and TCP process launching.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "zccl/bench.hpp"
#include "zccl/error.hpp"

namespace {

using namespace zccl;

// Writes to `path`, or stdout when empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw Error("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

template <typename T, typename Parse>
std::vector<T> parse_all(const std::vector<std::string>& names, Parse parse) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

std::string self_executable(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  return ec ? std::string(argv0) : p.string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-bounded compression for collective communication"};
  app.require_subcommand(1);

  // bench-codec
  auto* codec_cmd = app.add_subcommand("bench-codec", "Codec throughput and ratio per bound");
  std::string input;
  std::size_t count = 0;
  std::string kind_name = "sine_mix";
  std::uint64_t size_bytes = std::uint64_t{64} << 20;
  std::uint64_t seed = 1;
  std::vector<std::string> bound_names{"rel:1e-1", "rel:1e-2", "rel:1e-3", "rel:1e-4"};
  std::vector<std::string> codec_names{"zlite", "szx"};
  std::vector<unsigned> workers{1};
  int warmup = 10, reps = 10;
  std::string out_path;
  codec_cmd->add_option("--input", input, "Raw little-endian f32 file (default: synthetic)");
  codec_cmd->add_option("--count", count, "Read only the first COUNT values of --input");
  codec_cmd->add_option("--kind", kind_name, "Synthetic kind: constant, uniform, gaussian_walk, sine_mix");
  codec_cmd->add_option("--size", size_bytes, "Synthetic field size in bytes");
  codec_cmd->add_option("--seed", seed, "Synthetic seed");
  codec_cmd->add_option("--bound", bound_names, "Bounds, rel:X or abs:X");
  codec_cmd->add_option("--codec", codec_names, "Codecs: zlite, szx");
  codec_cmd->add_option("--workers", workers, "Worker counts");
  codec_cmd->add_option("--warmup", warmup, "Warm-up repetitions");
  codec_cmd->add_option("--reps", reps, "Measured repetitions");
  codec_cmd->add_option("--out", out_path, "CSV output (default: stdout)");

  // bench-collective
  auto* coll_cmd = app.add_subcommand("bench-collective", "Collective timing breakdown per variant");
  std::string backend_name = "loopback";
  int ranks = 4;
  int rank = -1;
  std::string addrs_file;
  std::vector<std::string> collective_names{"allreduce"};
  std::vector<std::string> variant_names{"plain", "cprp2p", "z"};
  std::vector<std::uint64_t> sizes{std::uint64_t{1} << 20};
  std::string bound_name = "rel:1e-4";
  std::string codec_name = "zlite";
  std::string reduce_name = "sum";
  std::vector<unsigned> coll_workers{1};
  coll_cmd->add_option("--backend", backend_name, "loopback or tcp");
  coll_cmd->add_option("--ranks", ranks, "World size");
  coll_cmd->add_option("--rank", rank, "This process's rank (tcp, one rank per process)");
  coll_cmd->add_option("--addrs", addrs_file, "Address file, one host:port per line");
  coll_cmd->add_option("--collective", collective_names, "allgather, bcast, scatter, reduce_scatter, allreduce");
  coll_cmd->add_option("--variant", variant_names, "plain, cprp2p, z");
  coll_cmd->add_option("--workers", coll_workers, "Codec worker counts for z");
  coll_cmd->add_option("--size", sizes, "Input bytes per rank");
  coll_cmd->add_option("--kind", kind_name, "Synthetic kind");
  coll_cmd->add_option("--bound", bound_name, "rel:X or abs:X");
  coll_cmd->add_option("--codec", codec_name, "zlite or szx");
  coll_cmd->add_option("--reduce", reduce_name, "sum, max, min, average");
  coll_cmd->add_option("--seed", seed, "Input seed");
  coll_cmd->add_option("--warmup", warmup, "Warm-up repetitions");
  coll_cmd->add_option("--reps", reps, "Measured repetitions");
  coll_cmd->add_option("--out", out_path, "CSV output (default: stdout)");

  // analyze-error
  auto* err_cmd = app.add_subcommand("analyze-error", "Allreduce error against a 64-bit oracle");
  std::size_t length = 100000;
  int trials = 1;
  bool identical = false;
  std::size_t bins = 64;
  std::string histogram_path;
  int err_ranks = 16;
  double amplitude = 1.0;
  err_cmd->add_option("--reduce", reduce_name, "sum, max, min, average");
  err_cmd->add_option("--ranks", err_ranks, "World size");
  err_cmd->add_option("--length", length, "Values per rank");
  err_cmd->add_option("--bound", bound_name, "rel:X or abs:X");
  err_cmd->add_option("--kind", kind_name, "Synthetic kind");
  err_cmd->add_option("--amplitude", amplitude, "Synthetic amplitude (0 gives a zero field with --kind constant)");
  err_cmd->add_option("--trials", trials, "Independent trials");
  err_cmd->add_option("--seed", seed, "Input seed");
  err_cmd->add_flag("--identical", identical, "Give every rank the same input");
  err_cmd->add_option("--bins", bins, "Histogram bins");
  err_cmd->add_option("--histogram", histogram_path, "Histogram CSV output");
  err_cmd->add_option("--out", out_path, "Report CSV output (default: stdout)");

  // stack
  auto* stack_cmd = app.add_subcommand("stack", "Stack synthetic images with a compressed allreduce");
  int stack_ranks = 8;
  std::size_t width = 512, height = 512;
  stack_cmd->add_option("--ranks", stack_ranks, "Images, one per rank");
  stack_cmd->add_option("--width", width, "Image width");
  stack_cmd->add_option("--height", height, "Image height");
  stack_cmd->add_option("--bound", bound_name, "rel:X or abs:X");
  stack_cmd->add_option("--seed", seed, "Image seed");
  stack_cmd->add_flag("--identical", identical, "Give every rank the same image");
  stack_cmd->add_option("--out", out_path, "Output prefix for .f32 and .pgm files");

  // launch
  auto* launch_cmd = app.add_subcommand("launch", "Start one process per rank for a TCP run");
  int launch_ranks = 0;
  std::string addrs_out = "zccl-addrs.txt";
  bool print_only = false;
  std::vector<std::string> child_args;
  launch_cmd->add_option("--ranks", launch_ranks, "World size (localhost ports are allocated)");
  launch_cmd->add_option("--addrs", addrs_file, "Address file; overrides port allocation");
  launch_cmd->add_option("--addrs-out", addrs_out, "Where allocated addresses are written");
  launch_cmd->add_flag("--print", print_only, "Print the per-rank commands instead of running them");
  launch_cmd->add_option("args", child_args, "Subcommand and flags for every rank, after --");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*codec_cmd) {
      CodecBenchOptions o;
      if (!input.empty()) {
        o.field = load_raw_f32(input, count ? std::optional<std::size_t>(count) : std::nullopt);
      } else {
        o.field = generate_field({parse_synthetic_kind(kind_name), static_cast<std::size_t>(size_bytes / 4), seed});
      }
      o.bounds = parse_all<ErrorBoundSpec>(bound_names, parse_bound);
      o.codecs = parse_all<CodecKind>(codec_names, parse_codec_kind);
      o.workers = workers;
      o.warmup = warmup;
      o.reps = reps;
      auto rows = cmd_bench_codec(o);
      Output out(out_path);
      write_codec_csv(out.stream(), rows);
    } else if (*coll_cmd) {
      CollectiveBenchOptions o;
      o.world.backend = parse_backend(backend_name);
      o.world.ranks = ranks;
      o.world.rank = rank;
      if (!addrs_file.empty()) {
        o.world.addresses = read_address_file(addrs_file);
        if (o.world.ranks != static_cast<int>(o.world.addresses.size())) {
          throw ParameterError("--ranks does not match the address file");
        }
      }
      if (rank >= 0 && o.world.backend != Backend::Tcp) throw ParameterError("--rank applies to the tcp backend");
      o.collectives = parse_all<CollectiveOp>(collective_names, parse_collective_op);
      o.variants = parse_all<Variant>(variant_names, parse_variant);
      o.workers = coll_workers;
      o.sizes = sizes;
      o.kind = parse_synthetic_kind(kind_name);
      o.bound = parse_bound(bound_name);
      o.codec = parse_codec_kind(codec_name);
      o.reduce = parse_reduce_kind(reduce_name);
      o.seed = seed;
      o.warmup = warmup;
      o.reps = reps;
      auto rows = cmd_bench_collective(o);
      if (rank <= 0) {
        Output out(out_path);
        write_collective_csv(out.stream(), rows);
      }
    } else if (*err_cmd) {
      AnalyzeOptions o;
      o.kind = parse_reduce_kind(reduce_name);
      o.ranks = err_ranks;
      o.length = length;
      o.bound = parse_bound(bound_name);
      o.field_kind = parse_synthetic_kind(kind_name);
      o.amplitude = amplitude;
      o.trials = trials;
      o.seed = seed;
      o.identical_inputs = identical;
      o.histogram_bins = bins;
      AnalyzeResult r = cmd_analyze_error(o);
      if (!histogram_path.empty()) {
        Output h(histogram_path);
        write_histogram_csv(h.stream(), r.histogram);
      }
      Output out(out_path);
      write_error_report_csv(out.stream(), r);
    } else if (*stack_cmd) {
      StackOptions o;
      o.ranks = stack_ranks;
      o.width = width;
      o.height = height;
      o.bound = parse_bound(bound_name);
      o.seed = seed;
      o.identical_images = identical;
      o.out_prefix = out_path;
      StackResult r = cmd_stack_images(o);
      std::cout << "ranks=" << o.ranks << " size=" << width << "x" << height << " eb_abs=" << r.eb_abs
                << " psnr_db=" << r.psnr << " nrmse=" << r.nrmse << " max_abs_err=" << r.max_abs_err
                << " reference_psnr_db=49.1\n";
      if (!r.pgm_path.empty()) std::cout << "wrote " << r.raw_path << " " << r.pgm_path << "\n";
    } else if (*launch_cmd) {
      LaunchOptions o;
      o.ranks = launch_ranks;
      o.addrs_file = addrs_file;
      o.addrs_out = addrs_out;
      o.executable = self_executable(argv[0]);
      o.child_args = child_args;
      o.print_only = print_only;
      return cmd_launch(o, std::cout);
    }
  } catch (const ParameterError& e) {
    std::cerr << "zccl: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "zccl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
