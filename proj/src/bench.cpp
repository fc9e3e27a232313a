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

#include "zccl/bench.hpp"

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "zccl/codec_core.hpp"
#include "zccl/codec_szx.hpp"
#include "zccl/error.hpp"

extern char** environ;

namespace zccl {
namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

template <typename E, std::size_t N>
E lookup(const std::string& name, const std::pair<const char*, E> (&table)[N], const char* what) {
  std::string key = lower(name);
  for (const auto& [text, value] : table) {
    if (key == text) return value;
  }
  throw ParameterError(std::string("unknown ") + what + " '" + name + "'");
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open '" + path + "'");
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write '" + path + "'");
}

double max_abs_diff(std::span<const float> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
  return m;
}

std::vector<double> widen(std::span<const float> v) { return {v.begin(), v.end()}; }

// 64-bit oracle of an elementwise reduction across `inputs`.
std::vector<double> reduce_oracle(const std::vector<std::vector<float>>& inputs, ReduceKind kind) {
  std::vector<double> acc = widen(inputs[0]);
  for (std::size_t r = 1; r < inputs.size(); ++r) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
      double x = inputs[r][i];
      switch (kind) {
        case ReduceKind::Sum:
        case ReduceKind::Average: acc[i] += x; break;
        case ReduceKind::Max: acc[i] = std::max(acc[i], x); break;
        case ReduceKind::Min: acc[i] = std::min(acc[i], x); break;
      }
    }
  }
  if (kind == ReduceKind::Average) {
    for (double& v : acc) v /= static_cast<double>(inputs.size());
  }
  return acc;
}

}  // namespace

// ---- names -----------------------------------------------------------------

const char* to_string(SyntheticKind kind) noexcept {
  switch (kind) {
    case SyntheticKind::Constant: return "constant";
    case SyntheticKind::Uniform: return "uniform";
    case SyntheticKind::GaussianWalk: return "gaussian_walk";
    case SyntheticKind::SineMix: return "sine_mix";
  }
  return "?";
}

SyntheticKind parse_synthetic_kind(const std::string& name) {
  static const std::pair<const char*, SyntheticKind> t[] = {
      {"constant", SyntheticKind::Constant}, {"uniform", SyntheticKind::Uniform},
      {"gaussian_walk", SyntheticKind::GaussianWalk}, {"walk", SyntheticKind::GaussianWalk},
      {"sine_mix", SyntheticKind::SineMix}, {"sine", SyntheticKind::SineMix}};
  return lookup(name, t, "field kind");
}

CodecKind parse_codec_kind(const std::string& name) {
  static const std::pair<const char*, CodecKind> t[] = {{"zlite", CodecKind::ZLite}, {"szx", CodecKind::Szx}};
  return lookup(name, t, "codec");
}

Variant parse_variant(const std::string& name) {
  static const std::pair<const char*, Variant> t[] = {
      {"plain", Variant::Plain}, {"cprp2p", Variant::Cprp2p}, {"z", Variant::Z}};
  return lookup(name, t, "variant");
}

ReduceKind parse_reduce_kind(const std::string& name) {
  static const std::pair<const char*, ReduceKind> t[] = {{"sum", ReduceKind::Sum},
                                                         {"max", ReduceKind::Max},
                                                         {"min", ReduceKind::Min},
                                                         {"average", ReduceKind::Average},
                                                         {"avg", ReduceKind::Average}};
  return lookup(name, t, "reduction");
}

Backend parse_backend(const std::string& name) {
  static const std::pair<const char*, Backend> t[] = {{"loopback", Backend::Loopback}, {"tcp", Backend::Tcp}};
  return lookup(name, t, "backend");
}

const char* to_string(CollectiveOp op) noexcept {
  switch (op) {
    case CollectiveOp::Allgather: return "allgather";
    case CollectiveOp::Bcast: return "bcast";
    case CollectiveOp::Scatter: return "scatter";
    case CollectiveOp::ReduceScatter: return "reduce_scatter";
    case CollectiveOp::Allreduce: return "allreduce";
  }
  return "?";
}

CollectiveOp parse_collective_op(const std::string& name) {
  static const std::pair<const char*, CollectiveOp> t[] = {
      {"allgather", CollectiveOp::Allgather}, {"bcast", CollectiveOp::Bcast},
      {"scatter", CollectiveOp::Scatter}, {"reduce_scatter", CollectiveOp::ReduceScatter},
      {"allreduce", CollectiveOp::Allreduce}};
  return lookup(name, t, "collective");
}

ErrorBoundSpec parse_bound(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw ParameterError("bound must look like rel:1e-4 or abs:1e-4, got '" + text + "'");
  std::string mode = lower(text.substr(0, colon));
  std::string value = text.substr(colon + 1);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    throw ParameterError("bad bound value '" + value + "'");
  }
  ErrorBoundSpec spec;
  if (mode == "rel") spec = ErrorBoundSpec::relative(v);
  else if (mode == "abs") spec = ErrorBoundSpec::absolute(v);
  else throw ParameterError("bound mode must be rel or abs, got '" + mode + "'");
  spec.validate();
  return spec;
}

std::string format_bound(const ErrorBoundSpec& spec) {
  return std::string(spec.mode == BoundMode::Relative ? "rel:" : "abs:") + num(spec.value);
}

// ---- synthetic data --------------------------------------------------------

FloatField generate_field(const SyntheticSpec& spec) {
  if (spec.length == 0) throw ParameterError("synthetic field length must be positive");
  std::mt19937_64 rng(spec.seed);
  std::vector<float> v(spec.length);
  const double a = spec.amplitude;
  switch (spec.kind) {
    case SyntheticKind::Constant:
      std::fill(v.begin(), v.end(), static_cast<float>(spec.offset + a));
      break;
    case SyntheticKind::Uniform: {
      std::uniform_real_distribution<double> u(spec.offset - a, spec.offset + a);
      for (float& x : v) x = static_cast<float>(u(rng));
      break;
    }
    case SyntheticKind::GaussianWalk: {
      std::normal_distribution<double> step(0.0, spec.step * a);
      double x = spec.offset;
      for (float& out : v) {
        x += step(rng);
        out = static_cast<float>(x);
      }
      break;
    }
    case SyntheticKind::SineMix: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      double freq[4], phase[4], weight[4];
      for (int k = 0; k < 4; ++k) {
        freq[k] = (1.0 + 7.0 * u(rng)) * std::ldexp(1.0, 2 * k);
        phase[k] = 2.0 * std::numbers::pi * u(rng);
        weight[k] = std::ldexp(1.0, -k);
      }
      std::normal_distribution<double> noise(0.0, 1e-3 * a);
      const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(spec.length, 1024));
      for (std::size_t i = 0; i < v.size(); ++i) {
        double t = static_cast<double>(i) * inv;
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += weight[k] * std::sin(2.0 * std::numbers::pi * freq[k] * t + phase[k]);
        v[i] = static_cast<float>(spec.offset + a * s / 1.875 + noise(rng));
      }
      break;
    }
  }
  return FloatField(std::move(v));
}

FloatField generate_image(std::size_t width, std::size_t height, std::uint64_t seed) {
  if (width == 0 || height == 0) throw ParameterError("image dimensions must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double fx[3], fy[3], phase[3];
  for (int k = 0; k < 3; ++k) {
    fx[k] = 1.0 + 5.0 * u(rng);
    fy[k] = 1.0 + 5.0 * u(rng);
    phase[k] = 2.0 * std::numbers::pi * u(rng);
  }
  double cx = u(rng), cy = u(rng);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<float> v(width * height);
  for (std::size_t y = 0; y < height; ++y) {
    double ty = static_cast<double>(y) / static_cast<double>(height);
    for (std::size_t x = 0; x < width; ++x) {
      double tx = static_cast<double>(x) / static_cast<double>(width);
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += std::sin(2.0 * std::numbers::pi * (fx[k] * tx + fy[k] * ty) + phase[k]);
      double d2 = (tx - cx) * (tx - cx) + (ty - cy) * (ty - cy);
      s += 2.0 * std::exp(-d2 / 0.01);
      v[y * width + x] = static_cast<float>(s + noise(rng));
    }
  }
  return FloatField(std::move(v), {height, width});
}

// ---- raw / PGM -------------------------------------------------------------

FloatField load_raw_f32(const std::string& path, std::optional<std::size_t> count) {
  Bytes bytes = read_file(path);
  if (bytes.size() % 4 != 0) {
    throw IngestionError("'" + path + "' has " + std::to_string(bytes.size()) +
                         " bytes, not a multiple of 4");
  }
  std::size_t available = bytes.size() / 4;
  std::size_t n = count.value_or(available);
  if (n > available) {
    throw IngestionError("'" + path + "' holds " + std::to_string(available) + " values, " +
                         std::to_string(n) + " requested");
  }
  if (n == 0) throw IngestionError("'" + path + "' contains no values");
  std::vector<float> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = get_f32(bytes.data() + 4 * i);
  std::size_t bad = first_non_finite(v);
  if (bad != n) {
    throw IngestionError("'" + path + "': non-finite value at index " + std::to_string(bad), bad);
  }
  return FloatField(std::move(v));
}

void save_raw_f32(const std::string& path, std::span<const float> values) {
  Bytes bytes;
  bytes.reserve(values.size() * 4);
  for (float x : values) put_f32(bytes, x);
  write_file(path, bytes);
}

void write_pgm(const std::string& path, std::span<const float> values, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || width * height != values.size()) {
    throw ParameterError("PGM dimensions do not match the value count");
  }
  ValueRange r = value_range(values);
  double scale = r.width() > 0.0 ? 255.0 / r.width() : 0.0;
  std::string head = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  Bytes bytes(head.begin(), head.end());
  for (float x : values) {
    double p = std::round((static_cast<double>(x) - r.min) * scale);
    bytes.push_back(static_cast<std::uint8_t>(std::clamp(p, 0.0, 255.0)));
  }
  write_file(path, bytes);
}

PgmImage read_pgm(const std::string& path) {
  Bytes bytes = read_file(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space();
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
    return t;
  };
  auto number = [&](const char* what) {
    std::string t = token();
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw IngestionError("'" + path + "': bad PGM " + what);
    }
    return std::stoull(t);
  };
  if (token() != "P5") throw IngestionError("'" + path + "' is not a binary PGM");
  PgmImage img;
  img.width = number("width");
  img.height = number("height");
  img.max_value = static_cast<unsigned>(number("max value"));
  if (img.max_value == 0 || img.max_value > 255) throw IngestionError("'" + path + "': unsupported PGM max value");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw IngestionError("'" + path + "': truncated PGM header");
  ++pos;
  if (bytes.size() - pos != img.width * img.height) throw IngestionError("'" + path + "': PGM pixel count mismatch");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

// ---- CSV -------------------------------------------------------------------

const char* const kCodecCsvHeader =
    "codec,mode,rel_or_abs,bound,compress_throughput_gbps,decompress_throughput_gbps,ratio,"
    "constant_block_pct,workers,eb_abs,max_abs_err";
const char* const kCollectiveCsvHeader =
    "collective,variant,N,data_bytes,total_s,compress_pct,commu_pct,comput_pct,other_pct,backend,workers,"
    "compress_ops,decompress_ops,rounds,payload_bytes_sent,payload_bytes_received,transport_bytes_sent,eb_abs,"
    "max_abs_err";
const char* const kHistogramCsvHeader = "bin_lo,bin_hi,count";
const char* const kErrorReportCsvHeader =
    "kind,N,eb_abs,samples,nrmse,psnr,max_abs_err,mean,sigma,variance,single_mean,single_sigma,"
    "sigma_interval,sigma_coverage,bound_interval,bound_coverage,theory_variance,variance_ratio,bound_violations";

void write_codec_csv(std::ostream& out, const std::vector<CodecRow>& rows) {
  out << kCodecCsvHeader << '\n';
  for (const CodecRow& r : rows) {
    out << r.codec << ',' << r.mode << ',' << r.rel_or_abs << ',' << num(r.bound) << ',' << num(r.compress_gbps)
        << ',' << num(r.decompress_gbps) << ',' << num(r.ratio) << ',' << num(r.constant_block_pct) << ','
        << r.workers << ',' << num(r.eb_abs) << ',' << num(r.max_abs_err) << '\n';
  }
}

void write_collective_csv(std::ostream& out, const std::vector<CollectiveRow>& rows) {
  out << kCollectiveCsvHeader << '\n';
  for (const CollectiveRow& r : rows) {
    out << r.collective << ',' << r.variant << ',' << r.ranks << ',' << r.data_bytes << ',' << num(r.total_s)
        << ',' << num(r.compress_pct) << ',' << num(r.commu_pct) << ',' << num(r.comput_pct) << ','
        << num(r.other_pct) << ',' << r.backend << ',' << r.workers << ',' << r.compress_ops << ','
        << r.decompress_ops << ',' << r.rounds << ',' << r.payload_bytes_sent << ',' << r.payload_bytes_received
        << ',' << r.transport_bytes_sent << ',' << num(r.eb_abs) << ',' << num(r.max_abs_err) << '\n';
  }
}

// ---- world -----------------------------------------------------------------

void run_world(const WorldOptions& world, const std::function<void(Communicator&)>& fn) {
  if (world.ranks < 2) throw ParameterError("a world needs at least 2 ranks");
  auto tcp_config = [&](int rank, const std::vector<std::string>& addrs) {
    WorldConfig cfg;
    cfg.backend = Backend::Tcp;
    cfg.rank = rank;
    cfg.world_size = world.ranks;
    cfg.addresses = addrs;
    return cfg;
  };
  if (world.backend == Backend::Tcp && world.rank >= 0) {
    if (world.addresses.empty()) throw ParameterError("a single-rank TCP process needs an address list");
    Communicator comm = connect_world(tcp_config(world.rank, world.addresses));
    fn(comm);
    return;
  }

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(world.ranks));
  std::vector<std::string> addrs;
  std::vector<std::thread> threads;
  auto body = [&](int r, auto make_comm) {
    try {
      Communicator comm = make_comm();
      fn(comm);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  };
  if (world.backend == Backend::Loopback) {
    auto comms = make_loopback_world(world.ranks);
    for (int r = 0; r < world.ranks; ++r) {
      threads.emplace_back([&, r, c = std::move(comms[static_cast<std::size_t>(r)])]() mutable {
        body(r, [&] { return std::move(c); });
      });
    }
  } else {
    addrs = world.addresses.empty() ? allocate_local_addresses(world.ranks) : world.addresses;
    for (int r = 0; r < world.ranks; ++r) {
      threads.emplace_back([&, r] { body(r, [&] { return connect_world(tcp_config(r, addrs)); }); });
    }
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- bench-codec -----------------------------------------------------------

std::vector<CodecRow> cmd_bench_codec(const CodecBenchOptions& options) {
  if (options.field.empty()) throw ParameterError("bench-codec needs a nonempty field");
  if (options.reps < 1 || options.warmup < 0) throw ParameterError("repetition counts out of range");
  std::span<const float> values = options.field.values();
  const double gb = static_cast<double>(values.size_bytes()) / 1e9;
  std::vector<CodecRow> rows;
  for (CodecKind codec : options.codecs) {
    for (const ErrorBoundSpec& bound : options.bounds) {
      bound.validate();
      const float eb = resolve_error_bound(bound, values);
      for (unsigned workers : options.workers) {
        if (workers == 0) throw ParameterError("worker count must be positive");
        if (codec == CodecKind::Szx && workers > 1) continue;
        CodecParams params;
        params.parallelism = workers;
        auto run_compress = [&] {
          return codec == CodecKind::ZLite ? compress(values, eb, params).frame.bytes
                                           : compress_szx(values, eb).frame.bytes;
        };
        auto run_decompress = [&](const Bytes& frame) {
          return codec == CodecKind::ZLite ? decompress(frame, workers) : decompress_szx(frame);
        };
        Bytes frame;
        std::vector<float> out;
        double tc = 0.0, td = 0.0;
        for (int i = 0; i < options.warmup + options.reps; ++i) {
          auto t0 = clock_type::now();
          frame = run_compress();
          double c = seconds_since(t0);
          t0 = clock_type::now();
          out = run_decompress(frame);
          double d = seconds_since(t0);
          if (i >= options.warmup) {
            tc += c;
            td += d;
          }
        }
        tc /= options.reps;
        td /= options.reps;

        CodecRow row;
        row.codec = to_string(codec);
        row.mode = workers > 1 ? "parallel" : "serial";
        row.rel_or_abs = bound.mode == BoundMode::Relative ? "REL" : "ABS";
        row.bound = bound.value;
        row.compress_gbps = tc > 0.0 ? gb / tc : 0.0;
        row.decompress_gbps = td > 0.0 ? gb / td : 0.0;
        row.ratio = static_cast<double>(values.size_bytes()) / static_cast<double>(frame.size());
        row.constant_block_pct =
            100.0 * (codec == CodecKind::ZLite ? compression_metrics(frame).constant_block_fraction
                                               : compress_szx(values, eb).stats.constant_block_fraction);
        row.workers = workers;
        row.eb_abs = eb;
        row.max_abs_err = max_abs_diff(out, widen(values));
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// ---- bench-collective ------------------------------------------------------

namespace {

struct CollectiveCase {
  CollectiveOp op;
  Variant variant;
  unsigned workers;
  std::size_t length;
};

CollectiveResult run_collective(const CollectiveCase& k, Communicator& comm, std::span<const float> data,
                                ReduceKind reduce, const CollectiveConfig& cfg) {
  switch (k.op) {
    case CollectiveOp::Allgather: return allgather(k.variant, comm, data, cfg);
    case CollectiveOp::Bcast: return bcast(k.variant, comm, 0, data, cfg);
    case CollectiveOp::Scatter:
      if (k.variant == Variant::Plain) return plain_scatter(comm, 0, data);
      if (k.variant == Variant::Z) return z_scatter(comm, 0, data, cfg);
      throw ParameterError("scatter has no cprp2p variant");
    case CollectiveOp::ReduceScatter:
      if (k.variant == Variant::Plain) return plain_reduce_scatter(comm, data, reduce);
      if (k.variant == Variant::Z) return z_reduce_scatter(comm, data, reduce, cfg);
      return cprp2p_reduce_scatter(comm, data, reduce, cfg);
    case CollectiveOp::Allreduce: return allreduce(k.variant, comm, data, reduce, cfg);
  }
  throw ParameterError("unknown collective");
}

// What rank 0 should hold, in 64-bit arithmetic.
std::vector<double> collective_oracle(const CollectiveCase& k, int n, const std::vector<std::vector<float>>& inputs,
                                      ReduceKind reduce) {
  switch (k.op) {
    case CollectiveOp::Allgather: {
      std::vector<double> out;
      for (const auto& v : inputs) out.insert(out.end(), v.begin(), v.end());
      return out;
    }
    case CollectiveOp::Bcast: return widen(inputs[0]);
    case CollectiveOp::Scatter:
      return widen(std::span<const float>(inputs[0]).first(inputs[0].size() / static_cast<std::size_t>(n)));
    case CollectiveOp::ReduceScatter: {
      std::vector<double> all = reduce_oracle(inputs, reduce);
      all.resize(all.size() / static_cast<std::size_t>(n));
      return all;
    }
    case CollectiveOp::Allreduce: return reduce_oracle(inputs, reduce);
  }
  return {};
}

}  // namespace

std::vector<CollectiveRow> cmd_bench_collective(const CollectiveBenchOptions& options) {
  const WorldOptions& world = options.world;
  const int n = world.ranks;
  if (n < 2) throw ParameterError("bench-collective needs at least 2 ranks");
  if (options.reps < 1 || options.warmup < 0) throw ParameterError("repetition counts out of range");

  std::vector<CollectiveCase> cases;
  for (CollectiveOp op : options.collectives) {
    for (Variant v : options.variants) {
      if (op == CollectiveOp::Scatter && v == Variant::Cprp2p) continue;
      for (unsigned w : options.workers) {
        if (w == 0) throw ParameterError("worker count must be positive");
        if (v != Variant::Z && w != options.workers.front()) continue;
        for (std::uint64_t bytes : options.sizes) {
          std::size_t len = static_cast<std::size_t>(bytes / 4);
          len -= len % static_cast<std::size_t>(n);
          if (len == 0) throw ParameterError("size " + std::to_string(bytes) + " is too small for " +
                                             std::to_string(n) + " ranks");
          cases.push_back({op, v, v == Variant::Z ? w : 1u, len});
        }
      }
    }
  }

  auto input_for = [&](int rank, std::size_t len) {
    SyntheticSpec s;
    s.kind = options.kind;
    s.length = len;
    s.seed = options.seed + static_cast<std::uint64_t>(rank);
    return std::move(generate_field(s)).release();
  };

  std::vector<CollectiveRow> rows;
  run_world(world, [&](Communicator& comm) {
    for (const CollectiveCase& k : cases) {
      std::vector<float> data = input_for(comm.rank(), k.length);
      CollectiveConfig cfg;
      cfg.error_bound = options.bound;
      cfg.codec = options.codec;
      cfg.params.parallelism = k.workers;
      PhaseTimes sum;
      CollectiveResult last;
      for (int i = 0; i < options.warmup + options.reps; ++i) {
        comm.barrier();
        last = run_collective(k, comm, data, options.reduce, cfg);
        if (i >= options.warmup) {
          const PhaseTimes& t = last.counters.times;
          sum.total_s += t.total_s;
          sum.compress_s += t.compress_s;
          sum.comm_s += t.comm_s;
          sum.reduce_s += t.reduce_s;
        }
      }
      if (comm.rank() != 0) continue;

      std::vector<std::vector<float>> inputs;
      for (int r = 0; r < n; ++r) inputs.push_back(input_for(r, k.length));
      std::vector<double> oracle = collective_oracle(k, n, inputs, options.reduce);

      CollectiveRow row;
      row.collective = to_string(k.op);
      row.variant = to_string(k.variant);
      row.ranks = n;
      row.data_bytes = static_cast<std::uint64_t>(k.length) * 4;
      row.total_s = sum.total_s / options.reps;
      if (sum.total_s > 0.0) {
        row.compress_pct = 100.0 * sum.compress_s / sum.total_s;
        row.commu_pct = 100.0 * sum.comm_s / sum.total_s;
        row.comput_pct = 100.0 * sum.reduce_s / sum.total_s;
      }
      row.other_pct = std::max(0.0, 100.0 - row.compress_pct - row.commu_pct - row.comput_pct);
      row.backend = world.backend == Backend::Tcp ? "tcp" : "loopback";
      row.workers = k.workers;
      const OpCounters& c = last.counters;
      row.compress_ops = c.compress_ops;
      row.decompress_ops = c.decompress_ops;
      row.rounds = c.rounds;
      row.payload_bytes_sent = c.payload_bytes_sent;
      row.payload_bytes_received = c.payload_bytes_received;
      row.transport_bytes_sent = c.transport.bytes_sent;
      row.eb_abs = c.eb_abs;
      row.max_abs_err = last.values.size() == oracle.size() ? max_abs_diff(last.values, oracle)
                                                            : std::numeric_limits<double>::quiet_NaN();
      rows.push_back(std::move(row));
    }
  });
  return rows;
}

// ---- analyze-error ---------------------------------------------------------

std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) return {};
  if (bins == 0) throw ParameterError("histogram needs at least one bin");
  auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) return {{lo, hi, values.size()}};
  std::vector<HistogramBin> out(bins);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + w * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + w * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / w);
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << kHistogramCsvHeader << '\n';
  for (const HistogramBin& b : bins) out << num(b.lo) << ',' << num(b.hi) << ',' << b.count << '\n';
}

void write_error_report_csv(std::ostream& out, const AnalyzeResult& r) {
  const ErrorStatsReport& e = r.report;
  double ratio = r.theory_variance > 0.0 ? e.variance / r.theory_variance : 0.0;
  out << kErrorReportCsvHeader << '\n'
      << to_string(r.kind) << ',' << r.ranks << ',' << num(r.eb_abs) << ',' << e.samples << ',' << num(e.nrmse)
      << ',' << num(e.psnr) << ',' << num(e.max_abs_err) << ',' << num(e.mean) << ',' << num(e.sigma) << ','
      << num(e.variance) << ',' << num(r.single.mean) << ',' << num(r.single.sigma) << ','
      << num(e.interval.half_width) << ',' << num(e.coverage) << ',' << num(r.bound_interval.half_width) << ','
      << num(r.bound_coverage) << ',' << num(r.theory_variance) << ',' << num(ratio) << ','
      << r.bound_violations << '\n';
}

AnalyzeResult cmd_analyze_error(const AnalyzeOptions& options) {
  const int n = options.ranks;
  if (n < 2) throw ParameterError("analyze-error needs at least 2 ranks");
  if (options.trials < 1) throw ParameterError("analyze-error needs at least one trial");
  if (options.length == 0 || options.length % static_cast<std::size_t>(n) != 0) {
    throw ParameterError("values per rank must be a positive multiple of the rank count");
  }
  options.bound.validate();

  CollectiveConfig cfg;
  cfg.error_bound = options.bound;
  cfg.self_exact = false;

  std::vector<float> result_all;
  std::vector<double> oracle_all;
  std::vector<double> single_errors;
  float eb = 0.0f;
  for (int trial = 0; trial < options.trials; ++trial) {
    std::vector<std::vector<float>> inputs;
    for (int r = 0; r < n; ++r) {
      SyntheticSpec s;
      s.kind = options.field_kind;
      s.length = options.length;
      s.amplitude = options.amplitude;
      s.seed = options.seed + static_cast<std::uint64_t>(trial) * 1000003u +
               (options.identical_inputs ? 0u : static_cast<std::uint64_t>(r));
      inputs.push_back(std::move(generate_field(s)).release());
    }
    std::vector<float> result;
    run_world({Backend::Loopback, n, -1, {}}, [&](Communicator& comm) {
      CollectiveResult res = z_allreduce(comm, inputs[static_cast<std::size_t>(comm.rank())], options.kind, cfg);
      if (comm.rank() == 0) {
        result = std::move(res.values);
        eb = res.counters.eb_abs;
      }
    });
    std::vector<double> oracle = reduce_oracle(inputs, options.kind);
    result_all.insert(result_all.end(), result.begin(), result.end());
    oracle_all.insert(oracle_all.end(), oracle.begin(), oracle.end());
    for (const auto& in : inputs) {
      std::vector<float> rec = decompress(compress(in, eb).frame.bytes);
      for (std::size_t i = 0; i < in.size(); ++i) {
        single_errors.push_back(static_cast<double>(rec[i]) - static_cast<double>(in[i]));
      }
    }
  }

  AnalyzeResult out;
  out.kind = options.kind;
  out.ranks = n;
  out.eb_abs = eb;
  out.single = fit_normal_mle(single_errors);
  const double sigma = out.single.sigma;
  Interval sigma_interval = sigma > 0.0 ? sum_error_interval_sigma(n, sigma) : Interval{0.0};
  out.report = error_report(result_all, oracle_all, sigma_interval);
  out.bound_interval = sum_error_interval_bound(n, eb);
  std::vector<double> errs = elementwise_errors(result_all, oracle_all);
  out.bound_coverage = coverage_fraction(errs, out.bound_interval);
  if (sigma > 0.0) {
    switch (options.kind) {
      case ReduceKind::Sum: out.theory_variance = n * sigma * sigma; break;
      case ReduceKind::Average: out.theory_variance = avg_error_variance(n, sigma); break;
      case ReduceKind::Max:
      case ReduceKind::Min: out.theory_variance = maxmin_error_variance(n, sigma); break;
    }
  }
  const double limit = static_cast<double>(n) * eb;
  for (double e : errs) out.bound_violations += std::fabs(e) > limit ? 1 : 0;
  out.histogram = histogram(errs, options.histogram_bins);
  return out;
}

// ---- stack -----------------------------------------------------------------

StackResult cmd_stack_images(const StackOptions& options) {
  const int n = options.ranks;
  if (n < 2) throw ParameterError("stacking needs at least 2 ranks");
  options.bound.validate();
  std::vector<std::vector<float>> images;
  for (int r = 0; r < n; ++r) {
    std::uint64_t seed = options.seed + (options.identical_images ? 0u : static_cast<std::uint64_t>(r));
    images.push_back(std::move(generate_image(options.width, options.height, seed)).release());
  }
  CollectiveConfig cfg;
  cfg.error_bound = options.bound;
  cfg.self_exact = false;
  StackResult out;
  run_world({Backend::Loopback, n, -1, {}}, [&](Communicator& comm) {
    CollectiveResult res =
        z_allreduce(comm, images[static_cast<std::size_t>(comm.rank())], ReduceKind::Sum, cfg);
    if (comm.rank() == 0) {
      out.stacked = std::move(res.values);
      out.eb_abs = res.counters.eb_abs;
    }
  });
  out.oracle = reduce_oracle(images, ReduceKind::Sum);
  out.psnr = psnr(out.stacked, out.oracle);
  out.nrmse = nrmse(out.stacked, out.oracle);
  out.max_abs_err = max_abs_diff(out.stacked, out.oracle);
  if (!options.out_prefix.empty()) {
    out.raw_path = options.out_prefix + ".f32";
    out.pgm_path = options.out_prefix + ".pgm";
    save_raw_f32(out.raw_path, out.stacked);
    write_pgm(out.pgm_path, out.stacked, options.width, options.height);
  }
  return out;
}

// ---- launch ----------------------------------------------------------------

std::vector<std::string> read_address_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open address file '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r");
    auto e = line.find_last_not_of(" \t\r");
    lines.push_back(b == std::string::npos ? std::string() : line.substr(b, e - b + 1));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::map<std::pair<std::string, std::uint16_t>, std::size_t> seen;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) throw ParameterError("address file '" + path + "': empty line " + std::to_string(i + 1));
    auto key = parse_address(lines[i]);
    auto [it, fresh] = seen.emplace(key, i);
    if (!fresh) {
      throw ParameterError("address file '" + path + "': " + lines[i] + " repeats line " +
                           std::to_string(it->second + 1) + " at line " + std::to_string(i + 1));
    }
  }
  if (lines.size() < 2) throw ParameterError("address file '" + path + "' lists fewer than 2 ranks");
  return lines;
}

std::vector<std::vector<std::string>> launch_commands(const LaunchOptions& options,
                                                      std::vector<std::string>* addresses) {
  std::vector<std::string> addrs;
  std::string file = options.addrs_file;
  if (file.empty()) {
    if (options.ranks < 2) throw ParameterError("launch needs at least 2 ranks");
    if (options.addrs_out.empty()) throw ParameterError("launch needs a path for the allocated address file");
    addrs = allocate_local_addresses(options.ranks);
    std::ofstream out(options.addrs_out, std::ios::trunc);
    for (const auto& a : addrs) out << a << '\n';
    if (!out) throw Error("cannot write '" + options.addrs_out + "'");
    file = options.addrs_out;
  } else {
    addrs = read_address_file(file);
    if (options.ranks != 0 && static_cast<std::size_t>(options.ranks) != addrs.size()) {
      throw ParameterError("address file lists " + std::to_string(addrs.size()) + " ranks, " +
                           std::to_string(options.ranks) + " requested");
    }
  }
  std::vector<std::vector<std::string>> cmds;
  for (std::size_t r = 0; r < addrs.size(); ++r) {
    std::vector<std::string> cmd{options.executable};
    cmd.insert(cmd.end(), options.child_args.begin(), options.child_args.end());
    for (const char* s : {"--backend", "tcp", "--ranks"}) cmd.emplace_back(s);
    cmd.push_back(std::to_string(addrs.size()));
    cmd.emplace_back("--rank");
    cmd.push_back(std::to_string(r));
    cmd.emplace_back("--addrs");
    cmd.push_back(file);
    cmds.push_back(std::move(cmd));
  }
  if (addresses) *addresses = addrs;
  return cmds;
}

int cmd_launch(const LaunchOptions& options, std::ostream& out) {
  auto cmds = launch_commands(options);
  if (options.print_only) {
    for (const auto& cmd : cmds) {
      for (std::size_t i = 0; i < cmd.size(); ++i) out << (i ? " " : "") << cmd[i];
      out << '\n';
    }
    return 0;
  }
  std::vector<pid_t> pids;
  int spawn_error = 0;
  for (const auto& cmd : cmds) {
    std::vector<char*> argv;
    for (const auto& a : cmd) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = 0;
    int rc = posix_spawn(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
      spawn_error = rc;
      break;
    }
    pids.push_back(pid);
  }
  int first_failure = 0;
  for (pid_t pid : pids) {
    int status = 0;
    if (waitpid(pid, &status, 0) < 0) continue;
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    if (code != 0 && first_failure == 0) first_failure = code;
  }
  if (spawn_error != 0) throw Error("cannot start '" + options.executable + "': " + std::strerror(spawn_error));
  return first_failure;
}

}  // namespace zccl
