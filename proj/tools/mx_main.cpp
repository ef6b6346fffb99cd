// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "mx/errors.hpp"
#include "mx/flow.hpp"
#include "mx/io.hpp"
#include "mx/linalg.hpp"
#include "mx/tensor.hpp"

namespace {

using nlohmann::json;

// Exit codes: 0 success, 1 usage, 2 I/O, 3 malformed file, 4 divergence.
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitDiverged = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

mx::ElementFormatId parse_format_or_throw(const std::string& name) {
  auto id = mx::parse_element_format(name);
  if (!id) throw UsageError("unknown format '" + name + "'");
  return *id;
}

std::optional<mx::ElementFormatId> parse_format_or_fp32(const std::string& name) {
  if (name == "fp32") return std::nullopt;
  return parse_format_or_throw(name);
}

mx::RoundingMode parse_rounding_or_throw(const std::string& name) {
  auto mode = mx::parse_rounding_mode(name);
  if (!mode) throw UsageError("unknown rounding '" + name + "' (want rne or rhaz)");
  return *mode;
}

void print_report(const mx::ErrorReport& r) {
  json j;
  j["mse"] = r.mse;
  j["sqnr_db"] = r.sqnr_db;  // non-finite serializes as null
  j["max_abs_err"] = r.max_abs_err;
  j["max_rel_err"] = r.max_rel_err;
  j["clamped_lane_count"] = r.clamped_lane_count;
  j["nan_block_count"] = r.nan_block_count;
  std::cout << j.dump() << "\n";
}

int resolve_axis(int axis_flag, int rank) {
  int axis = axis_flag < 0 ? rank - 1 : axis_flag;
  if (axis < 0 || axis >= rank)
    throw UsageError("axis " + std::to_string(axis_flag) + " out of range for rank " +
                     std::to_string(rank));
  return axis;
}

struct QuantizeArgs {
  std::string input, output, format, rounding = "rne";
  int axis = -1;  // default: last
  int block_size = 32;
};

void run_quantize(const QuantizeArgs& args) {
  mx::Fp32Tensor t = mx::read_f32_file(args.input);
  if (t.numel() == 0) throw UsageError("input tensor '" + args.input + "' is empty");
  mx::QuantConfig cfg;
  cfg.element_fmt = parse_format_or_throw(args.format);
  cfg.rounding = parse_rounding_or_throw(args.rounding);
  if (args.block_size < 1) throw UsageError("block size must be >= 1");
  cfg.block_size = args.block_size;
  int axis = resolve_axis(args.axis, t.rank());

  mx::QuantStats stats;
  mx::MxTensor q = mx::quantize_tensor(t, axis, cfg, &stats);
  mx::write_mxt_file(args.output, q);

  mx::ErrorReport r = mx::compare_to_fp32(mx::dequantize_tensor(q), t);
  r.clamped_lane_count = stats.clamped_lanes;
  r.nan_block_count = stats.nan_blocks;
  std::cerr << "quantized " << args.input << " -> " << args.output << " ("
            << args.format << ", axis " << axis << ", block " << cfg.block_size
            << ")\n";
  print_report(r);
}

struct DequantizeArgs {
  std::string input, output;
};

void run_dequantize(const DequantizeArgs& args) {
  mx::MxTensor q = mx::read_mxt_file(args.input);
  mx::write_f32_file(args.output, mx::dequantize_tensor(q));
  std::cerr << "dequantized " << args.input << " -> " << args.output << "\n";
}

struct GemmArgs {
  std::string a, b, output;
  std::string a_format = "mxint8", b_format = "mxint8", rounding = "rne";
  int block_size = 32;
  int threads = 1;
  bool reference = false;
};

void run_gemm(const GemmArgs& args) {
  mx::Fp32Tensor a = mx::read_f32_file(args.a);
  mx::Fp32Tensor b = mx::read_f32_file(args.b);
  if (a.rank() != 2 || b.rank() != 2) throw UsageError("gemm operands must be rank 2");
  if (a.numel() == 0 || b.numel() == 0) throw UsageError("gemm operands must be non-empty");
  if (a.shape[1] != b.shape[0])
    throw UsageError("inner dimensions disagree: " + std::to_string(a.shape[1]) +
                     " vs " + std::to_string(b.shape[0]));
  if (args.block_size < 1) throw UsageError("block size must be >= 1");
  if (args.threads < 1) throw UsageError("threads must be >= 1");

  mx::QuantConfig cfg_a, cfg_b;
  cfg_a.element_fmt = parse_format_or_throw(args.a_format);
  cfg_b.element_fmt = parse_format_or_throw(args.b_format);
  cfg_a.rounding = cfg_b.rounding = parse_rounding_or_throw(args.rounding);
  cfg_a.block_size = cfg_b.block_size = args.block_size;

  mx::QuantStats stats;
  mx::MxTensor qa = mx::quantize_tensor(a, 1, cfg_a, &stats);
  mx::MxTensor qb = mx::quantize_tensor(b, 0, cfg_b, &stats);
  mx::GemmResult res = mx::mx_gemm_compare(qa, qb, a, b, args.reference, args.threads);
  mx::write_f32_file(args.output, res.out);
  std::cerr << "gemm [" << a.shape[0] << "x" << a.shape[1] << "] @ [" << b.shape[0]
            << "x" << b.shape[1] << "] -> " << args.output << "\n";

  if (res.report) {
    mx::ErrorReport r = *res.report;
    r.clamped_lane_count = stats.clamped_lanes;
    r.nan_block_count = stats.nan_blocks;
    print_report(r);
  }
}

struct TrainArgs {
  std::string weight_format = "mxfp6_e3m2";
  std::string act_format = "mxfp6_e3m2";
  std::string grad_format;  // empty: same as activations
  std::string out;
  int steps = 500;
  uint64_t seed = 1;
};

void run_train_demo(const TrainArgs& args) {
  if (args.steps < 1) throw UsageError("steps must be >= 1");
  std::optional<mx::ElementFormatId> wf = parse_format_or_fp32(args.weight_format);
  std::optional<mx::ElementFormatId> af = parse_format_or_fp32(args.act_format);
  std::optional<mx::ElementFormatId> gf;
  if (!args.grad_format.empty()) gf = parse_format_or_fp32(args.grad_format);

  mx::FlowConfig flow;
  try {
    flow = mx::demo_flow_config(wf, af, gf);
  } catch (const mx::ConfigError& e) {
    throw UsageError(e.what());
  }
  mx::TrainResult result = mx::train_demo(flow, args.seed, args.steps);

  std::ofstream csv(args.out, std::ios::trunc);
  if (!csv) throw mx::IoError("cannot open '" + args.out + "' for writing");
  csv << "step,loss,grad_norm\n";
  char line[128];
  for (const mx::TrainRecord& rec : result.records) {
    std::snprintf(line, sizeof line, "%d,%.9g,%.9g\n", rec.step, rec.loss, rec.grad_norm);
    csv << line;
  }
  if (!csv) throw mx::IoError("write failed on '" + args.out + "'");
  csv.close();

  json j;
  j["steps"] = static_cast<int>(result.records.size());
  j["final_loss"] = result.records.empty() ? 0.0 : result.records.back().loss;
  j["diverged"] = result.diverged;
  std::cout << j.dump() << "\n";
  if (result.diverged) throw DivergedError("training diverged (non-finite loss)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microscaling (MX) block quantization toolkit"};
  app.require_subcommand(1);

  QuantizeArgs qa;
  CLI::App* quantize = app.add_subcommand("quantize", "Quantize an FP32 tensor file");
  quantize->add_option("input", qa.input, "input .f32t file")->required();
  quantize->add_option("output", qa.output, "output .mxt file")->required();
  quantize->add_option("--format", qa.format, "element format")->required();
  quantize->add_option("--axis", qa.axis, "blocking axis (default: last)");
  quantize->add_option("--block-size", qa.block_size, "lanes per block (default 32)");
  quantize->add_option("--rounding", qa.rounding, "rne|rhaz (default rne)");

  DequantizeArgs da;
  CLI::App* dequantize = app.add_subcommand("dequantize", "Expand a quantized tensor to FP32");
  dequantize->add_option("input", da.input, "input .mxt file")->required();
  dequantize->add_option("output", da.output, "output .f32t file")->required();

  GemmArgs ga;
  CLI::App* gemm = app.add_subcommand("gemm", "Quantized matrix multiply");
  gemm->add_option("a", ga.a, "left operand .f32t ([M,K])")->required();
  gemm->add_option("b", ga.b, "right operand .f32t ([K,N])")->required();
  gemm->add_option("output", ga.output, "result .f32t file")->required();
  gemm->add_option("--a-format", ga.a_format, "element format for A (default mxint8)");
  gemm->add_option("--b-format", ga.b_format, "element format for B (default mxint8)");
  gemm->add_option("--block-size", ga.block_size, "lanes per block (default 32)");
  gemm->add_option("--rounding", ga.rounding, "rne|rhaz (default rne)");
  gemm->add_option("--threads", ga.threads, "worker threads (default 1)");
  gemm->add_flag("--reference", ga.reference, "also run FP32 and print the error report");

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train-demo", "Emulated quantized training demo");
  train->add_option("--weight-format", ta.weight_format, "element format or fp32");
  train->add_option("--act-format", ta.act_format, "element format or fp32");
  train->add_option("--grad-format", ta.grad_format, "element format or fp32 (default: act format)");
  train->add_option("--steps", ta.steps, "SGD steps (default 500)");
  train->add_option("--seed", ta.seed, "RNG seed (default 1)");
  train->add_option("--out", ta.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
    if (quantize->parsed()) run_quantize(qa);
    if (dequantize->parsed()) run_dequantize(da);
    if (gemm->parsed()) run_gemm(ga);
    if (train->parsed()) run_train_demo(ta);
    return 0;
  } catch (const CLI::ParseError& e) {
    // CLI11's default exit codes do not match ours; --help stays 0, every
    // actual parse problem is a usage error.
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergedError& e) {
    std::cerr << e.what() << "\n";
    return kExitDiverged;
  } catch (const mx::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const mx::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const mx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
