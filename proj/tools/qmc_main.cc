// Copyright 2026 The qmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qmc: command-line front end.
//
// Exit codes: 0 success, 2 usage, 3 input format, 4 rate not reachable,
// 5 internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qmc/qmc.hpp"

namespace qmc::cli {
namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 2, kInputFormat = 3, kRate = 4, kInternal = 5 };

struct Output {
  std::string format = "json";
};

json Num(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json ReadJson(const std::string& path) {
  try {
    return json::parse(ReadText(path));
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': malformed JSON: " + e.what());
  }
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
}

bool HasExtension(const std::string& path, const char* ext) {
  return std::filesystem::path(path).extension() == ext;
}

QualityIndexMap ReadQmap(const std::string& path) {
  if (HasExtension(path, ".pgm")) return QmapFromPgm(ReadPgm(path));
  return QmapFromJson(ReadJson(path));
}

void WriteQmap(const std::string& path, const QualityIndexMap& q) {
  if (HasExtension(path, ".pgm")) {
    WritePgm(path, QmapToPgm(q));
  } else {
    WriteText(path, QmapToJson(q).dump() + "\n");
  }
}

// A trace ({"blocks": ...}) is regrouped onto 16x16 cells; anything else is
// read as a BDM document.
BitDistributionMap ReadBdm(const std::string& path) {
  const json j = ReadJson(path);
  if (j.contains("blocks")) return Regroup16(TraceFromJson(j));
  return BdmFromJson(j);
}

// Text form: flat "key: value" lines for objects, nested keys dotted.
void FlattenText(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) FlattenText(v, prefix.empty() ? k : prefix + "." + k, os);
  } else if (j.is_array() && !j.empty() && j.front().is_object()) {
    for (size_t i = 0; i < j.size(); ++i) FlattenText(j[i], prefix + "[" + std::to_string(i) + "]", os);
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

void Emit(const Output& out, const json& j) {
  if (out.format == "text") {
    FlattenText(j, "", std::cout);
  } else {
    std::cout << j.dump(2) << "\n";
  }
}

void EmitReport(const Output& out, const ExperimentReport& r) {
  if (out.format == "text") {
    std::cout << ReportToText(r);
  } else {
    std::cout << ReportToJson(r).dump(2) << "\n";
  }
}

// Codec flags shared by encode, rate-match, qmap rd and experiments.
struct CodecFlags {
  std::string config_path;
  std::optional<double> beta;
  std::optional<int> channels_y;
  std::optional<int> channels_uv;
  std::string qpred;
  std::string interp;
  bool no_sigma_gain = false;
  std::string gain_y;
  std::string gain_uv;

  void Add(CLI::App* app) {
    app->add_option("--config", config_path, "JSON codec configuration")->check(CLI::ExistingFile);
    app->add_option("--beta", beta, "Rate-distortion trade-off beta")->check(CLI::PositiveNumber);
    app->add_option("--channels-y", channels_y, "Luma latent channels")->check(CLI::Range(1, 256));
    app->add_option("--channels-uv", channels_uv, "Chroma latent channels per plane")
        ->check(CLI::Range(1, 255));
    app->add_option("--qpred", qpred, "Quality-map predictor")
        ->check(CLI::IsMember({"half-diff", "avg"}));
    app->add_option("--interp", interp, "Gain interpolation between stored betas")
        ->check(CLI::IsMember({"linear", "paper-literal"}));
    app->add_flag("--no-sigma-gain", no_sigma_gain, "Do not scale sigma by the latent gain");
    app->add_option("--gain-y", gain_y, "Luma gain unit JSON")->check(CLI::ExistingFile);
    app->add_option("--gain-uv", gain_uv, "Chroma gain unit JSON")->check(CLI::ExistingFile);
  }

  CodecConfig Build() const {
    CodecConfig c = config_path.empty() ? CodecConfig{} : ConfigFromJson(ReadJson(config_path));
    if (beta) c.beta = *beta;
    if (channels_y) c.channels_y = *channels_y;
    if (channels_uv) c.channels_uv = *channels_uv;
    if (qpred == "avg") c.qpred = QPredMode::kAverage;
    if (qpred == "half-diff") c.qpred = QPredMode::kHalfDifference;
    if (interp == "paper-literal") c.interpolation = InterpolationMode::kPaperLiteral;
    if (interp == "linear") c.interpolation = InterpolationMode::kLinear;
    if (no_sigma_gain) c.sigma_gain = false;
    if (!gain_y.empty()) c.gain_y = GainUnitFromJson(ReadJson(gain_y));
    if (!gain_uv.empty()) c.gain_uv = GainUnitFromJson(ReadJson(gain_uv));
    c.Validate();
    return c;
  }
};

DecodeOptions GainOptions(const std::string& gain_y, const std::string& gain_uv) {
  DecodeOptions o;
  if (!gain_y.empty()) o.gain_y = GainUnitFromJson(ReadJson(gain_y));
  if (!gain_uv.empty()) o.gain_uv = GainUnitFromJson(ReadJson(gain_uv));
  return o;
}

json HeaderJson(const BitstreamHeader& h) {
  return {{"version", h.version},
          {"flags", h.flags},
          {"width", h.width},
          {"height", h.height},
          {"orig_width", h.orig_width},
          {"orig_height", h.orig_height},
          {"channels_y", h.channels_y},
          {"channels_uv", h.channels_uv},
          {"beta", FixedToBeta(h.beta_q16)},
          {"qmap", (h.flags & kFlagQmap) != 0},
          {"qpred", (h.flags & kFlagQpredAverage) ? "avg" : "half-diff"},
          {"interpolation", (h.flags & kFlagPaperLiteral) ? "paper-literal" : "linear"},
          {"sigma_gain", (h.flags & kFlagNoSigmaGain) == 0}};
}

json SegmentBits(const Bitstream& b) {
  return {{"header", kHeaderBytes * 8},
          {"qmap", b.qmap.size() * 8},
          {"y_hyper", b.y_hyper.size() * 8},
          {"y_residual", b.y_residual.size() * 8},
          {"uv_hyper", b.uv_hyper.size() * 8},
          {"uv_residual", b.uv_residual.size() * 8},
          {"length_prefixes", 5 * 4 * 8}};
}

json EncodeJson(const EncodeResult& e, const CodecConfig& cfg) {
  return {{"config_hash", ConfigHash(cfg)},
          {"beta", cfg.beta},
          {"bytes", e.bytes.size()},
          {"bpp", e.bpp},
          {"psnr_y", Num(e.psnr_y)},
          {"psnr_u", Num(e.psnr_u)},
          {"psnr_v", Num(e.psnr_v)},
          {"qmap_overhead", e.qmap_overhead()},
          {"segment_bits", SegmentBits(e.stream)},
          {"ledger_bits", {{"y", e.y.TotalBits()}, {"uv", e.uv.TotalBits()}}}};
}

json TrialsJson(const RateMatchResult& r, const RateTarget& t) {
  json trials = json::array();
  for (const auto& tr : r.trials) trials.push_back({{"beta", tr.beta}, {"bpp", tr.bpp}});
  return {{"target_bpp", t.bpp},
          {"tolerance", t.tolerance},
          {"status", RateStatusName(r.status)},
          {"relative_error", r.relative_error(t.bpp)},
          {"trials", trials}};
}

json BdmSummary(const BitDistributionMap& m) {
  return {{"width", m.width()},
          {"height", m.height()},
          {"rows", m.rows()},
          {"cols", m.cols()},
          {"total_bits", m.Sum()},
          {"mean", m.Mean()},
          {"max", m.Max()},
          {"normalized_variance", SelfNormalizedVariance(m)}};
}

// Latent-grid map sized to the padded picture of a width x height image.
BitDistributionMap ToLatentGrid(const BitDistributionMap& m) {
  if (m.block() != kBlockSize) {
    throw FormatError("bdm: block size must be 16, got " + std::to_string(m.block()));
  }
  BitDistributionMap g = m;
  g.set_latent_grid(true);
  return PadLatentGrid(g, RoundUp(m.height(), kPadMultiple) / kBlockSize,
                       RoundUp(m.width(), kPadMultiple) / kBlockSize);
}

Plane8 PadMask(const Plane8& mask) {
  return PadPlane(mask, RoundUp(mask.width(), kPadMultiple), RoundUp(mask.height(), kPadMultiple));
}

std::vector<int> ParseCandidates(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidArgument("--candidates: '" + item + "' is not an integer");
    }
  }
  if (out.empty()) throw InvalidArgument("--candidates: empty list");
  return out;
}

int Run(int argc, char** argv) {
  CLI::App app{"Quality-map latent image codec"};
  app.require_subcommand(1);
  Output out;
  app.add_option("--format", out.format, "Report format")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a PPM/PGM picture");
  std::string enc_in, enc_out, enc_qmap, enc_recon;
  std::optional<double> enc_target;
  CodecFlags enc_flags;
  enc->add_option("--in", enc_in, "Input picture")->required()->check(CLI::ExistingFile);
  enc->add_option("--out", enc_out, "Output bitstream")->required();
  enc->add_option("--target-bpp", enc_target, "Rate-match to this bpp instead of --beta")
      ->check(CLI::PositiveNumber);
  enc->add_option("--qmap", enc_qmap, "Quality map (.json or .pgm)")->check(CLI::ExistingFile);
  enc->add_option("--recon", enc_recon, "Write the reconstruction (PPM)");
  enc_flags.Add(enc);

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a bitstream to PPM");
  std::string dec_in, dec_out, dec_ref, dec_gy, dec_guv;
  dec->add_option("--in", dec_in, "Input bitstream")->required()->check(CLI::ExistingFile);
  dec->add_option("--out", dec_out, "Output picture (PPM)")->required();
  dec->add_option("--reference", dec_ref, "Original picture; reports PSNR")
      ->check(CLI::ExistingFile);
  dec->add_option("--gain-y", dec_gy, "Luma gain unit JSON")->check(CLI::ExistingFile);
  dec->add_option("--gain-uv", dec_guv, "Chroma gain unit JSON")->check(CLI::ExistingFile);

  // inspect
  auto* ins = app.add_subcommand("inspect", "Print header and segment sizes");
  std::string ins_in;
  ins->add_option("--in", ins_in, "Input bitstream")->required()->check(CLI::ExistingFile);

  // bdm
  auto* bdm = app.add_subcommand("bdm", "Bit distribution maps");
  bdm->require_subcommand(1);
  auto* bdm_trace = bdm->add_subcommand("from-trace", "Map from an encoder trace");
  std::string bt_in, bt_out, bt_json;
  bool bt_native = false;
  bdm_trace->add_option("trace", bt_in, "Trace JSON")->required()->check(CLI::ExistingFile);
  bdm_trace->add_option("--out", bt_out, "Rendered map (PGM)");
  bdm_trace->add_option("--json", bt_json, "Regrouped map (JSON)");
  bdm_trace->add_flag("--native", bt_native, "Render per record instead of 16x16 cells");
  auto* bdm_enc = bdm->add_subcommand("from-encode", "Luma map of a bitstream");
  std::string be_in, be_out, be_json, be_gy, be_guv;
  bdm_enc->add_option("bitstream", be_in, "Bitstream")->required()->check(CLI::ExistingFile);
  bdm_enc->add_option("--out", be_out, "Rendered map (PGM)");
  bdm_enc->add_option("--json", be_json, "Map (JSON)");
  bdm_enc->add_option("--gain-y", be_gy, "Luma gain unit JSON")->check(CLI::ExistingFile);
  bdm_enc->add_option("--gain-uv", be_guv, "Chroma gain unit JSON")->check(CLI::ExistingFile);
  auto* bdm_cmp = bdm->add_subcommand("compare", "Jointly normalized variances of two maps");
  std::string bc_a, bc_b;
  bdm_cmp->add_option("a", bc_a, "Map or trace JSON")->required()->check(CLI::ExistingFile);
  bdm_cmp->add_option("b", bc_b, "Map or trace JSON")->required()->check(CLI::ExistingFile);

  // qmap
  auto* qm = app.add_subcommand("qmap", "Quality index maps");
  qm->require_subcommand(1);
  auto* qm_bdm = qm->add_subcommand("from-bdm", "Five-level map from a BDM or trace");
  std::string qb_in, qb_out;
  qm_bdm->add_option("map", qb_in, "BDM or trace JSON")->required()->check(CLI::ExistingFile);
  qm_bdm->add_option("--out", qb_out, "Quality map (.json or .pgm)")->required();
  auto* qm_roi = qm->add_subcommand("from-roi", "Map from a binary ROI mask");
  std::string qr_mask, qr_out;
  int qr_hi = 6, qr_lo = -6;
  qm_roi->add_option("--mask", qr_mask, "Mask (PGM, non-zero = ROI)")->required()
      ->check(CLI::ExistingFile);
  qm_roi->add_option("--out", qr_out, "Quality map (.json or .pgm)")->required();
  qm_roi->add_option("--hi", qr_hi, "Index inside the ROI")->check(CLI::Range(-16, 16))
      ->capture_default_str();
  qm_roi->add_option("--lo", qr_lo, "Index outside the ROI")->check(CLI::Range(-16, 16))
      ->capture_default_str();
  auto* qm_var = qm->add_subcommand("from-variance", "Map from luma block variance");
  std::string qv_in, qv_out;
  int qv_levels = 5, qv_lowest = -4;
  qm_var->add_option("--in", qv_in, "Input picture")->required()->check(CLI::ExistingFile);
  qm_var->add_option("--out", qv_out, "Quality map (.json or .pgm)")->required();
  qm_var->add_option("--levels", qv_levels, "Number of levels")->check(CLI::Range(1, 17))
      ->capture_default_str();
  qm_var->add_option("--lowest", qv_lowest, "Index of the lowest level")
      ->check(CLI::Range(-16, 16))->capture_default_str();
  auto* qm_rd = qm->add_subcommand("rd", "Per-block rate-distortion optimized map");
  std::string qd_in, qd_out, qd_cand = "-8,-4,0,4,8";
  double qd_beta = 1.0;
  CodecFlags qd_flags;
  qm_rd->add_option("--in", qd_in, "Input picture")->required()->check(CLI::ExistingFile);
  qm_rd->add_option("--out", qd_out, "Quality map (.json or .pgm)")->required();
  qm_rd->add_option("--rd-beta", qd_beta, "Distortion weight in R + beta * D")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  qm_rd->add_option("--candidates", qd_cand, "Comma-separated candidate indices")
      ->capture_default_str();
  qd_flags.Add(qm_rd);
  auto* qm_render = qm->add_subcommand("render", "Convert a map between JSON and PGM");
  std::string qn_in, qn_out;
  qm_render->add_option("--in", qn_in, "Quality map (.json or .pgm)")->required()
      ->check(CLI::ExistingFile);
  qm_render->add_option("--out", qn_out, "Quality map (.json or .pgm)")->required();

  // rate-match
  auto* rm = app.add_subcommand("rate-match", "Find beta for a target bpp");
  std::string rm_in, rm_out, rm_qmap;
  RateTarget rm_target;
  CodecFlags rm_flags;
  rm->add_option("--in", rm_in, "Input picture")->required()->check(CLI::ExistingFile);
  rm->add_option("--target-bpp", rm_target.bpp, "Target bits per pixel")->required()
      ->check(CLI::PositiveNumber);
  rm->add_option("--tolerance", rm_target.tolerance, "Relative tolerance")->capture_default_str();
  rm->add_option("--max-iterations", rm_target.max_iterations, "Bisection cap")
      ->capture_default_str();
  rm->add_option("--out", rm_out, "Write the matched bitstream");
  rm->add_option("--qmap", rm_qmap, "Quality map (.json or .pgm)")->check(CLI::ExistingFile);
  rm_flags.Add(rm);

  // experiment
  auto* ex = app.add_subcommand("experiment", "Reproduction experiments");
  ex->require_subcommand(1);
  auto* ex_roi = ex->add_subcommand("roi", "Uniform map versus ROI map");
  std::string er_in, er_mask, er_dir;
  int er_hi = 6, er_lo = -6;
  CodecFlags er_flags;
  ex_roi->add_option("--in", er_in, "Input picture")->required()->check(CLI::ExistingFile);
  ex_roi->add_option("--mask", er_mask, "ROI mask (PGM)")->required()->check(CLI::ExistingFile);
  ex_roi->add_option("--hi", er_hi, "Index inside the ROI")->check(CLI::Range(-8, 8))
      ->capture_default_str();
  ex_roi->add_option("--lo", er_lo, "Index outside the ROI")->check(CLI::Range(-8, 8))
      ->capture_default_str();
  ex_roi->add_option("--recon-dir", er_dir, "Write both reconstructions here");
  er_flags.Add(ex_roi);
  auto* ex_vvc = ex->add_subcommand("vvc-qmap", "Trace-derived map at matched rate");
  std::string ev_in, ev_trace;
  RateTarget ev_target;
  CodecFlags ev_flags;
  ex_vvc->add_option("--in", ev_in, "Input picture")->required()->check(CLI::ExistingFile);
  ex_vvc->add_option("--trace", ev_trace, "Trace JSON")->required();
  ex_vvc->add_option("--target-bpp", ev_target.bpp, "Target bits per pixel")->required()
      ->check(CLI::PositiveNumber);
  ex_vvc->add_option("--tolerance", ev_target.tolerance, "Relative tolerance")
      ->capture_default_str();
  ev_flags.Add(ex_vvc);
  auto* ex_ovh = ex->add_subcommand("overhead", "Quality-map share of the bitstream");
  std::string eo_in, eo_qmap, eo_kind = "variance";
  std::optional<double> eo_target;
  uint32_t eo_seed = 1;
  CodecFlags eo_flags;
  ex_ovh->add_option("--in", eo_in, "Input picture")->required()->check(CLI::ExistingFile);
  ex_ovh->add_option("--qmap", eo_qmap, "Quality map; overrides --map")->check(CLI::ExistingFile);
  ex_ovh->add_option("--map", eo_kind, "Generated map")
      ->check(CLI::IsMember({"variance", "zero", "random"}))->capture_default_str();
  ex_ovh->add_option("--seed", eo_seed, "Seed for --map random")->capture_default_str();
  ex_ovh->add_option("--target-bpp", eo_target, "Rate-match the encode")
      ->check(CLI::PositiveNumber);
  eo_flags.Add(ex_ovh);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*enc) {
    const PlanarImage img = ReadPpm(enc_in);
    CodecConfig cfg = enc_flags.Build();
    if (!enc_qmap.empty()) cfg.qmap = ReadQmap(enc_qmap);
    json report;
    EncodeResult e;
    if (enc_target) {
      if (enc_flags.beta) throw InvalidArgument("encode: --beta and --target-bpp are exclusive");
      const RateTarget t{*enc_target};
      RateMatchResult r = MatchRate(img, cfg, t);
      cfg.beta = r.beta;
      e = std::move(r.encode);
      report = EncodeJson(e, cfg);
      report["rate_match"] = TrialsJson(r, t);
    } else {
      e = Encode(img, cfg);
      report = EncodeJson(e, cfg);
    }
    WriteFileBytes(enc_out, e.bytes);
    if (!enc_recon.empty()) WritePpm(enc_recon, e.recon.image);
    report["out"] = enc_out;
    Emit(out, report);
  } else if (*dec) {
    const DecodeResult d = Decode(ReadFileBytes(dec_in), GainOptions(dec_gy, dec_guv));
    WritePpm(dec_out, d.recon.image);
    json report{{"header", HeaderJson(d.header)}, {"out", dec_out}};
    if (!dec_ref.empty()) {
      const PlanarImage ref = RgbToYuv420(ReadPpm(dec_ref));
      if (ref.width != d.recon.image.width || ref.height != d.recon.image.height) {
        throw InvalidArgument("decode: reference is " + std::to_string(ref.width) + "x" +
                              std::to_string(ref.height) + ", bitstream is " +
                              std::to_string(d.recon.image.width) + "x" +
                              std::to_string(d.recon.image.height));
      }
      report["psnr_y"] = Num(Psnr(ref.planes[0], d.recon.image.planes[0]));
      report["psnr_u"] = Num(Psnr(ref.planes[1], d.recon.image.planes[1]));
      report["psnr_v"] = Num(Psnr(ref.planes[2], d.recon.image.planes[2]));
    }
    Emit(out, report);
  } else if (*ins) {
    const std::vector<uint8_t> bytes = ReadFileBytes(ins_in);
    const Bitstream b = Bitstream::Parse(bytes);
    const double total = static_cast<double>(bytes.size()) * 8;
    Emit(out, {{"header", HeaderJson(b.header)},
               {"total_bits", bytes.size() * 8},
               {"bpp", total / (static_cast<double>(b.header.orig_width) * b.header.orig_height)},
               {"segment_bits", SegmentBits(b)},
               {"qmap_overhead", static_cast<double>(b.qmap.size() * 8) / total}});
  } else if (*bdm_trace) {
    const Trace t = TraceFromJson(ReadJson(bt_in));
    const BitDistributionMap m = Regroup16(t);
    if (!bt_out.empty()) {
      if (bt_native) {
        const BitDistributionMap native = BitDistributionMap::FromRecords(t);
        WritePgm(bt_out, RenderPgm(native, std::max(native.Max(), 1e-300)));
      } else {
        WritePgm(bt_out, RenderPgm(m, std::max(m.Max(), 1e-300)));
      }
    }
    if (!bt_json.empty()) WriteText(bt_json, BdmToJson(m).dump() + "\n");
    json report = BdmSummary(m);
    report["records"] = t.blocks.size();
    Emit(out, report);
  } else if (*bdm_enc) {
    const DecodeResult d = Decode(ReadFileBytes(be_in), GainOptions(be_gy, be_guv));
    BitDistributionMap m = BitsPerBlock(d.y);
    if (!be_out.empty()) WritePgm(be_out, RenderPgm(m, std::max(m.Max(), 1e-300)));
    if (!be_json.empty()) WriteText(be_json, BdmToJson(m).dump() + "\n");
    Emit(out, BdmSummary(m));
  } else if (*bdm_cmp) {
    const NormalizedPair p = NormalizePair(ReadBdm(bc_a), ReadBdm(bc_b));
    Emit(out, {{"upper", p.upper},
               {"variance_a", BdmVariance(p.a)},
               {"variance_b", BdmVariance(p.b)},
               {"max_a", p.a.Max()},
               {"max_b", p.b.Max()}});
  } else if (*qm_bdm) {
    const json j = ReadJson(qb_in);
    QualityIndexMap q;
    if (j.contains("blocks")) {
      const Trace t = TraceFromJson(j);
      q = QmapFromTrace(t, RoundUp(t.width, kPadMultiple), RoundUp(t.height, kPadMultiple));
    } else {
      q = QmapFromBdm(ToLatentGrid(BdmFromJson(j)));
    }
    WriteQmap(qb_out, q);
    Emit(out, {{"rows", q.rows()}, {"cols", q.cols()}, {"out", qb_out}});
  } else if (*qm_roi) {
    const QualityIndexMap q = QmapFromRoi(PadMask(ReadPgm(qr_mask)), qr_hi, qr_lo);
    WriteQmap(qr_out, q);
    Emit(out, {{"rows", q.rows()}, {"cols", q.cols()}, {"out", qr_out}});
  } else if (*qm_var) {
    const PlanarImage yuv = PadReplicate(RgbToYuv420(ReadPpm(qv_in)), kPadMultiple);
    const QualityIndexMap q = QmapFromVariance(yuv.planes[0], qv_levels, qv_lowest);
    WriteQmap(qv_out, q);
    Emit(out, {{"rows", q.rows()}, {"cols", q.cols()}, {"out", qv_out}});
  } else if (*qm_rd) {
    const std::vector<int> cand = ParseCandidates(qd_cand);
    const QualityIndexMap q = OptimizeQmap(ReadPpm(qd_in), qd_flags.Build(), qd_beta, cand);
    WriteQmap(qd_out, q);
    Emit(out, {{"rows", q.rows()}, {"cols", q.cols()}, {"rd_beta", qd_beta}, {"out", qd_out}});
  } else if (*qm_render) {
    const QualityIndexMap q = ReadQmap(qn_in);
    WriteQmap(qn_out, q);
    Emit(out, {{"rows", q.rows()}, {"cols", q.cols()}, {"out", qn_out}});
  } else if (*rm) {
    const PlanarImage img = ReadPpm(rm_in);
    CodecConfig cfg = rm_flags.Build();
    if (!rm_qmap.empty()) cfg.qmap = ReadQmap(rm_qmap);
    const RateMatchResult r = MatchRate(img, cfg, rm_target);
    if (!rm_out.empty()) WriteFileBytes(rm_out, r.encode.bytes);
    cfg.beta = r.beta;
    json report = EncodeJson(r.encode, cfg);
    report["rate_match"] = TrialsJson(r, rm_target);
    Emit(out, report);
  } else if (*ex_roi) {
    const PlanarImage img = ReadPpm(er_in);
    const Plane8 mask = ReadPgm(er_mask);
    const CodecConfig cfg = er_flags.Build();
    const ExperimentReport r = RoiExperiment(img, mask, cfg, er_hi, er_lo);
    if (!er_dir.empty()) {
      std::filesystem::create_directories(er_dir);
      CodecConfig uniform = cfg, roi = cfg;
      const QualityIndexMap q = QmapFromRoi(PadMask(mask), er_hi, er_lo);
      uniform.qmap = QualityIndexMap(q.rows(), q.cols(), 0);
      roi.qmap = q;
      WritePpm(er_dir + "/uniform.ppm", Encode(img, uniform).recon.image);
      WritePpm(er_dir + "/roi.ppm", Encode(img, roi).recon.image);
    }
    EmitReport(out, r);
  } else if (*ex_vvc) {
    const PlanarImage img = ReadPpm(ev_in);
    const Trace t = TraceFromJson(ReadJson(ev_trace));
    EmitReport(out, VvcQmapExperiment(img, t, ev_flags.Build(), ev_target));
  } else if (*ex_ovh) {
    const PlanarImage img = ReadPpm(eo_in);
    CodecConfig cfg = eo_flags.Build();
    const PlanarImage padded = PadReplicate(RgbToYuv420(img), kPadMultiple);
    const int rows = padded.height / kBlockSize, cols = padded.width / kBlockSize;
    QualityIndexMap q(rows, cols);
    if (!eo_qmap.empty()) {
      q = ReadQmap(eo_qmap);
    } else if (eo_kind == "variance") {
      q = QmapFromVariance(padded.planes[0]);
    } else if (eo_kind == "random") {
      std::mt19937 rng(eo_seed);
      std::uniform_int_distribution<int> d(kQIndexMin, kQIndexMax);
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) q.set(i, j, d(rng));
      }
    }
    if (eo_target) {
      CodecConfig mapped = cfg;
      mapped.qmap = q;
      cfg.beta = MatchRate(img, mapped, {*eo_target}).beta;
    }
    EmitReport(out, OverheadReport(img, q, cfg));
  }
  return kOk;
}

}  // namespace
}  // namespace qmc::cli

int main(int argc, char** argv) {
  using namespace qmc::cli;
  try {
    return Run(argc, argv);
  } catch (const qmc::NotReachable& e) {
    std::cerr << "qmc: " << e.what() << "\n";
    return kRate;
  } catch (const qmc::FormatError& e) {
    std::cerr << "qmc: " << e.what() << "\n";
    return kInputFormat;
  } catch (const qmc::DecodeError& e) {
    std::cerr << "qmc: " << e.what() << "\n";
    return kInputFormat;
  } catch (const qmc::InvalidArgument& e) {
    std::cerr << "qmc: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "qmc: internal error: " << e.what() << "\n";
    return kInternal;
  }
}
