#include "sihft/cli.hpp"

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "sihft/campaign.hpp"
#include "sihft/cfg.hpp"
#include "sihft/hardener.hpp"
#include "sihft/report.hpp"
#include "sihft/sim.hpp"
#include "sihft/workloads.hpp"

namespace fs = std::filesystem;

namespace sihft {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(fmt::format("error writing '{}'", path.string()));
}

bool is_image(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) return false;
  const std::uint32_t magic = bytes[0] | bytes[1] << 8 | bytes[2] << 16 | std::uint32_t{bytes[3]} << 24;
  return magic == kImageMagic;
}

struct Source {
  Program program;
  std::string name;
  std::optional<Workload> workload;
};

// Either a file (text or image) or a built-in workload, never both.
Source load_source(const std::string& path, const std::string& workload) {
  if (path.empty() == workload.empty()) throw UsageError("give exactly one of an input file or --workload");
  Source s;
  if (!workload.empty()) {
    s.workload = find_workload(workload);
    if (!s.workload) throw Error(fmt::format("unknown workload '{}'", workload));
    s.program = parse(s.workload->source);
    s.name = workload;
    return s;
  }
  const auto bytes = read_bytes(path);
  if (is_image(bytes)) {
    s.program = from_image(bytes);
  } else {
    s.program = parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  s.name = fs::path(path).stem().string();
  return s;
}

HardeningConfig techniques(const std::string& list) {
  try {
    return parse_techniques(list);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

FaultSpec parse_fault(const std::string& text) {
  // kind:target:reg:bit:time, e.g. seu:register:5:3:120
  std::vector<std::string> f;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) f.push_back(part);
  if (f.size() != 5) throw UsageError(fmt::format("fault '{}' is not kind:target:reg:bit:time", text));
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  FaultSpec spec;
  const std::string kind = lower(f[0]);
  if (kind == "seu") {
    spec.kind = FaultKind::Seu;
  } else if (kind == "set") {
    spec.kind = FaultKind::Set;
  } else {
    throw UsageError(fmt::format("unknown fault kind '{}'", f[0]));
  }
  bool found = false;
  for (auto t : {FaultTarget::Register, FaultTarget::RegReadPort, FaultTarget::AluResult, FaultTarget::PcRegister,
                 FaultTarget::InstrWord, FaultTarget::MemAddr, FaultTarget::MemData}) {
    if (lower(std::string(target_name(t))) == lower(f[1])) {
      spec.target = t;
      found = true;
    }
  }
  if (!found) throw UsageError(fmt::format("unknown fault target '{}'", f[1]));
  try {
    spec.reg = static_cast<std::uint8_t>(std::stoul(f[2]));
    spec.bit = static_cast<std::uint8_t>(std::stoul(f[3]));
    spec.time = std::stoull(f[4]);
  } catch (const std::exception&) {
    throw UsageError(fmt::format("bad number in fault '{}'", text));
  }
  return spec;
}

struct Args {
  std::string input;
  std::string output;
  std::string workload;
  std::string techniques;
  std::vector<std::string> versions;
  std::string pc_map;
  std::string cfg_dump;
  std::string out_dir;
  std::string format = "text";
  std::string fault;
  std::string write_dir;
  unsigned per_point = 3;
  std::uint64_t seed = 1;
  std::uint64_t limit_mult = 10;
  unsigned jobs = 1;
  bool annotate = false;
  bool trace = false;
  bool memdump = false;
};

int cmd_assemble(const Args& a, std::ostream&) {
  const Source s = load_source(a.input, a.workload);
  const auto image = to_image(s.program);
  write_file(a.output, std::string_view(reinterpret_cast<const char*>(image.data()), image.size()));
  return kExitOk;
}

int cmd_disassemble(const Args& a, std::ostream& out) {
  const Source s = load_source(a.input, a.workload);
  const std::string text = disassemble(s.program, {.annotate_provenance = a.annotate});
  if (a.output.empty()) {
    out << text;
  } else {
    write_file(a.output, text);
  }
  return kExitOk;
}

int cmd_harden(const Args& a, std::ostream&) {
  const HardeningConfig cfg = techniques(a.techniques);
  const Source s = load_source(a.input, a.workload);
  const HardenedProgram hp = apply_all(s.program, cfg);
  const fs::path out(a.output);
  std::string payload;
  if (out.extension() == ".bin") {
    const auto image = to_image(hp.program);
    payload.assign(image.begin(), image.end());
  } else {
    payload = disassemble(hp.program, {.annotate_provenance = a.annotate});
  }
  const std::string map_path = a.pc_map.empty() ? a.output + ".map" : a.pc_map;
  const std::string map = format_pc_map(hp);
  const std::string cfg_text = a.cfg_dump.empty() ? std::string() : dump_cfg(build_cfg(hp.program));
  write_file(out, payload);
  write_file(map_path, map);
  if (!a.cfg_dump.empty()) write_file(a.cfg_dump, cfg_text);
  return kExitOk;
}

int cmd_run(const Args& a, std::ostream& out) {
  const HardeningConfig cfg = techniques(a.techniques);
  std::optional<FaultSpec> fault;
  if (!a.fault.empty()) fault = parse_fault(a.fault);
  const Source s = load_source(a.input, a.workload);
  const HardenedProgram hp = apply_all(s.program, cfg);
  const Simulator sim(hp.program);
  if (!a.cfg_dump.empty()) write_file(a.cfg_dump, dump_cfg(build_cfg(hp.program)));

  constexpr std::uint64_t kBudget = 100'000'000;
  const ExecTrace golden = sim.run(kBudget);
  ExecTrace t = golden;
  if (fault) {
    if (golden.status != Status::Halted) throw Error("fault-free run did not halt");
    sim.validate(*fault);
    t = sim.run(a.limit_mult * golden.dyn_count, &*fault);
  }
  out << fmt::format("{}: {} after {} instructions\n", hp.config.name(), status_name(t.status), t.dyn_count);
  if (fault) {
    const Comparison c = compare_traces(golden, t, s.program.data.size());
    out << fmt::format("fault {}: effect {}\n", describe(*fault), effect_name(c.effect));
  }
  if (s.workload && !fault) {
    const std::vector<Word> head(t.final_data.begin(),
                                 t.final_data.begin() + static_cast<std::ptrdiff_t>(
                                                            std::min(t.final_data.size(), s.program.data.size())));
    out << (head == s.workload->expected_data ? "result matches expected data\n" : "result DIFFERS from expected data\n");
  }
  if (a.trace) out << format_trace(t);
  if (a.memdump) out << format_memory(t.final_data);
  return kExitOk;
}

int cmd_campaign(const Args& a, std::ostream& out) {
  // validate everything before touching the filesystem
  const Format format = a.format == "csv" ? Format::Csv : Format::Text;
  if (a.format != "text" && a.format != "csv") throw UsageError(fmt::format("unknown format '{}'", a.format));
  if (a.per_point < 3 || a.per_point > 5) throw UsageError("--per-point must be in [3, 5]");
  if (a.limit_mult == 0) throw UsageError("--limit-mult must be positive");
  if (a.jobs == 0) throw UsageError("--jobs must be positive");
  if (!a.techniques.empty() && !a.versions.empty()) throw UsageError("use either --techniques or --versions");
  std::vector<HardeningConfig> configs;
  if (!a.techniques.empty()) {
    configs.push_back(techniques(a.techniques));
  } else if (!a.versions.empty()) {
    for (const auto& v : a.versions) configs.push_back(techniques(v));
  } else {
    configs = standard_versions();
  }
  const Source s = load_source(a.input, a.workload);

  CampaignOptions opts;
  opts.per_point = a.per_point;
  opts.seed = a.seed;
  opts.limit_mult = a.limit_mult;
  opts.jobs = a.jobs;
  const CampaignResult result = run_campaign(s.program, configs, opts, s.name);
  const Report report = make_report(result, compute_overheads(s.program, configs));

  if (!a.out_dir.empty()) {
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    write_file(dir / "records.csv", records_csv(result));
    write_file(dir / "summary.json", to_json(report));
    write_file(dir / "summary.txt", render_text(report));
    write_file(dir / "summary.csv", render_csv(report));
    write_file(dir / "overheads.csv", render_overheads_csv(report.overheads));
  }
  out << render(report, format);
  return kExitOk;
}

int cmd_report(const Args& a, std::ostream& out) {
  Format format;
  try {
    format = parse_format(a.format);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto bytes = read_bytes(a.input);
  const Report r = report_from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  const std::string text = render(r, format);
  if (a.output.empty()) {
    out << text;
  } else {
    write_file(a.output, text);
  }
  return kExitOk;
}

int cmd_workloads(const Args& a, std::ostream& out) {
  if (!a.workload.empty()) {
    const auto w = find_workload(a.workload);
    if (!w) throw Error(fmt::format("unknown workload '{}'", a.workload));
    out << w->source;
    return kExitOk;
  }
  if (!a.write_dir.empty()) fs::create_directories(a.write_dir);
  for (const auto& name : workload_names()) {
    out << name << '\n';
    if (!a.write_dir.empty()) write_file(fs::path(a.write_dir) / (name + ".s"), find_workload(name)->source);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Software fault-tolerance hardening and fault-injection toolkit", "sihft"};
  app.require_subcommand(1);
  Args a;

  auto input_opts = [&](CLI::App* c) {
    c->add_option("input", a.input, "Assembly (.s) or binary image");
    c->add_option("-w,--workload", a.workload, "Built-in workload instead of an input file");
  };

  auto* assemble = app.add_subcommand("assemble", "Assemble to a binary image");
  input_opts(assemble);
  assemble->add_option("-o,--output", a.output, "Image path")->required();

  auto* disasm = app.add_subcommand("disassemble", "Print a program as assembly");
  input_opts(disasm);
  disasm->add_option("-o,--output", a.output, "Output path (default stdout)");
  disasm->add_flag("--annotate", a.annotate, "Annotate provenance");

  auto* harden = app.add_subcommand("harden", "Apply hardening passes");
  input_opts(harden);
  harden->add_option("--techniques", a.techniques, "variables,inverted-branches,signatures | all");
  harden->add_option("-o,--output", a.output, "Hardened program (.s, or .bin for an image)")->required();
  harden->add_option("--pc-map", a.pc_map, "pc map path (default <output>.map)");
  harden->add_option("--cfg-dump", a.cfg_dump, "Write the hardened CFG here");
  harden->add_flag("--annotate", a.annotate, "Annotate provenance");

  auto* run = app.add_subcommand("run", "Execute a program, optionally with one fault");
  input_opts(run);
  run->add_option("--techniques", a.techniques, "Harden before running");
  run->add_option("--inject", a.fault, "kind:target:reg:bit:time, e.g. seu:register:5:3:120");
  run->add_option("--limit-mult", a.limit_mult, "Timeout as a multiple of the fault-free run");
  run->add_option("--cfg-dump", a.cfg_dump, "Write the CFG here");
  run->add_flag("--trace", a.trace, "Print the pc trace");
  run->add_flag("--memdump", a.memdump, "Print the final data segment");

  auto* campaign = app.add_subcommand("campaign", "Run a seeded fault-injection campaign");
  input_opts(campaign);
  campaign->add_option("--techniques", a.techniques, "Single version to evaluate");
  campaign->add_option("--versions", a.versions, "Versions to evaluate (default: the four standard ones)");
  campaign->add_option("--per-point", a.per_point, "Maximum faults per fault point (3-5)");
  campaign->add_option("--seed", a.seed, "RNG seed");
  campaign->add_option("--limit-mult", a.limit_mult, "Timeout as a multiple of the fault-free run");
  campaign->add_option("--jobs", a.jobs, "Worker threads");
  campaign->add_option("--format", a.format, "text | csv");
  campaign->add_option("--out-dir", a.out_dir, "Write records and summaries here");

  auto* report = app.add_subcommand("report", "Re-render a saved campaign summary");
  report->add_option("input", a.input, "summary.json")->required();
  report->add_option("--format", a.format, "text | csv | json");
  report->add_option("-o,--output", a.output, "Output path (default stdout)");

  auto* workloads = app.add_subcommand("workloads", "List, print or export the built-in workloads");
  workloads->add_option("-w,--workload", a.workload, "Print this workload's source");
  workloads->add_option("--write", a.write_dir, "Write every workload as <dir>/<name>.s");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*assemble) return cmd_assemble(a, out);
    if (*disasm) return cmd_disassemble(a, out);
    if (*harden) return cmd_harden(a, out);
    if (*run) return cmd_run(a, out);
    if (*campaign) return cmd_campaign(a, out);
    if (*report) return cmd_report(a, out);
    if (*workloads) return cmd_workloads(a, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace sihft
