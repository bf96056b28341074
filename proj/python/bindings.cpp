#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sihft/campaign.hpp"
#include "sihft/cfg.hpp"
#include "sihft/hardener.hpp"
#include "sihft/report.hpp"
#include "sihft/sim.hpp"
#include "sihft/workloads.hpp"

namespace py = pybind11;
using namespace sihft;

namespace {

Program load(const std::string& source_or_workload) {
  if (auto w = find_workload(source_or_workload)) return parse(w->source);
  return parse(source_or_workload);
}

py::dict run_program(const std::string& source, const std::string& techniques, std::uint64_t limit) {
  const Program p = load(source);
  const HardenedProgram hp = apply_all(p, parse_techniques(techniques));
  const ExecTrace t = Simulator(hp.program).run(limit);
  py::dict out;
  out["status"] = std::string(status_name(t.status));
  out["dyn_count"] = t.dyn_count;
  out["data"] = t.final_data;
  out["pc_trace"] = t.pc_trace;
  return out;
}

py::dict harden(const std::string& source, const std::string& techniques) {
  const HardenedProgram hp = apply_all(load(source), parse_techniques(techniques));
  py::dict out;
  out["source"] = disassemble(hp.program);
  out["pc_map"] = hp.pc_map;
  out["entry_map"] = hp.entry_map;
  out["cfg"] = dump_cfg(build_cfg(hp.program));
  return out;
}

std::string campaign(const std::string& source, const std::vector<std::string>& versions, std::uint64_t seed,
                     unsigned per_point, std::uint64_t limit_mult, unsigned jobs, const std::string& name) {
  std::vector<HardeningConfig> configs;
  if (versions.empty()) configs = standard_versions();
  for (const auto& v : versions) configs.push_back(parse_techniques(v));
  CampaignOptions opts;
  opts.seed = seed;
  opts.per_point = per_point;
  opts.limit_mult = limit_mult;
  opts.jobs = jobs;
  const Program p = load(source);
  const std::string label = name.empty() && find_workload(source) ? source : name;
  CampaignResult r;
  {
    py::gil_scoped_release release;
    r = run_campaign(p, configs, opts, label.empty() ? "program" : label);
  }
  return to_json(make_report(r, compute_overheads(p, configs)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Software fault-tolerance hardening and fault-injection core";
  py::register_exception<Error>(m, "SihftError", PyExc_ValueError);

  m.def("workload_names", &workload_names);
  m.def(
      "workload_source",
      [](const std::string& name) {
        auto w = find_workload(name);
        if (!w) throw Error("unknown workload: " + name);
        return w->source;
      },
      py::arg("name"));
  m.def(
      "normalize", [](const std::string& source) { return disassemble(load(source)); }, py::arg("source"),
      "Parse assembly (or a workload name) and print it back in canonical form.");
  m.def(
      "assemble",
      [](const std::string& source) {
        const auto img = to_image(load(source));
        return py::bytes(reinterpret_cast<const char*>(img.data()), img.size());
      },
      py::arg("source"));
  m.def(
      "disassemble",
      [](const py::bytes& image) {
        const std::string raw = image;
        const auto* b = reinterpret_cast<const std::uint8_t*>(raw.data());
        return disassemble(from_image({b, raw.size()}));
      },
      py::arg("image"));
  m.def("cfg", [](const std::string& source) { return dump_cfg(build_cfg(load(source))); }, py::arg("source"));
  m.def("harden", &harden, py::arg("source"), py::arg("techniques") = "all");
  m.def("run", &run_program, py::arg("source"), py::arg("techniques") = "", py::arg("limit") = 100'000'000);
  m.def("campaign_json", &campaign, py::arg("source"), py::arg("versions") = std::vector<std::string>{},
        py::arg("seed") = 1, py::arg("per_point") = 3, py::arg("limit_mult") = 10, py::arg("jobs") = 1,
        py::arg("name") = "");
  m.def(
      "render",
      [](const std::string& report_json, const std::string& format) {
        return render(report_from_json(report_json), parse_format(format));
      },
      py::arg("report_json"), py::arg("format") = "text");
}
