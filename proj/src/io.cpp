#include "freeflow/io.hpp"

#include "freeflow/errors.hpp"
#include "freeflow/measures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace freeflow::io {

namespace {

// NaN and infinities become null, matching nlohmann's own dump behaviour.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

RootSet read_roots(const std::filesystem::path& path) {
  return RootSet::from_unsorted(measures::read_sample_file(path));
}

void write_roots(const std::filesystem::path& path, const RootSet& r, const std::string& comment) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw InputError("cannot write roots file '" + path.string() + "'");
  if (!comment.empty()) std::fprintf(f, "# %s\n", comment.c_str());
  for (double v : r.values()) std::fprintf(f, "%.17g\n", v);
  if (std::fclose(f) != 0) throw InputError("error while writing '" + path.string() + "'");
}

Json to_json(const spectral::DensityGrid& g) {
  Json j;
  j["t"] = g.t();
  j["x0"] = g.x0();
  j["dx"] = g.dx();
  j["u"] = std::vector<double>(g.values().begin(), g.values().end());
  return j;
}

spectral::DensityGrid density_from_json(const Json& j) {
  try {
    return spectral::DensityGrid(j.at("x0").get<double>(), j.at("dx").get<double>(),
                                 j.at("u").get<std::vector<double>>(), j.value("t", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("density grid JSON: ") + e.what());
  }
}

Json to_json(const pdecheck::ResidualSlice& s) {
  Json j;
  j["t"] = s.time;
  j["max_abs"] = number(s.max_abs);
  j["median_abs"] = number(s.median_abs);
  j["core_max_abs"] = number(s.core_max_abs);
  j["region"] = Json::array({number(s.region[0]), number(s.region[1])});
  j["points"] = s.points;
  return j;
}

Json moment_report(const freeprob::MomentSequence& m, const freeprob::CumulantSequence& kappa) {
  Json j;
  j["order"] = m.order();
  j["moments"] = m.m;
  j["cumulants"] = kappa.kappa;
  return j;
}

Json trajectory_record(const FlowState& f) {
  Json j;
  j["t"] = f.t();
  j["roots"] = f.current().vector();
  return j;
}

void NdjsonWriter::write(const Json& record) {
  out_ << record.dump() << '\n';
  if (!out_) throw InputError("error while writing NDJSON output");
}

void write_json(const std::filesystem::path& path, const Json& j) {
  if (path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("error while writing '" + path.string() + "'");
}

}  // namespace freeflow::io
