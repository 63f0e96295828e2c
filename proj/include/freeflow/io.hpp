#pragma once

#include "freeflow/freeprob.hpp"
#include "freeflow/pdecheck.hpp"
#include "freeflow/rootset.hpp"
#include "freeflow/spectral.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>

namespace freeflow::io {

using Json = nlohmann::ordered_json;

/// Roots file: one real per line, '#' comments and blank lines ignored.
/// Values are sorted on read; duplicates raise InvariantError.
RootSet read_roots(const std::filesystem::path& path);

/// Writes one root per line with round-trip precision, after an optional
/// '#' comment line.
void write_roots(const std::filesystem::path& path, const RootSet& r, const std::string& comment = {});

Json to_json(const spectral::DensityGrid& g);
spectral::DensityGrid density_from_json(const Json& j);

Json to_json(const pdecheck::ResidualSlice& s);

/// {"order": N, "moments": [...], "cumulants": [...]}.
Json moment_report(const freeprob::MomentSequence& m, const freeprob::CumulantSequence& kappa);

/// {"t": t, "roots": [...]}.
Json trajectory_record(const FlowState& f);

/// Newline-delimited JSON; one compact record per line.
class NdjsonWriter {
public:
  explicit NdjsonWriter(std::ostream& out) : out_(out) {}
  void write(const Json& record);

private:
  std::ostream& out_;
};

/// Pretty-prints to the file, or to stdout for "-". Throws InputError if the
/// file cannot be written.
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace freeflow::io
