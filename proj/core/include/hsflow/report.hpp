#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hsflow/energy.hpp"
#include "hsflow/hodge.hpp"
#include "hsflow/kahler.hpp"
#include "hsflow/torsion.hpp"

namespace hsflow {

const char* version();

/// `a+bi` with both parts in shortest round-trip form.
std::string format_complex(cplx z);
std::string format_real(double x);

struct ReportHeader {
  std::string command;
  std::uint64_t model_hash = 0;
  /// Effective tolerances and options, in the order they should appear.
  std::vector<std::pair<std::string, std::string>> settings;
};

/// `# key=value` lines: tool, version, command, model hash, then settings.
std::string header_text(const ReportHeader& header);

std::string cohomology_csv(const CohomologyTable& table);
std::string cohomology_text(const CohomologyTable& table);
/// One `key=value` line per flag followed by the residuals.
std::string classification_text(const MetricClassification& c);
std::string torsion_text(const TorsionReport& r);
std::string flow_csv(const FlowTrace& trace);
std::string flow_text(const FlowTrace& trace);
std::string kahler_text(const KahlerConstruction& k);
std::string family_csv(const FamilyTable& table);

}  // namespace hsflow
