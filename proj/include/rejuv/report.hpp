#pragma once

#include <optional>
#include <string>

#include "rejuv/config.hpp"
#include "rejuv/design.hpp"
#include "rejuv/reach.hpp"

namespace rejuv {

// The design report is the handoff file between the subcommands: `design`
// writes the model/controller/set sections, `verify` adds the certification,
// `simulate` refuses to run without a passing one.
struct DesignReport {
  Design design;
  std::optional<TucReport> verify;
  std::optional<double> max_tuc;
};

std::string report_to_json(const DesignReport& r);
DesignReport report_from_json(const std::string& text);

void write_report(const DesignReport& r, const std::string& path);
DesignReport read_report(const std::string& path);

}  // namespace rejuv
