#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hemsim/engine.hpp"
#include "hemsim/lookup_table.hpp"
#include "hemsim/model.hpp"
#include "hemsim/quantizer.hpp"

namespace hemsim {

// A parsed model definition file: the validated model, the scenario
// fragments it declared, and the source annotations (series/table paths or
// inline text) needed to serialize it back.
struct ModelDocument {
    Model model;
    Scenario scenario;
    // element name -> series source, either "file:<path>" or "inline:<spec>"
    std::map<std::string, std::string> series_sources;
    // element name -> lookup table path as written in the file
    std::map<std::string, std::string> table_sources;
};

// Section-based keyed text format; see README for the layout. Relative
// series/table paths resolve against base_dir. Unknown sections or keys are
// rejected.
ModelDocument parse_model_file(const std::string& path);
ModelDocument parse_model_text(const std::string& text, const std::string& base_dir);
std::string serialize_model_document(const ModelDocument& doc);

// Time-series file: CSV "step,level" with header.
TimeSeries read_series_file(const std::string& path);
void write_series_file(const std::string& path, const TimeSeries& series);
TimeSeries parse_inline_series(const std::string& spec);  // "0:2,5:1,10:0"
std::string format_inline_series(const TimeSeries& series);

// Lookup-table file: keyed header block (inputs, output, policy, optional
// embedded quantizers), then one CSV row per filled entry; entries hold
// integers only.
struct LutFile {
    std::shared_ptr<LookupTable> table;
    std::map<std::string, Quantizer> quantizers;  // by variable name
};

LutFile read_lut_file(const std::string& path);
void write_lut_file(const std::string& path, const LookupTable& table,
                    const std::map<std::string, Quantizer>& quantizers = {});

// "name:min:max:levels" flag syntax for quantizer specs.
std::pair<std::string, Quantizer> parse_quantizer_spec(const std::string& spec);

// Aggregate output: CSV "step,element,levels,mean,std"; mean/std in
// normalized units, elements in declaration order within each step, doubles
// at full precision.
void write_aggregate_csv(std::ostream& out, const Model& model, const TraceSet& traces);

struct AggregateFile {
    std::vector<std::string> elements;            // declaration order
    std::map<std::string, int> levels;            // element -> level count
    std::map<std::string, std::vector<double>> mean;
    std::map<std::string, std::vector<double>> stddev;
};

AggregateFile read_aggregate_csv(const std::string& path);

// Per-run trace: CSV "step,<element>,..." wide layout with integer levels.
void write_trace_csv(std::ostream& out, const Model& model, const Trace& trace);

}  // namespace hemsim
