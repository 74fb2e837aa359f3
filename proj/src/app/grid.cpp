#include <limits>
#include <ostream>
#include <set>

#include "safecomp/app.hpp"
#include "safecomp/error.hpp"
#include "safecomp/text.hpp"

namespace safecomp {

CutPoints parse_cutpoints(std::span<const std::string> specs) {
  CutPoints cuts;
  std::set<std::string> seen;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw Error("cut '" + spec + "' must look like name=v1,v2,...");
    std::string name(text::trim(std::string_view(spec).substr(0, eq)));
    if (name.empty()) throw Error("cut '" + spec + "' has no dimension name");
    if (!seen.insert(name).second) throw Error("dimension '" + name + "' given twice");
    std::vector<double> values;
    for (auto cell : text::split(std::string_view(spec).substr(eq + 1), ',')) {
      auto v = text::parse_double(text::trim(cell));
      if (!v) throw Error("cut '" + name + "': '" + std::string(cell) + "' is not a number");
      values.push_back(*v);
    }
    if (values.empty()) throw Error("cut '" + name + "' is empty");
    cuts.names.push_back(std::move(name));
    cuts.values.push_back(std::move(values));
  }
  return cuts;
}

std::size_t grid_size(const CutPoints& cuts) {
  if (cuts.names.size() != cuts.values.size()) throw Error("cut names and value lists differ in count");
  if (cuts.values.empty()) throw Error("grid has no dimensions");
  std::size_t n = 1;
  for (std::size_t d = 0; d < cuts.values.size(); ++d) {
    const std::size_t k = cuts.values[d].size();
    if (k == 0) throw Error("dimension '" + cuts.names[d] + "' has no values");
    if (n > std::numeric_limits<std::size_t>::max() / k) throw Error("grid size overflows");
    n *= k;
  }
  return n;
}

void for_each_grid_point(const CutPoints& cuts, const std::function<void(std::span<const double>)>& visit) {
  const std::size_t total = grid_size(cuts);
  const std::size_t dims = cuts.values.size();
  std::vector<std::size_t> idx(dims, 0);
  std::vector<double> x(dims);
  for (std::size_t d = 0; d < dims; ++d) x[d] = cuts.values[d][0];
  for (std::size_t n = 0; n < total; ++n) {
    visit(x);
    for (std::size_t d = dims; d-- > 0;) {
      if (++idx[d] < cuts.values[d].size()) {
        x[d] = cuts.values[d][idx[d]];
        break;
      }
      idx[d] = 0;
      x[d] = cuts.values[d][0];
    }
  }
}

LabeledDataset generate_grid(const CutPoints& cuts) {
  LabeledDataset data;
  data.attributes = cuts.names;
  data.points.reserve(grid_size(cuts));
  for_each_grid_point(cuts, [&](std::span<const double> x) { data.points.emplace_back(x.begin(), x.end()); });
  return data;
}

std::size_t write_grid_csv(const CutPoints& cuts, std::ostream& out, const Network* label_with) {
  if (label_with && label_with->input_dim != cuts.names.size())
    throw DimensionError("grid vs network input", label_with->input_dim, cuts.names.size());
  for (std::size_t d = 0; d < cuts.names.size(); ++d) out << (d ? "," : "") << cuts.names[d];
  if (label_with) out << ",label";
  out << '\n';
  std::size_t rows = 0;
  for_each_grid_point(cuts, [&](std::span<const double> x) {
    out << text::join_doubles(x);
    if (label_with) out << ',' << label_with->labels[classify(*label_with, normalize(*label_with, x))];
    out << '\n';
    ++rows;
  });
  return rows;
}

} // namespace safecomp
