#include "asdyn/draws_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "asdyn/text.hpp"

namespace asdyn {

std::vector<double> PosteriorDraws::chain_column(int chain, Eigen::Index col) const {
  std::vector<double> out(static_cast<std::size_t>(n_draws));
  for (int d = 0; d < n_draws; ++d) out[static_cast<std::size_t>(d)] = values(row(chain, d), col);
  return out;
}

std::vector<double> PosteriorDraws::column(Eigen::Index col) const {
  std::vector<double> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) out[static_cast<std::size_t>(r)] = values(r, col);
  return out;
}

Eigen::Index PosteriorDraws::column_index(const std::string& block, std::size_t index) const {
  const ParameterBlock& b = layout.at(block);
  if (index >= b.size) {
    throw std::out_of_range("draws: index " + std::to_string(index + 1) + " outside block '" + block + "' of size " +
                            std::to_string(b.size));
  }
  return static_cast<Eigen::Index>(b.offset + index);
}

std::vector<double> PosteriorDraws::column(const std::string& block, std::size_t index) const {
  return column(column_index(block, index));
}

int PosteriorDraws::total_divergences() const noexcept {
  int total = 0;
  for (int d : divergences) total += d;
  return total;
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  out << "chain,draw";
  for (const auto& name : draws.layout.column_names()) out << ',' << name;
  out << '\n';
  std::ostringstream line;
  line << std::setprecision(17);
  for (int c = 0; c < draws.n_chains; ++c) {
    for (int d = 0; d < draws.n_draws; ++d) {
      line.str("");
      line << (c + 1) << ',' << (d + 1);
      const Eigen::Index r = draws.row(c, d);
      for (Eigen::Index j = 0; j < draws.values.cols(); ++j) line << ',' << draws.values(r, j);
      line << '\n';
      out << line.str();
    }
  }
}

PosteriorDraws read_draws_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(source + ": empty draws file");
  std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "draw") {
    throw std::runtime_error(source + ": draws header must start with chain,draw and name at least one parameter");
  }
  PosteriorDraws draws;
  draws.layout = ParameterLayout::from_column_names({header.begin() + 2, header.end()});
  const std::size_t dim = draws.layout.dim();
  std::vector<std::vector<double>> rows;
  std::vector<int> chain_of;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != dim + 2) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim + 2) +
                               " fields, found " + std::to_string(fields.size()));
    }
    chain_of.push_back(static_cast<int>(parse_double(fields[0], source, line_no, "chain")));
    std::vector<double> row(dim);
    for (std::size_t j = 0; j < dim; ++j) row[j] = parse_double(fields[j + 2], source, line_no, header[j + 2]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(source + ": draws file has no rows");
  int n_chains = 0;
  int previous = 0;
  std::vector<int> counts;
  for (int c : chain_of) {
    if (c != previous) {
      if (c != previous + 1) throw std::runtime_error(source + ": chains must be numbered 1, 2, ... and contiguous");
      counts.push_back(0);
      previous = c;
      ++n_chains;
    }
    ++counts.back();
  }
  for (int k : counts) {
    if (k != counts.front()) throw std::runtime_error(source + ": chains have different numbers of draws");
  }
  draws.n_chains = n_chains;
  draws.n_draws = counts.front();
  draws.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t j = 0; j < dim; ++j) draws.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
  }
  return draws;
}

PosteriorDraws read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open draws file '" + path + "'");
  return read_draws_csv(in, path);
}

nlohmann::json diagnostics_json(const DiagnosticsReport& report, const PosteriorDraws& draws) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  // Draws read back from CSV carry no sampler statistics.
  auto at = [](const auto& v, std::size_t i) { return i < v.size() ? json(v[i]) : json(nullptr); };
  json chains = json::array();
  for (int c = 0; c < draws.n_chains; ++c) {
    const auto i = static_cast<std::size_t>(c);
    chains.push_back({{"chain", c + 1},
                      {"divergences", at(draws.divergences, i)},
                      {"step_size", at(draws.step_size, i)},
                      {"mean_accept", at(draws.mean_accept, i)},
                      {"n_leapfrog", at(draws.n_leapfrog, i)}});
  }
  json params = json::array();
  for (const auto& p : report.parameters) {
    params.push_back({{"name", p.name},
                      {"mean", p.mean},
                      {"sd", p.sd},
                      {"rhat", opt(p.rhat)},
                      {"ess_bulk", opt(p.ess_bulk)},
                      {"flagged", p.flagged}});
  }
  json out = {{"n_chains", draws.n_chains},
              {"n_draws", draws.n_draws},
              {"total_divergences", draws.total_divergences()},
              {"max_rhat", opt(report.max_rhat())},
              {"min_ess_bulk", opt(report.min_ess())},
              {"n_flagged", report.n_flagged()},
              {"fraction_rhat_above_1_05", report.fraction_rhat_above(1.05)},
              {"chains", chains},
              {"parameters", params}};
  if (!report.rhat_note.empty()) out["rhat_note"] = report.rhat_note;
  return out;
}

}  // namespace asdyn
