#include "gridrecon/reconfig/report.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

namespace gridrecon::reconfig {

using nlohmann::ordered_json;

std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string line_label(const FeederModel& model, std::size_t line) {
  const auto& l = model.lines.at(line);
  return std::to_string(l.from) + "-" + std::to_string(l.to);
}

std::string solution_json(const FeederModel& model, const ReconfigSolution& s) {
  ordered_json j;
  j["status"] = socp::to_string(s.status);
  j["lambda"] = s.lambda;
  j["objective"] = s.objective;
  j["cost"] = s.cost;
  j["loss_w"] = s.loss_w;
  j["op_cost"] = s.op_cost;
  j["radial"] = s.radial;
  j["max_violation"] = s.max_violation;
  j["iterations"] = s.iterations;
  auto open = ordered_json::array();
  for (auto l : open_lines(model, s)) open.push_back(line_label(model, l));
  j["open_lines"] = open;

  auto lines = ordered_json::array();
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    ordered_json e;
    e["line"] = line_label(model, l);
    e["switchable"] = model.lines[l].switchable;
    e["open"] = static_cast<bool>(s.line_open[l]);
    e["current_a"] = s.current_mag[l];
    auto phases = ordered_json::array();
    if (s.indexing.has_line(l))
      for (Phase ph : model.lines[l].phases.members()) {
        const auto& slot = s.indexing.slot(l, ph);
        phases.push_back({{"phase", std::string(1, grid::label_of(ph))},
                          {"re_a", s.xi(slot.re)},
                          {"im_a", s.xi(slot.im)}});
      }
    e["phases"] = phases;
    lines.push_back(e);
  }
  j["lines"] = lines;

  auto dg = ordered_json::array();
  for (const auto& g : s.dg)
    dg.push_back({{"node", model.nodes[g.node].id},
                  {"phase", std::string(1, grid::label_of(g.phase))},
                  {"p_w", g.p_w},
                  {"q_var", g.q_var}});
  j["dg"] = dg;

  auto margins = ordered_json::array();
  for (std::size_t i = 0; i < s.margin_sites.size(); ++i) {
    const auto k = static_cast<Index>(i);
    margins.push_back({{"node", model.nodes[s.margin_sites[i].node].id},
                       {"phase", std::string(1, grid::label_of(s.margin_sites[i].phase))},
                       {"p_w", s.margin_p(k)},
                       {"q_var", s.margin_q(k)}});
  }
  j["margins"] = margins;
  return j.dump(2) + "\n";
}

void write_current_matrix_csv(const FeederModel& model, const std::vector<ReconfigSolution>& solutions,
                              std::ostream& out) {
  out << "line";
  for (const auto& s : solutions) out << ",lambda_" << format_number(s.lambda);
  out << '\n';
  for (std::size_t l = 0; l < model.lines.size(); ++l) {
    if (!model.lines[l].switchable) continue;
    out << line_label(model, l);
    for (const auto& s : solutions) {
      out << ',';
      if (s.status == socp::Status::optimal)
        out << format_number(s.current_mag[l]);
      else
        out << "INF";
    }
    out << '\n';
  }
}

}  // namespace gridrecon::reconfig
