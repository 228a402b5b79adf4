#include "dwm/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dwm/error.hpp"

namespace dwm {

namespace {

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v(i)));
  return out;
}

int require_int(const Json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc[key].is_number_integer()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return doc[key].get<int>();
}

template <typename Make>
auto build(const std::string& where, Make make) {
  try {
    return make();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

Json matrix_to_json(const Matrix& rows) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < rows.cols(); ++c) row.push_back(number_to_json(rows(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

Matrix matrix_from_json(const Json& rows, const std::string& where) {
  if (!rows.is_array() || rows.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
  if (cols == 0) throw ConfigError(where + "[0]: expected a non-empty array");
  Matrix out(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string at = where + "[" + std::to_string(r) + "]";
    if (!rows[r].is_array() || rows[r].size() != cols) {
      throw ConfigError(at + ": expected " + std::to_string(cols) + " numbers");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!rows[r][c].is_number()) throw ConfigError(at + "[" + std::to_string(c) + "]: not a number");
      out(r, c) = rows[r][c].get<double>();
    }
  }
  return out;
}

Json to_json(const TransitionKernel& kernel) {
  return {{"n", kernel.states()}, {"m", kernel.actions()}, {"rows", matrix_to_json(kernel.matrix())}};
}

Json to_json(const Policy& policy) {
  return {{"n", policy.states()}, {"m", policy.actions()}, {"rows", matrix_to_json(policy.matrix())}};
}

Json to_json(const CostFunction& cost) {
  return {{"n", cost.states()}, {"m", cost.actions()}, {"rows", matrix_to_json(cost.matrix())}};
}

Json to_json(const AttackMatrix& phi) {
  return {{"n", phi.states()}, {"rows", matrix_to_json(phi.matrix())}};
}

TransitionKernel kernel_from_json(const Json& doc, const std::string& where) {
  const int n = require_int(doc, "n", where);
  const int m = require_int(doc, "m", where);
  Matrix rows = matrix_from_json(doc.value("rows", Json()), where + ".rows");
  return build(where, [&] { return TransitionKernel(n, m, std::move(rows)); });
}

Policy policy_from_json(const Json& doc, const std::string& where) {
  Matrix rows = matrix_from_json(doc.value("rows", Json()), where + ".rows");
  if (doc.contains("n") && require_int(doc, "n", where) != rows.rows()) {
    throw ConfigError(where + ".n: does not match the number of rows");
  }
  if (doc.contains("m") && require_int(doc, "m", where) != rows.cols()) {
    throw ConfigError(where + ".m: does not match the row width");
  }
  return build(where, [&] { return Policy(std::move(rows)); });
}

CostFunction cost_from_json(const Json& doc, const std::string& where) {
  Matrix rows = matrix_from_json(doc.value("rows", Json()), where + ".rows");
  return build(where, [&] { return CostFunction(std::move(rows)); });
}

AttackMatrix attack_matrix_from_json(const Json& doc, const std::string& where) {
  const int n = require_int(doc, "n", where);
  Matrix rows = matrix_from_json(doc.value("rows", Json()), where + ".rows");
  return build(where, [&] { return AttackMatrix(n, std::move(rows)); });
}

Json number_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += fields[i];
  }
  line += '\n';
  return line;
}

Json to_json(const LossReport& report) {
  return {{"beta", report.beta},
          {"exact_gap", vector_to_json(report.exact_gap)},
          {"derivative_kernel_only", vector_to_json(report.derivative_kernel_only)},
          {"derivative_full", vector_to_json(report.derivative_full)},
          {"B", matrix_to_json(report.B)}};
}

std::string loss_csv_header(int states) {
  std::vector<std::string> fields{"beta"};
  for (const char* prefix : {"exact_gap_", "deriv_kernel_", "deriv_full_"}) {
    for (int i = 0; i < states; ++i) fields.push_back(prefix + std::to_string(i));
  }
  return csv_line(fields);
}

std::string loss_csv_row(const LossReport& report) {
  std::vector<std::string> fields{format_double(report.beta)};
  for (const Vector* v : {&report.exact_gap, &report.derivative_kernel_only, &report.derivative_full}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) fields.push_back(format_double((*v)(i)));
  }
  return csv_line(fields);
}

Json to_json(const BoundsReport& r) {
  Json doeblin = {{"lag", r.doeblin.lag},
                  {"lambda", number_to_json(r.doeblin.lambda)},
                  {"found", r.doeblin.found}};
  Json extended = {{"lag", r.extended_doeblin.lag},
                   {"lambda", number_to_json(r.extended_doeblin.lambda)},
                   {"found", r.extended_doeblin.found}};
  return {{"supported", r.supported},
          {"note", r.note},
          {"asymptotic", true},
          {"series_variant", to_string(r.series_variant)},
          {"c", number_to_json(r.c)},
          {"M", r.M},
          {"v", r.v},
          {"u_c", number_to_json(r.u_c)},
          {"mtbfa_lb", number_to_json(r.mtbfa_lb)},
          {"stealthy", r.stealthy},
          {"I_QR", number_to_json(r.I_QR)},
          {"slack", number_to_json(r.slack)},
          {"lambda1", number_to_json(r.lambda1)},
          {"r_min", number_to_json(r.r_min)},
          {"gamma_min", number_to_json(r.gamma_min)},
          {"phi_min", number_to_json(r.phi_min)},
          {"md_ub", number_to_json(r.md_ub)},
          {"doeblin", doeblin},
          {"extended_doeblin", extended},
          {"Q", r.Q.size() ? matrix_to_json(r.Q) : Json::array()}};
}

std::string bounds_csv_header() {
  return csv_line({"supported", "series_variant", "c", "M", "v", "u_c", "mtbfa_lb", "stealthy",
                   "I_QR", "slack", "lambda1", "doeblin_lag", "doeblin_lambda", "md_ub"});
}

std::string bounds_csv_row(const BoundsReport& r) {
  return csv_line({r.supported ? "1" : "0", to_string(r.series_variant), format_double(r.c),
                   std::to_string(r.M), std::to_string(r.v), format_double(r.u_c),
                   format_double(r.mtbfa_lb), r.stealthy ? "1" : "0", format_double(r.I_QR),
                   format_double(r.slack), format_double(r.lambda1), std::to_string(r.doeblin.lag),
                   format_double(r.doeblin.lambda), format_double(r.md_ub)});
}

std::string bounds_summary(const BoundsReport& r) {
  std::ostringstream out;
  out << "bounds (asymptotic, series " << to_string(r.series_variant) << ")\n";
  out << "  c = " << format_double(r.c) << ", M = " << r.M << ", v = " << r.v
      << ", u(c) = " << format_double(r.u_c) << "\n";
  out << "  MTBFA lower bound: " << format_double(r.mtbfa_lb) << "\n";
  if (!r.note.empty()) out << "  " << r.note << "\n";
  if (r.supported) {
    out << "  Doeblin (post-attack joint chain): lag " << r.doeblin.lag << ", lambda "
        << format_double(r.doeblin.lambda) << "\n";
    out << "  lambda1 = " << format_double(r.lambda1) << ", slack = " << format_double(r.slack)
        << "\n";
    out << "  I(Q,R) = " << format_double(r.I_QR) << " nats/step\n";
    out << "  MD upper bound: " << format_double(r.md_ub) << "\n";
  }
  return out.str();
}

}  // namespace dwm
