#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dwm/attack.hpp"
#include "dwm/bounds.hpp"
#include "dwm/mdp.hpp"
#include "dwm/watermark.hpp"

namespace dwm {

using Json = nlohmann::json;

/// Matrices travel as {"n": .., "m": .., "rows": [[..], ..]}.
Json matrix_to_json(const Matrix& rows);
Matrix matrix_from_json(const Json& rows, const std::string& where);

Json to_json(const TransitionKernel& kernel);
Json to_json(const Policy& policy);
Json to_json(const CostFunction& cost);
Json to_json(const AttackMatrix& phi);

TransitionKernel kernel_from_json(const Json& doc, const std::string& where = "kernel");
Policy policy_from_json(const Json& doc, const std::string& where = "policy");
CostFunction cost_from_json(const Json& doc, const std::string& where = "cost");
AttackMatrix attack_matrix_from_json(const Json& doc, const std::string& where = "phi");

/// Finite doubles as numbers, non-finite ones as the strings "inf", "-inf", "nan".
Json number_to_json(double x);

/// "%.10g" with inf/nan spelled out; stable across runs.
std::string format_double(double x);

/// Joins fields with commas and a trailing newline.
std::string csv_line(const std::vector<std::string>& fields);

Json to_json(const LossReport& report);
std::string loss_csv_header(int states);
std::string loss_csv_row(const LossReport& report);

Json to_json(const BoundsReport& report);
std::string bounds_csv_header();
std::string bounds_csv_row(const BoundsReport& report);
std::string bounds_summary(const BoundsReport& report);

}  // namespace dwm
