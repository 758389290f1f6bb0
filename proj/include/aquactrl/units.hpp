#pragma once

// Internal base units: ft, s, ft^3/s, mg/L. Everything is converted at
// ingest time; no unit factors appear in the numerical kernels.

namespace aquactrl::units {

// 1 US gallon per minute in cubic feet per second.
inline constexpr double GPM_TO_FT3S = 0.0022280093;

// Specific weight of water, lb/ft^3 (rho_W * g in US customary units).
inline constexpr double WATER_SPECIFIC_WEIGHT_LB_FT3 = 62.4;

// 1 ft*lb/s in kW.
inline constexpr double FTLB_PER_S_TO_KW = 1.3558179483314004e-3;

inline constexpr double gpm_to_ft3s(double gpm) { return gpm * GPM_TO_FT3S; }
inline constexpr double ft3s_to_gpm(double q) { return q / GPM_TO_FT3S; }

}  // namespace aquactrl::units
