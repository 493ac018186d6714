#pragma once

namespace mpedge {

// Airy function Ai and its derivative on the real line.
//
// |x| <= 6: Maclaurin series summed in extended precision.
// |x| >  6: optimally truncated asymptotic expansions.
// For large positive x the result underflows gracefully to 0.
double airy_ai(double x);
double airy_ai_prime(double x);

struct AiryPair {
  double ai;
  double aip;
};
AiryPair airy(double x);

}  // namespace mpedge
