#include "brakeorbit/morse.hpp"

#include "brakeorbit/errors.hpp"
#include "brakeorbit/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace brakeorbit {

const char* to_string(Consistency c) {
  switch (c) {
    case Consistency::consistent: return "consistent";
    case Consistency::inconsistent: return "inconsistent";
    case Consistency::undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

int negative_count(const PotentialSystem& sys, const JacobiGeodesic& geo, double s, const MorseOptions& opts) {
  return sturm_count(assemble_index_form(sys, geo, s, opts.mesh), 0.0);
}

// Splits (lo, hi] until every count change sits in a bracket narrower than tol.
void bisect_jumps(const PotentialSystem& sys, const JacobiGeodesic& geo, double lo, int c_lo, double hi, int c_hi,
                  double tol, const MorseOptions& opts, std::vector<ConjugatePoint>& out) {
  if (c_hi == c_lo) return;
  if (hi - lo <= tol) {
    ConjugatePoint cp;
    cp.s = 0.5 * (lo + hi);
    cp.multiplicity = c_hi - c_lo;
    cp.bracket = hi - lo;
    out.push_back(cp);
    return;
  }
  const double mid = 0.5 * (lo + hi);
  const int c_mid = negative_count(sys, geo, mid, opts);
  bisect_jumps(sys, geo, lo, c_lo, mid, c_mid, tol, opts, out);
  bisect_jumps(sys, geo, mid, c_mid, hi, c_hi, tol, opts, out);
}

}  // namespace

ConjugateScan conjugate_points(const PotentialSystem& sys, const JacobiGeodesic& geo, double a, int n_samples,
                               const MorseOptions& opts) {
  if (n_samples < 1) throw NumericalError(ErrorCode::invalid_input, "staircase needs at least one sample");
  if (a > geo.length() * (1 + 1e-9)) throw NumericalError(ErrorCode::invalid_input, "scan end beyond the geodesic");
  ConjugateScan scan;
  scan.staircase.resize(n_samples);
  std::vector<int> zero_count(n_samples);
  parallel_for(n_samples, opts.threads, [&](int j) {
    const double s = a * (j + 1) / n_samples;
    const IndexFormDiscretization disc = assemble_index_form(sys, geo, s, opts.mesh);
    const int below = sturm_count(disc, -opts.tol_null);
    const int upto = sturm_count(disc, opts.tol_null);
    scan.staircase[j] = {s, below, upto - below};
    zero_count[j] = sturm_count(disc, 0.0);
  });
  for (int j = 1; j < n_samples; ++j) {
    if (scan.staircase[j].index < scan.staircase[j - 1].index) scan.monotone = false;
  }
  const double tol = opts.bisect_tol * std::max(a, 1.0);
  double lo = 1e-3 * a / n_samples;
  int c_lo = negative_count(sys, geo, lo, opts);
  for (int j = 0; j < n_samples; ++j) {
    const double hi = scan.staircase[j].s;
    bisect_jumps(sys, geo, lo, c_lo, hi, zero_count[j], tol, opts, scan.points);
    lo = hi;
    c_lo = zero_count[j];
  }
  for (auto& cp : scan.points) {
    const MorseCount mc = morse_index(assemble_index_form(sys, geo, cp.s, opts.mesh), opts.tol_null);
    cp.nullity = mc.nullity;
    if (cp.nullity != cp.multiplicity) scan.jumps_match_nullity = false;
  }
  return scan;
}

MorseReport mit_verify(const PotentialSystem& sys, const JacobiGeodesic& geo, double a, int n_samples,
                       const MorseOptions& opts) {
  MorseReport rep;
  rep.a = a;
  rep.count = morse_index(assemble_index_form(sys, geo, a, opts.mesh), opts.tol_null);
  rep.index = rep.count.index;
  rep.nullity = rep.count.nullity;
  rep.scan = conjugate_points(sys, geo, a, n_samples, opts);
  for (const auto& cp : rep.scan.points) {
    if (cp.s < a - opts.tol_s) rep.multiplicity_sum += cp.multiplicity;
  }
  if (rep.count.ambiguous || !rep.count.sturm_agrees) {
    rep.mit = Consistency::undetermined;
  } else {
    rep.mit = rep.index == rep.multiplicity_sum ? Consistency::consistent : Consistency::inconsistent;
  }
  return rep;
}

PositivityResult small_interval_positivity(const PotentialSystem& sys, const JacobiGeodesic& geo, double a,
                                           int samples, const MorseOptions& opts) {
  PositivityResult out;
  out.s_hat = a;
  const int scan = std::max(samples, 4);
  double prev = 0.0;
  for (int j = 1; j <= scan; ++j) {
    const double s = a * j / scan;
    if (negative_count(sys, geo, s, opts) > 0) {
      double lo = prev, hi = s;
      while (hi - lo > 1e-8 * a) {
        const double mid = 0.5 * (lo + hi);
        const IndexFormDiscretization d = assemble_index_form(sys, geo, mid, opts.mesh);
        if (sturm_count(d, 0.0) > 0) hi = mid;
        else lo = mid;
      }
      out.s_hat = lo;
      break;
    }
    prev = s;
  }
  if (!(out.s_hat > 0)) throw NumericalError(ErrorCode::sampling, "no positive interval found near the wall");
  for (int j = 1; j <= samples; ++j) {
    const double s = out.s_hat * j / (samples + 1);
    const IndexFormDiscretization d = assemble_index_form(sys, geo, s, opts.mesh);
    out.s.push_back(s);
    out.lambda_min.push_back(generalized_eigenvalues(d.A, d.B)[0]);
  }
  return out;
}

}  // namespace brakeorbit
