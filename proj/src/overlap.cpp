#include "gaussfit/overlap.hpp"

#include "gaussfit/statistics.hpp"

#include <cmath>

namespace gaussfit {

EntropyEstimate relative_entropy(const RadialStats& stats, const FreeEnergyPoint& z) {
  if (z.w < 0) throw Error(ErrorCode::NegativeWeight, "inverse temperature must be nonnegative");
  EntropyEstimate h;
  if (z.w == 0) return h;
  h.H = 0.5 * stats.E2 * stats.E2 * z.w - z.Z;
  h.se = std::hypot(stats.E2 * z.w * stats.se_E2, z.se);
  if (h.H < 0 && h.H >= -kSigmas * h.se - 1e-12 * z.Z) {
    h.H = 0;
    h.clipped = true;
  }
  return h;
}

double tv_pinsker(double H) {
  if (H < 0) throw Error(ErrorCode::InvalidConfig, "relative entropy must be nonnegative");
  return std::sqrt(H / 2);
}

TvEstimate tv_direct(const Series& distances, const FreeEnergyPoint& z, int batches) {
  TvEstimate tv;
  if (z.w == 0) return tv;
  const auto& r = distances.values;
  const Eigen::VectorXd dev = 0.5 * (1 - (z.Z - 0.5 * z.w * r.array().square()).exp()).abs();
  const MeanEstimate est = batch_mean(std::span<const double>(dev.data(), dev.size()), distances.chain_offsets, batches);
  tv.dtv = std::clamp(est.mean, 0.0, 1.0);
  tv.se = est.se;
  tv.bias_bound = 0.5 * z.se;
  return tv;
}

double choose_w0(const RadialStats& stats, double c_prime) {
  if (!(stats.S > 0) || !(stats.E2 > 0)) throw Error(ErrorCode::DegenerateBody, "w0 needs E2 > 0 and S > 0");
  if (!(c_prime > 0)) throw Error(ErrorCode::InvalidConfig, "c_prime must be positive");
  return c_prime / (stats.E2 * stats.S);
}

CheckResult check_pinsker(const EntropyEstimate& h, const TvEstimate& tv, double w) {
  CheckResult res{"pinsker_domination"};
  const double H = std::max(h.H, 0.0);
  const double bound = tv_pinsker(H);
  const double bound_se = tv_pinsker(H + h.se) - bound;
  const double sigma = std::hypot(tv.se, bound_se);
  res.add("w", w).add("dtv_direct", tv.dtv).add("dtv_pinsker", bound).add("sigma", sigma).add("bias", tv.bias_bound);
  const bool ok = tv.dtv <= bound + kSigmas * sigma + tv.bias_bound + 1e-12;
  res.verdict = ok ? Verdict::Pass : Verdict::Fail;
  res.detail = ok ? "d_TV <= sqrt(H / 2)" : "direct TV exceeds the Pinsker bound";
  return res;
}

OverlapReport overlap_at(const Series& distances, const FreeEnergyCurve& curve, double w, int batches) {
  OverlapReport rep;
  rep.w0 = w;
  rep.z = interpolate_curve(curve, w);
  rep.interpolated = rep.z.method == FreeEnergyMethod::Interpolated;
  const EntropyEstimate h = relative_entropy(curve.stats, rep.z);
  const TvEstimate tv = tv_direct(distances, rep.z, batches);
  rep.H = h.H;
  rep.se_H = h.se;
  rep.dtv_pinsker = tv_pinsker(std::max(h.H, 0.0));
  rep.dtv_direct = tv.dtv;
  rep.se_dtv = tv.se;
  rep.dtv_bias = tv.bias_bound;

  CheckResult& ent = rep.entropy_check;
  ent.name = "corollary_entropy";
  ent.add("w0", w).add("H", h.H).add("se", h.se).add("interpolated", rep.interpolated ? 1 : 0);
  const bool ent_ok = h.H <= 0.5 + kSigmas * h.se;
  ent.verdict = ent_ok ? Verdict::Pass : Verdict::Fail;
  ent.detail = ent_ok ? "H(mu_K | gamma_K^w0) <= 1/2" : "relative entropy above 1/2 at w0";

  CheckResult& tvc = rep.tv_check;
  tvc.name = "corollary_tv";
  tvc.add("w0", w).add("dtv_direct", tv.dtv).add("se", tv.se).add("dtv_pinsker", rep.dtv_pinsker);
  // Either figure below 1/2 settles the claim; Pinsker is the primary route.
  const bool tv_ok = rep.dtv_pinsker <= 0.5 + kSigmas * (tv_pinsker(std::max(h.H, 0.0) + h.se) - rep.dtv_pinsker) ||
                     tv.dtv <= 0.5 + kSigmas * tv.se + tv.bias_bound;
  tvc.verdict = tv_ok ? Verdict::Pass : Verdict::Fail;
  tvc.detail = tv_ok ? "d_TV(mu_K, gamma_K^w0) <= 1/2" : "total variation above 1/2 at w0";

  rep.pinsker_check = check_pinsker(h, tv, w);
  return rep;
}

OverlapReport corollary_check(const Series& distances, const FreeEnergyCurve& curve, double c_prime, int batches) {
  return overlap_at(distances, curve, choose_w0(curve.stats, c_prime), batches);
}

CheckResult check_entropy_shape(const FreeEnergyCurve& curve) {
  CheckResult res{"entropy_convex_nondecreasing"};
  const auto& st = curve.stats;
  struct P {
    double w, H, se_z;
  };
  std::vector<P> pts{{0, 0, 0}};
  for (const auto& p : curve.points)
    if (p.w > 0) pts.push_back({p.w, 0.5 * st.E2 * st.E2 * p.w - p.Z, p.se});
  int checked = 0, violations = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dw = pts[i].w - pts[i - 1].w;
    const double sigma = std::sqrt(pts[i].se_z * pts[i].se_z + pts[i - 1].se_z * pts[i - 1].se_z +
                                   std::pow(st.E2 * st.se_E2 * dw, 2));
    ++checked;
    if (pts[i].H - pts[i - 1].H < -kShapeSigmas * sigma) {
      ++violations;
      res.add("decrease_w", pts[i].w);
    }
  }
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const auto &a = pts[i - 1], &b = pts[i], &c = pts[i + 1];
    const double h1 = b.w - a.w, h2 = c.w - b.w;
    const double chord = a.H + (c.H - a.H) * h1 / (h1 + h2);
    // The E2 term is linear in w and cancels in the chord comparison.
    const double sigma = std::sqrt(b.se_z * b.se_z + std::pow(a.se_z * h2 / (h1 + h2), 2) +
                                   std::pow(c.se_z * h1 / (h1 + h2), 2));
    ++checked;
    if (b.H - chord > kShapeSigmas * sigma + 1e-12 * std::abs(chord)) {
      ++violations;
      res.add("concave_kink_w", b.w);
    }
  }
  res.add("comparisons", checked).add("violations", violations);
  if (checked == 0) {
    res.verdict = Verdict::Skip;
    res.detail = "too few grid points";
  } else {
    res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    res.detail = violations == 0 ? "H convex and nondecreasing within 2 sigma" : "H shape violated";
  }
  return res;
}

CheckResult check_pinsker_on_curve(const Series& distances, const FreeEnergyCurve& curve, int batches) {
  CheckResult res{"pinsker_domination"};
  int checked = 0, violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& p : curve.points) {
    if (!(p.w > 0)) continue;
    const CheckResult one = check_pinsker(relative_entropy(curve.stats, p), tv_direct(distances, p, batches), p.w);
    ++checked;
    worst = std::max(worst, one.get("dtv_direct") - one.get("dtv_pinsker"));
    if (one.failed()) {
      ++violations;
      res.add("violation_w", p.w);
    }
  }
  res.add("points", checked).add("violations", violations).add("max_excess", worst);
  if (checked == 0) {
    res.verdict = Verdict::Skip;
    res.detail = "no positive grid point";
  } else {
    res.verdict = violations == 0 ? Verdict::Pass : Verdict::Fail;
    res.detail = violations == 0 ? "d_TV <= sqrt(H / 2) on every grid point" : "Pinsker domination violated";
  }
  return res;
}

}  // namespace gaussfit
